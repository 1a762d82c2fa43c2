#pragma once

// Scheduled-sampling decays, confidence-aware token choice and graduated
// label smoothing. All functions are pure.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wmtkit::sched {

enum class DecayKind { linear, exponential, inv_sigmoid };

std::string to_string(DecayKind kind);
std::optional<DecayKind> parse_decay_kind(std::string_view name);

struct DecayParams {
  DecayKind kind = DecayKind::exponential;
  double k = 0.99;
  double b = 1.0;         // linear intercept
  double epsilon = 0.1;   // linear floor

  /// linear: k < 0; exponential: 0 < k < 1; inv_sigmoid: k >= 1; epsilon in [0, 1].
  /// Throws std::invalid_argument otherwise.
  void validate() const;

  /// Defaults per kind: linear k = -0.005, exponential k = 0.99, inv_sigmoid k = 10.
  static DecayParams defaults(DecayKind kind);
};

/// Probability of feeding the golden token at step t, clamped to [0, 1].
/// Throws std::invalid_argument for invalid params or t < 0.
double decay(double t, const DecayParams& params);

struct ConfidenceThresholds {
  double t_golden = 0.9;
  double t_rand = 0.95;

  /// Throws std::invalid_argument unless 0 < t_golden <= t_rand <= 1.
  void validate() const;
};

/// dist[gold]. Throws std::invalid_argument for an out-of-range index or a
/// distribution whose mass is not 1 within 1e-6.
double model_confidence(std::span<const double> dist, std::size_t gold_index);

enum class TokenChoice { golden, predicted, random };

std::string to_string(TokenChoice choice);

/// golden iff conf <= t_golden, else predicted.
TokenChoice confidence_choice_basic(double conf, const ConfidenceThresholds& th = {});

/// golden if conf <= t_golden; predicted if conf <= t_rand; random otherwise.
TokenChoice confidence_choice_noisy(double conf, const ConfidenceThresholds& th = {});

template <typename Token>
Token confidence_schedule_basic(double conf, const Token& golden, const Token& predicted,
                                const ConfidenceThresholds& th = {}) {
  return confidence_choice_basic(conf, th) == TokenChoice::golden ? golden : predicted;
}

template <typename Token>
Token confidence_schedule_noisy(double conf, const Token& golden, const Token& predicted,
                                const Token& random_token, const ConfidenceThresholds& th = {}) {
  switch (confidence_choice_noisy(conf, th)) {
    case TokenChoice::golden: return golden;
    case TokenChoice::predicted: return predicted;
    case TokenChoice::random: break;
  }
  return random_token;
}

/// 0.3 if conf > 0.7, 0 if conf < 0.3, else 0.1.
double graduated_smoothing_penalty(double conf);

/// 1 - s on the gold index, s / (V - 1) elsewhere.
/// Throws std::invalid_argument unless V >= 2, gold < V and 0 <= s < 1.
std::vector<double> smoothed_target_distribution(std::size_t gold_index, std::size_t vocab_size,
                                                 double smoothing);

}  // namespace wmtkit::sched
