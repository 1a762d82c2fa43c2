#include "wmtkit/schedulers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wmtkit::sched {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

std::string to_string(DecayKind kind) {
  switch (kind) {
    case DecayKind::linear: return "linear";
    case DecayKind::exponential: return "exponential";
    case DecayKind::inv_sigmoid: return "inv_sigmoid";
  }
  return "?";
}

std::optional<DecayKind> parse_decay_kind(std::string_view name) {
  if (name == "linear") return DecayKind::linear;
  if (name == "exponential" || name == "exp") return DecayKind::exponential;
  if (name == "inv_sigmoid" || name == "inv-sigmoid" || name == "sigmoid") {
    return DecayKind::inv_sigmoid;
  }
  return std::nullopt;
}

void DecayParams::validate() const {
  require(std::isfinite(k) && std::isfinite(b) && std::isfinite(epsilon),
          "decay parameters must be finite");
  switch (kind) {
    case DecayKind::linear:
      require(k < 0.0, "linear decay needs k < 0");
      require(epsilon >= 0.0 && epsilon <= 1.0, "linear decay needs epsilon in [0, 1]");
      break;
    case DecayKind::exponential:
      require(k > 0.0 && k < 1.0, "exponential decay needs 0 < k < 1");
      break;
    case DecayKind::inv_sigmoid:
      require(k >= 1.0, "inverse sigmoid decay needs k >= 1");
      break;
  }
}

DecayParams DecayParams::defaults(DecayKind kind) {
  DecayParams p;
  p.kind = kind;
  switch (kind) {
    case DecayKind::linear: p.k = -0.005; break;
    case DecayKind::exponential: p.k = 0.99; break;
    case DecayKind::inv_sigmoid: p.k = 10.0; break;
  }
  return p;
}

double decay(double t, const DecayParams& params) {
  params.validate();
  require(t >= 0.0, "decay step must be non-negative");
  double g = 0.0;
  switch (params.kind) {
    case DecayKind::linear: g = std::max(params.epsilon, params.k * t + params.b); break;
    case DecayKind::exponential: g = std::pow(params.k, t); break;
    case DecayKind::inv_sigmoid: g = params.k / (params.k + std::exp(t / params.k)); break;
  }
  return std::clamp(g, 0.0, 1.0);
}

void ConfidenceThresholds::validate() const {
  require(t_golden > 0.0 && t_golden <= t_rand && t_rand <= 1.0,
          "thresholds need 0 < t_golden <= t_rand <= 1");
}

double model_confidence(std::span<const double> dist, std::size_t gold_index) {
  require(gold_index < dist.size(), "gold index " + std::to_string(gold_index) +
                                        " outside a distribution of size " +
                                        std::to_string(dist.size()));
  double total = 0.0;
  for (double p : dist) {
    require(p >= 0.0, "distribution has a negative entry");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-6, "distribution does not sum to 1");
  return dist[gold_index];
}

std::string to_string(TokenChoice choice) {
  switch (choice) {
    case TokenChoice::golden: return "golden";
    case TokenChoice::predicted: return "predicted";
    case TokenChoice::random: return "random";
  }
  return "?";
}

TokenChoice confidence_choice_basic(double conf, const ConfidenceThresholds& th) {
  th.validate();
  return conf <= th.t_golden ? TokenChoice::golden : TokenChoice::predicted;
}

TokenChoice confidence_choice_noisy(double conf, const ConfidenceThresholds& th) {
  th.validate();
  if (conf <= th.t_golden) return TokenChoice::golden;
  if (conf <= th.t_rand) return TokenChoice::predicted;
  return TokenChoice::random;
}

double graduated_smoothing_penalty(double conf) {
  if (conf > 0.7) return 0.3;
  if (conf < 0.3) return 0.0;
  return 0.1;
}

std::vector<double> smoothed_target_distribution(std::size_t gold_index, std::size_t vocab_size,
                                                 double smoothing) {
  require(vocab_size >= 2, "vocabulary size must be at least 2");
  require(gold_index < vocab_size, "gold index outside the vocabulary");
  require(smoothing >= 0.0 && smoothing < 1.0, "smoothing must lie in [0, 1)");
  std::vector<double> dist(vocab_size, smoothing / static_cast<double>(vocab_size - 1));
  dist[gold_index] = 1.0 - smoothing;
  return dist;
}

}  // namespace wmtkit::sched
