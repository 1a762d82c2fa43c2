#pragma once

// Decoding-distribution samplers for synthetic data generation. They act on
// externally supplied next-token distributions.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "wmtkit/random.hpp"

namespace wmtkit::augment {

enum class SamplerKind { topk, topp, dynamic_topp };

std::optional<SamplerKind> parse_sampler_kind(std::string_view name);

struct SamplerSpec {
  SamplerKind kind = SamplerKind::topk;
  std::size_t k = 10;
  double p = 0.9;
  double p_start = 0.9;
  double p_end = 0.95;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Throws std::invalid_argument unless entries are >= 0 and sum to 1 +- 1e-6.
void check_distribution(std::span<const double> dist);

/// Indices of the k most probable entries, probability-descending; equal
/// probabilities keep the lower index first.
std::vector<std::size_t> topk_support(std::span<const double> dist, std::size_t k);

/// Smallest probability-descending prefix whose mass strictly exceeds p; the
/// whole support when no prefix does.
std::vector<std::size_t> nucleus(std::span<const double> dist, double p);

struct TopKDraw {
  std::size_t index = 0;
  bool k_clamped = false;  // k exceeded the vocabulary and was clamped
};

TopKDraw sample_topk(std::span<const double> dist, std::size_t k, rng::Engine& engine);

std::size_t sample_topp(std::span<const double> dist, double p, rng::Engine& engine);

/// Linear schedule from p_start to p_end over progress in [0, 1] (clamped).
double dynamic_p(double progress, double p_start = 0.9, double p_end = 0.95);

/// Dispatches on spec.kind; `progress` is only read by dynamic_topp.
std::size_t sample(const SamplerSpec& spec, std::span<const double> dist, double progress,
                   rng::Engine& engine);

}  // namespace wmtkit::augment
