#pragma once

// Randomized invariant checks over the kernels, shared by `kernel-check`.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wmtkit/matrix.hpp"

namespace wmtkit::kernels {

struct InvariantConfig {
  std::uint64_t seed = 1;
  std::size_t trials = 50;
  std::size_t max_dim = 6;  // upper bound for sequence length, width and heads
  /// Extra talking-heads mixers to causality-check (both h x h).
  std::optional<Matrix> w_l, w_w;
};

struct InvariantResult {
  std::string name;
  bool passed = true;
  double worst = 0.0;  // largest observed deviation
  double tolerance = 0.0;
  std::size_t trials = 0;
  std::string detail;
};

std::vector<InvariantResult> run_kernel_invariants(const InvariantConfig& config);

}  // namespace wmtkit::kernels
