#include "wmtkit/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wmtkit::augment {

std::optional<SamplerKind> parse_sampler_kind(std::string_view name) {
  if (name == "topk") return SamplerKind::topk;
  if (name == "topp") return SamplerKind::topp;
  if (name == "dynamic_topp" || name == "dynamic-topp") return SamplerKind::dynamic_topp;
  return std::nullopt;
}

void SamplerSpec::validate() const {
  if (k == 0) throw std::invalid_argument("top-k needs k >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("top-p needs 0 < p <= 1");
  if (!(p_start > 0.0 && p_end <= 1.0 && p_start <= p_end)) {
    throw std::invalid_argument("dynamic top-p needs 0 < p_start <= p_end <= 1");
  }
}

void check_distribution(std::span<const double> dist) {
  if (dist.empty()) throw std::invalid_argument("empty distribution");
  double sum = 0.0;
  for (double v : dist) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("distribution entries must be finite and non-negative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("distribution must sum to 1");
}

namespace {

std::vector<std::size_t> descending_order(std::span<const double> dist) {
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
  return order;
}

std::size_t draw_from(std::span<const double> dist, const std::vector<std::size_t>& support,
                      rng::Engine& engine) {
  double mass = 0.0;
  for (auto i : support) mass += dist[i];
  const double u = rng::uniform01(engine) * mass;
  double cum = 0.0;
  for (auto i : support) {
    cum += dist[i];
    if (u < cum) return i;
  }
  // Rounding at the top end: fall back to the last entry with mass.
  for (auto it = support.rbegin(); it != support.rend(); ++it) {
    if (dist[*it] > 0.0) return *it;
  }
  return support.front();
}

}  // namespace

std::vector<std::size_t> topk_support(std::span<const double> dist, std::size_t k) {
  auto order = descending_order(dist);
  order.resize(std::min(k, order.size()));
  return order;
}

std::vector<std::size_t> nucleus(std::span<const double> dist, double p) {
  auto order = descending_order(dist);
  double cum = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    cum += dist[order[i]];
    if (cum > p) {
      order.resize(i + 1);
      return order;
    }
  }
  return order;
}

TopKDraw sample_topk(std::span<const double> dist, std::size_t k, rng::Engine& engine) {
  check_distribution(dist);
  if (k == 0) throw std::invalid_argument("top-k needs k >= 1");
  TopKDraw draw;
  if (k > dist.size()) {
    draw.k_clamped = true;
    k = dist.size();
  }
  draw.index = draw_from(dist, topk_support(dist, k), engine);
  return draw;
}

std::size_t sample_topp(std::span<const double> dist, double p, rng::Engine& engine) {
  check_distribution(dist);
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("top-p needs 0 < p <= 1");
  return draw_from(dist, nucleus(dist, p), engine);
}

double dynamic_p(double progress, double p_start, double p_end) {
  progress = std::clamp(progress, 0.0, 1.0);
  return p_start + (p_end - p_start) * progress;
}

std::size_t sample(const SamplerSpec& spec, std::span<const double> dist, double progress,
                   rng::Engine& engine) {
  spec.validate();
  switch (spec.kind) {
    case SamplerKind::topk:
      return sample_topk(dist, spec.k, engine).index;
    case SamplerKind::topp:
      return sample_topp(dist, spec.p, engine);
    case SamplerKind::dynamic_topp:
      return sample_topp(dist, dynamic_p(progress, spec.p_start, spec.p_end), engine);
  }
  throw std::invalid_argument("unknown sampler kind");
}

}  // namespace wmtkit::augment
