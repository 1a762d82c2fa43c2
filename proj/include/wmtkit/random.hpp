#pragma once

// Portable random helpers. std::mt19937_64's output sequence is fixed by the
// standard, but the <random> distributions are not, so everything that feeds
// golden fixtures goes through these functions instead.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace wmtkit::rng {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Independent stream seed for (seed, epoch, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t epoch, std::uint64_t index);

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Engine& engine);

/// Uniform integer in [0, n); n must be positive.
std::size_t uniform_index(Engine& engine, std::size_t n);

inline bool bernoulli(Engine& engine, double p) { return uniform01(engine) < p; }

template <typename T>
void shuffle(std::span<T> items, Engine& engine) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_index(engine, i)]);
  }
}

}  // namespace wmtkit::rng
