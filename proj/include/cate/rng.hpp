#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace cate {

// All randomness flows through std::mt19937_64 (output sequence fixed by the
// standard) and Boost.Random distributions (portable implementations), so a
// seed reproduces the same draws on every platform.
using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for an independent stream identified by (seed, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0);

double uniform01(Engine& rng);
double standard_normal(Engine& rng);
/// Uniform integer in [0, bound).
std::size_t uniform_index(Engine& rng, std::size_t bound);

/// Fisher-Yates shuffle driven by uniform_index.
template <typename T>
void shuffle(std::vector<T>& v, Engine& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

/// First `k` entries of a random permutation of {0..n-1}.
std::vector<std::size_t> sample_without_replacement(Engine& rng, std::size_t n, std::size_t k);

}  // namespace cate
