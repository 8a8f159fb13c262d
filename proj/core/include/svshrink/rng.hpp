#pragma once

#include "svshrink/linalg.hpp"

#include <cstdint>
#include <random>

namespace svshrink {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Independent stream seed for replication `index` under `root`.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

/// Uniform on [0,1) with 53 random bits; independent of the standard
/// library's distribution implementations.
double uniform01(Rng &rng);

/// Matrix of independent +1/-1 entries with equal probability.
Matrix rademacher(Index rows, Index cols, Rng &rng);

} // namespace svshrink
