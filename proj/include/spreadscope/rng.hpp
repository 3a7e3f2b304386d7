#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace spreadscope {

/// mt19937_64 is specified bit-for-bit by the standard; the distributions
/// are not, so draws go through the helpers below.
using Rng = std::mt19937_64;

/// Counter-based child seed: the i-th stream of `seed` is the same no matter
/// which thread asks for it or in what order.
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index);

/// Uniform integer in [0, n) by rejection sampling; n > 0.
std::size_t uniform_index(Rng& rng, std::size_t n);

}  // namespace spreadscope
