#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace poisonprobe {

using Rng = std::mt19937_64;

/// Uniform integer in [0, bound) by rejection sampling; unlike
/// std::uniform_int_distribution the draw sequence is fixed by the engine alone.
std::size_t uniform_index(Rng& rng, std::size_t bound);

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
double uniform_unit(Rng& rng);

/// SplitMix64 finalizer, used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace poisonprobe
