#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ball3d {

using Rng = std::mt19937_64;

/// Independent generator for the named sub-stream `name` (and optional index) of `seed`.
///
/// Every consumer of randomness derives its own stream from the run seed, so adding a
/// new consumer never perturbs the draws of an existing one.
Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double normal(Rng& rng, double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(rng);
}

}  // namespace ball3d
