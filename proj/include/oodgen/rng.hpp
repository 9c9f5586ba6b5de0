#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "oodgen/matrix.hpp"

namespace oodgen {

/// Seeded pseudo-random stream (xoshiro256++ state, splitmix64 expansion).
/// The same seed and the same call sequence reproduce the same stream on any
/// platform; Gaussian draws go through Box-Muller rather than the standard
/// library distributions, which are not portable across implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform();
    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n);

    /// Standard normal draw via Box-Muller. Each call consumes exactly two
    /// uniforms; no spare value is cached, so the stream position is a pure
    /// function of the call count.
    double gaussian();

    void fill_gaussian(std::span<double> out);
    void fill_gaussian(DenseMatrix& m) { fill_gaussian(std::span<double>(m.data)); }

private:
    std::array<std::uint64_t, 4> state_;
};

/// Deterministic sub-seed for a named stage or chain, so stages can be rerun
/// independently without replaying the master stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

}  // namespace oodgen
