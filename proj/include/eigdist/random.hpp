#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "eigdist/grid.hpp"

namespace eigdist {

/// Deterministic random source.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniform variates take the top 53 bits: u = (b >> 11 + 1) * 2^-53,
/// so u lies in (0, 1]. Standard normals use the Box-Muller transform on
/// consecutive uniform pairs (u1, u2): sqrt(-2 ln u1) * {cos, sin}(2 pi u2),
/// emitting the cosine branch first and caching the sine branch.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_bits() { return engine_(); }
    /// Uniform on (0, 1].
    double uniform();
    /// Standard normal.
    double normal();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed of an independent stream identified by a path of indices below a
/// master seed, e.g. derive_seed(master, {subject, level, trial}).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Standard-normal noise of the given shape, filled in storage order.
Grid2 gaussian_noise(std::uint64_t seed, std::size_t height, std::size_t width);
Grid3 gaussian_noise(std::uint64_t seed, const Shape3& shape);

}  // namespace eigdist
