#include "eigdist/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace eigdist {

double Rng::uniform() {
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    return static_cast<double>((engine_() >> 11) + 1) * kScale;
}

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n <= 1) return 0;
    // Rejection sampling keeps the result unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(master);
    for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

Grid2 gaussian_noise(std::uint64_t seed, std::size_t height, std::size_t width) {
    Rng rng(seed);
    Grid2 g(height, width);
    for (double& v : g.values()) v = rng.normal();
    return g;
}

Grid3 gaussian_noise(std::uint64_t seed, const Shape3& shape) {
    Rng rng(seed);
    Grid3 g(shape);
    for (double& v : g.values()) v = rng.normal();
    return g;
}

}  // namespace eigdist
