#include <cmath>
#include <limits>

#include "doctest.h"
#include "oracles.hpp"

#include "eigdist/error.hpp"
#include "eigdist/kernels.hpp"
#include "eigdist/random.hpp"

using namespace eigdist;

namespace {

ConvBank single(const KernelSpec& k) { return ConvBank{1, 1, {k}}; }

double sum(const Grid2& g) {
    double s = 0.0;
    for (double v : g.values()) s += v;
    return s;
}

Grid2 ramp(std::size_t h, std::size_t w) {
    Grid2 g(h, w);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) g(r, c) = static_cast<double>(r * w + c);
    }
    return g;
}

}  // namespace

TEST_CASE("gaussian kernel is normalized and peaked at the origin") {
    CHECK(std::abs(sum(gaussian_kernel(0.5).taps) - 1.0) <= 1e-12);
    for (double sigma : {0.3, 0.5, 1.0, 1.7, 3.0}) {
        const KernelSpec k = gaussian_kernel(sigma);
        CHECK(k.taps.height() == 2 * static_cast<std::size_t>(std::ceil(4 * sigma)) + 1);
        CHECK(k.origin_row == k.taps.height() / 2);
        for (double v : k.taps.values()) CHECK(v <= k.center());
    }
}

TEST_CASE("gaussian kernel matches direct summation") {
    for (double sigma : {0.5, 1.0, 2.2}) {
        const KernelSpec k = gaussian_kernel(sigma);
        const auto ref = oracle::gaussian_taps(sigma);
        REQUIRE(ref.size() == k.taps.size());
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(k.taps.values()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
}

TEST_CASE("gaussian kernel is symmetric under rotation and reflection") {
    const KernelSpec k = gaussian_kernel(1.3);
    const std::size_t n = k.taps.height();
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            CHECK(k.taps(r, c) == doctest::Approx(k.taps(c, n - 1 - r)).epsilon(1e-15));
            CHECK(k.taps(r, c) == doctest::Approx(k.taps(r, n - 1 - c)).epsilon(1e-15));
        }
    }
}

TEST_CASE("gaussian kernel rejects bad sigma") {
    CHECK_THROWS_AS(gaussian_kernel(0.0), ParameterDomainError);
    CHECK_THROWS_AS(gaussian_kernel(-1.0), ParameterDomainError);
    CHECK_THROWS_AS(gaussian_kernel(std::numeric_limits<double>::quiet_NaN()), ParameterDomainError);
    CHECK_THROWS_AS(gaussian_kernel(std::numeric_limits<double>::infinity()), ParameterDomainError);
}

TEST_CASE("dog kernel: zero sum and center-surround signs") {
    const KernelSpec k = dog_kernel(0.5, 1.5);
    CHECK(std::abs(sum(k.taps)) <= 1e-12);
    CHECK(k.center() > 0.0);
    CHECK(k.taps(0, 0) < 0.0);
    CHECK(k.taps(0, k.origin_col) < 0.0);
    CHECK(k.taps.height() == gaussian_kernel(1.5).taps.height());
    CHECK_THROWS_AS(dog_kernel(1.5, 1.5), ParameterDomainError);
    CHECK_THROWS_AS(dog_kernel(2.0, 1.0), ParameterDomainError);
    CHECK_THROWS_AS(dog_kernel(0.0, 1.0), ParameterDomainError);
}

TEST_CASE("dog kernel annihilates constant images") {
    for (auto [sc, ss] : {std::pair{0.5, 1.5}, std::pair{0.8, 1.1}, std::pair{1.0, 3.0}}) {
        const Grid2 out = convolve(Grid2(17, 13, 0.37), dog_kernel(sc, ss));
        CHECK(max_abs(out.values()) <= 1e-10);
    }
}

TEST_CASE("dog kernel applied to a centered impulse reproduces the kernel") {
    const KernelSpec k = dog_kernel(0.5, 1.5);
    const std::size_t n = 21, r = k.taps.height() / 2;
    Grid2 impulse(n, n);
    impulse(n / 2, n / 2) = 1.0;
    const Grid2 out = convolve(impulse, k);
    for (std::size_t i = 0; i < k.taps.height(); ++i) {
        for (std::size_t j = 0; j < k.taps.width(); ++j) {
            // Cross-correlation with an impulse gives the kernel flipped; DoG is symmetric.
            CHECK(out(n / 2 - r + i, n / 2 - r + j) == doctest::Approx(k.taps(i, j)).epsilon(1e-14));
        }
    }
}

TEST_CASE("conv2d identity kernel is bit exact") {
    const Grid3 in(gaussian_noise(3, Shape3{1, 9, 7}));
    const Grid3 out = conv2d(in, single(KernelSpec::centered(Grid2(1, 1, 1.0))));
    CHECK(out == in);
}

TEST_CASE("conv2d 3x3 ones on a ramp equals the nested-loop mirror sum") {
    const Grid2 x = ramp(8, 8);
    const Grid2 ones(3, 3, 1.0);
    const Grid3 out = conv2d(Grid3(x), single(KernelSpec::centered(ones)));
    const Grid2 ref = oracle::correlate(x, ones, 1);
    for (std::size_t i = 0; i < 8; ++i) {
        for (std::size_t j = 0; j < 8; ++j) CHECK(out(0, i, j) == ref(i, j));
    }
    // Corner by hand: rows {1,0,1} x cols {1,0,1} of r*8+c.
    CHECK(out(0, 0, 0) == 9 + 8 + 9 + 1 + 0 + 1 + 9 + 8 + 9);
}

TEST_CASE("conv2d random kernels and strides match the oracle") {
    for (std::size_t stride : {1u, 2u, 3u}) {
        const Grid2 x = gaussian_noise(11 + stride, 13, 10);
        const Grid2 k = gaussian_noise(21 + stride, 5, 5);
        const Grid3 out = conv2d(Grid3(x), single(KernelSpec::centered(k)), stride);
        const Grid2 ref = oracle::correlate(x, k, stride);
        REQUIRE(out.height() == ref.height());
        REQUIRE(out.width() == ref.width());
        for (std::size_t i = 0; i < ref.height(); ++i) {
            for (std::size_t j = 0; j < ref.width(); ++j) CHECK(out(0, i, j) == doctest::Approx(ref(i, j)).epsilon(1e-13));
        }
    }
}

TEST_CASE("conv2d output size is ceil(n / stride)") {
    const Grid3 in(Shape3{1, 17, 17}, 0.5);
    const Grid3 out = conv2d(in, single(gaussian_kernel(0.5)), 2);
    CHECK(out.height() == 9);
    CHECK(out.width() == 9);
    CHECK(strided_size(16, 2) == 8);
    CHECK(strided_size(1, 2) == 1);
}

TEST_CASE("conv2d rejects channel mismatch") {
    const Grid3 in(Shape3{2, 8, 8}, 0.0);
    CHECK_THROWS_AS(conv2d(in, single(gaussian_kernel(1.0))), ShapeError);
}

TEST_CASE("conv2d is linear") {
    ConvBank bank{2, 2, {}};
    for (std::uint64_t s = 0; s < 4; ++s) bank.kernels.push_back(KernelSpec::centered(gaussian_noise(40 + s, 5, 5)));
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
        const Shape3 shape{2, 11, 12};
        const Grid3 u = gaussian_noise(100 + trial, shape), v = gaussian_noise(200 + trial, shape);
        Rng rng(300 + trial);
        const double a = 4 * rng.uniform() - 2, b = 4 * rng.uniform() - 2;
        Grid3 mix(shape);
        for (std::size_t i = 0; i < mix.size(); ++i) mix.values()[i] = a * u.values()[i] + b * v.values()[i];
        const Grid3 lhs = conv2d(mix, bank, 2);
        const Grid3 cu = conv2d(u, bank, 2), cv = conv2d(v, bank, 2);
        std::vector<double> rhs(lhs.size());
        for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = a * cu.values()[i] + b * cv.values()[i];
        CHECK(oracle::rel_diff(lhs.values(), rhs) <= 1e-10);
    }
}

TEST_CASE("conv2d transpose is the adjoint") {
    ConvBank bank{3, 2, {}};
    for (std::uint64_t s = 0; s < 6; ++s) bank.kernels.push_back(KernelSpec::centered(gaussian_noise(60 + s, 5, 5)));
    const Shape3 in_shape{2, 9, 14};
    for (std::size_t stride : {1u, 2u}) {
        const Grid3 x = gaussian_noise(7, in_shape);
        const Grid3 y = conv2d(x, bank, stride);
        const Grid3 u = gaussian_noise(8, y.shape());
        const Grid3 xt = conv2d_transpose(u, bank, in_shape, stride);
        const double lhs = dot(u.values(), y.values()), rhs = dot(xt.values(), x.values());
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
    }
}

TEST_CASE("gaussian blur preserves constant images") {
    for (double sigma : {0.5, 1.0, 2.5}) {
        const Grid2 out = convolve(Grid2(12, 9, 0.42), gaussian_kernel(sigma));
        for (double v : out.values()) CHECK(std::abs(v - 0.42) <= 1e-12);
    }
}

TEST_CASE("mirror index reflects without repeating the edge") {
    for (long long n : {1LL, 2LL, 5LL, 8LL}) {
        for (long long i = -20; i < 30; ++i) {
            CHECK(mirror_index(i, static_cast<std::size_t>(n)) == static_cast<std::size_t>(oracle::reflect(i, n)));
        }
    }
    CHECK(mirror_index(-1, 5) == 1);
    CHECK(mirror_index(5, 5) == 3);
}

TEST_CASE("gaussian noise is deterministic and standard normal") {
    CHECK(gaussian_noise(5, 4, 6) == gaussian_noise(5, 4, 6));
    CHECK_FALSE(gaussian_noise(5, 4, 6) == gaussian_noise(6, 4, 6));

    const Grid2 big = gaussian_noise(2024, 1000, 1000);
    double mean = 0.0;
    for (double v : big.values()) mean += v;
    mean /= static_cast<double>(big.size());
    double var = 0.0;
    for (double v : big.values()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(big.size() - 1);
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("rng uniform lies in (0, 1] and streams are independent") {
    Rng rng(9);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
}

TEST_CASE("vector helpers") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        Grid2 v = gaussian_noise(s, 7, 5);
        scale(v.values(), 1.0 + static_cast<double>(s));
        normalize(v.values());
        CHECK(std::abs(l2_norm(v.values()) - 1.0) <= 1e-12);

        const Grid2 a = gaussian_noise(100 + s, 7, 5), b = gaussian_noise(200 + s, 7, 5);
        CHECK(std::abs(dot(a.values(), b.values())) <= l2_norm(a.values()) * l2_norm(b.values()) * (1 + 1e-15));

        Grid2 y = a;
        axpy(2.0, b.values(), y.values());
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.values()[i] == a.values()[i] + 2.0 * b.values()[i]);
    }
    Grid2 zero(3, 3);
    CHECK_THROWS_AS(normalize(zero.values()), InputDomainError);
}

TEST_CASE("grids reject inconsistent data") {
    CHECK_THROWS_AS(Grid2(2, 3, std::vector<double>(5)), ShapeError);
    CHECK_THROWS_AS(Grid3(Shape3{2, 2, 2}, std::vector<double>(7)), ShapeError);
    Grid2 g(2, 2);
    CHECK(g.all_finite());
    g(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(g.all_finite());
}
