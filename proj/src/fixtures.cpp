#include "eigdist/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "eigdist/kernels.hpp"
#include "eigdist/random.hpp"

namespace eigdist {

Grid2 fixture_image(std::uint64_t seed, std::size_t height, std::size_t width) {
    Rng rng(derive_seed(seed, {0xf1}));
    Grid2 field = convolve(gaussian_noise(derive_seed(seed, {0xf2}), height, width), gaussian_kernel(2.0));
    const double spread = max_abs(field.values());
    if (spread > 0.0) scale(field.values(), 0.25 / spread);

    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    const double contrast = 0.15 + 0.2 * rng.uniform();
    const double cy = (0.3 + 0.4 * rng.uniform()) * static_cast<double>(height);
    const double cx = (0.3 + 0.4 * rng.uniform()) * static_cast<double>(width);
    const double nx = std::cos(angle), ny = std::sin(angle);

    Grid2 img(height, width);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const double d = (static_cast<double>(r) - cy) * ny + (static_cast<double>(c) - cx) * nx;
            // Smooth step, about one pixel wide.
            const double edge = contrast * std::tanh(1.5 * d);
            img(r, c) = std::clamp(0.5 + field(r, c) + edge, 0.02, 0.98);
        }
    }
    return img;
}

}  // namespace eigdist
