#pragma once

#include <cstdint>

#include "eigdist/grid.hpp"

namespace eigdist {

/// Seeded synthetic luminance image in [0.02, 0.98]: a smooth random field
/// plus one oriented luminance edge. Used as a stand-in for natural images
/// in tests, examples and synthetic datasets.
Grid2 fixture_image(std::uint64_t seed, std::size_t height, std::size_t width);

}  // namespace eigdist
