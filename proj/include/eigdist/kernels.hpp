#pragma once

#include <cstddef>
#include <vector>

#include "eigdist/grid.hpp"

namespace eigdist {

/// 2-D filter with an explicit center tap. Height and width are odd and the
/// origin is the geometric center.
struct KernelSpec {
    Grid2 taps;
    std::size_t origin_row = 0;
    std::size_t origin_col = 0;

    static KernelSpec centered(Grid2 taps);
    double center() const { return taps(origin_row, origin_col); }
};

/// Kernel bank indexed [out][in]; all entries must share one footprint size.
struct ConvBank {
    std::size_t out_channels = 0;
    std::size_t in_channels = 0;
    std::vector<KernelSpec> kernels;  // out-major

    const KernelSpec& at(std::size_t out, std::size_t in) const { return kernels[out * in_channels + in]; }
    KernelSpec& at(std::size_t out, std::size_t in) { return kernels[out * in_channels + in]; }
};

/// Truncation radius used by gaussian_kernel: ceil(4 sigma).
std::size_t gaussian_radius(double sigma);

/// Isotropic Gaussian, truncated at ceil(4 sigma), renormalized to unit sum.
KernelSpec gaussian_kernel(double sigma);

/// d(gaussian_kernel(sigma))/d(sigma) on the same support, holding the
/// truncation radius fixed.
KernelSpec gaussian_kernel_dsigma(double sigma);

/// Unit-sum center Gaussian minus unit-sum surround Gaussian on the
/// surround's support. Requires 0 < sigma_center < sigma_surround.
KernelSpec dog_kernel(double sigma_center, double sigma_surround);

/// Embeds `k` centered in a zero kernel with the given radius (>= k's radius).
KernelSpec pad_kernel(const KernelSpec& k, std::size_t radius);

/// Reflect-without-repeat index folding; valid for any integer and n >= 1.
std::size_t mirror_index(long long i, std::size_t n);

/// Output size of a strided convolution: ceil(n / stride).
std::size_t strided_size(std::size_t n, std::size_t stride);

/// Cross-correlation with mirror boundaries. out(o,i,j) = sum over c, then
/// kernel rows, then kernel columns of k[o][c](p,q) * in(c, i*s+p-r, j*s+q-r).
Grid3 conv2d(const Grid3& input, const ConvBank& bank, std::size_t stride = 1);

/// Adjoint of conv2d with respect to its input.
Grid3 conv2d_transpose(const Grid3& cotangent, const ConvBank& bank, const Shape3& input_shape,
                       std::size_t stride = 1);

/// Gradient of <cotangent, conv2d(input, bank)> with respect to every tap,
/// laid out like `bank`.
ConvBank conv2d_kernel_grad(const Grid3& input, const Grid3& cotangent, const ConvBank& bank,
                            std::size_t stride = 1);

/// Single-kernel helpers on one plane.
Grid2 convolve(const Grid2& input, const KernelSpec& k);
Grid2 convolve_transpose(const Grid2& cotangent, const KernelSpec& k);
/// Gradient of <cotangent, convolve(input, k)> with respect to k's taps.
Grid2 convolve_kernel_grad(const Grid2& input, const Grid2& cotangent, const KernelSpec& k);

}  // namespace eigdist
