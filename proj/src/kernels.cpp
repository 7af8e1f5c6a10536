#include "eigdist/kernels.hpp"

#include <cmath>

#include "eigdist/error.hpp"

namespace eigdist {

namespace {

void check_sigma(double sigma, const char* what) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ParameterDomainError(std::string(what) + " must be positive and finite, got " +
                                   std::to_string(sigma));
    }
}

// Per-output-position mirrored input indices, one row per output index.
std::vector<std::size_t> index_table(std::size_t out_n, std::size_t in_n, std::size_t taps,
                                     std::size_t origin, std::size_t stride) {
    std::vector<std::size_t> table(out_n * taps);
    for (std::size_t i = 0; i < out_n; ++i) {
        for (std::size_t p = 0; p < taps; ++p) {
            const long long pos = static_cast<long long>(i * stride + p) - static_cast<long long>(origin);
            table[i * taps + p] = mirror_index(pos, in_n);
        }
    }
    return table;
}

struct Footprint {
    std::size_t kh, kw, r0, c0;
};

Footprint bank_footprint(const ConvBank& bank) {
    if (bank.kernels.size() != bank.out_channels * bank.in_channels || bank.kernels.empty()) {
        throw ShapeError("conv2d: kernel bank has " + std::to_string(bank.kernels.size()) +
                         " kernels for " + std::to_string(bank.out_channels) + "x" +
                         std::to_string(bank.in_channels) + " channels");
    }
    const auto& k0 = bank.kernels.front();
    Footprint f{k0.taps.height(), k0.taps.width(), k0.origin_row, k0.origin_col};
    for (const auto& k : bank.kernels) {
        if (k.taps.height() != f.kh || k.taps.width() != f.kw || k.origin_row != f.r0 || k.origin_col != f.c0) {
            throw ShapeError("conv2d: kernels in a bank must share one footprint");
        }
    }
    return f;
}

void check_stride(std::size_t stride) {
    if (stride < 1) throw ParameterDomainError("conv2d: stride must be >= 1");
}

ConvBank single_bank(const KernelSpec& k) {
    ConvBank b;
    b.out_channels = 1;
    b.in_channels = 1;
    b.kernels.push_back(k);
    return b;
}

}  // namespace

KernelSpec KernelSpec::centered(Grid2 taps) {
    if (taps.height() % 2 == 0 || taps.width() % 2 == 0) {
        throw ShapeError("kernel dimensions must be odd, got " + std::to_string(taps.height()) + "x" +
                         std::to_string(taps.width()));
    }
    KernelSpec k;
    k.origin_row = taps.height() / 2;
    k.origin_col = taps.width() / 2;
    k.taps = std::move(taps);
    return k;
}

std::size_t gaussian_radius(double sigma) {
    check_sigma(sigma, "gaussian sigma");
    return static_cast<std::size_t>(std::ceil(4.0 * sigma));
}

KernelSpec gaussian_kernel(double sigma) {
    const std::size_t r = gaussian_radius(sigma);
    const std::size_t n = 2 * r + 1;
    Grid2 taps(n, n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double di = static_cast<double>(i) - static_cast<double>(r);
            const double dj = static_cast<double>(j) - static_cast<double>(r);
            taps(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
            total += taps(i, j);
        }
    }
    scale(taps.values(), 1.0 / total);
    return KernelSpec::centered(std::move(taps));
}

KernelSpec gaussian_kernel_dsigma(double sigma) {
    // g_ij = e_ij / Z, de_ij/dsigma = e_ij r2_ij / sigma^3, so
    // dg_ij = g_ij (r2_ij - sum_k g_k r2_k) / sigma^3.
    KernelSpec g = gaussian_kernel(sigma);
    const std::size_t n = g.taps.height();
    const std::size_t r = g.origin_row;
    Grid2 r2(n, n);
    double mean_r2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double di = static_cast<double>(i) - static_cast<double>(r);
            const double dj = static_cast<double>(j) - static_cast<double>(r);
            r2(i, j) = di * di + dj * dj;
            mean_r2 += g.taps(i, j) * r2(i, j);
        }
    }
    const double s3 = sigma * sigma * sigma;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            g.taps(i, j) = g.taps(i, j) * (r2(i, j) - mean_r2) / s3;
        }
    }
    return g;
}

KernelSpec pad_kernel(const KernelSpec& k, std::size_t radius) {
    const std::size_t n = 2 * radius + 1;
    if (k.origin_row > radius || k.origin_col > radius) {
        throw ShapeError("pad_kernel: target radius smaller than kernel");
    }
    Grid2 taps(n, n);
    const std::size_t dr = radius - k.origin_row;
    const std::size_t dc = radius - k.origin_col;
    for (std::size_t i = 0; i < k.taps.height(); ++i) {
        for (std::size_t j = 0; j < k.taps.width(); ++j) taps(i + dr, j + dc) = k.taps(i, j);
    }
    return KernelSpec::centered(std::move(taps));
}

KernelSpec dog_kernel(double sigma_center, double sigma_surround) {
    check_sigma(sigma_center, "DoG center sigma");
    check_sigma(sigma_surround, "DoG surround sigma");
    if (!(sigma_center < sigma_surround)) {
        throw ParameterDomainError("DoG requires sigma_center < sigma_surround, got " +
                                   std::to_string(sigma_center) + " >= " + std::to_string(sigma_surround));
    }
    const KernelSpec surround = gaussian_kernel(sigma_surround);
    KernelSpec out = pad_kernel(gaussian_kernel(sigma_center), surround.origin_row);
    axpy(-1.0, surround.taps.values(), out.taps.values());
    return out;
}

std::size_t mirror_index(long long i, std::size_t n) {
    if (n == 0) throw ShapeError("mirror_index: empty axis");
    if (n == 1) return 0;
    const long long period = 2 * (static_cast<long long>(n) - 1);
    long long t = i % period;
    if (t < 0) t += period;
    if (t >= static_cast<long long>(n)) t = period - t;
    return static_cast<std::size_t>(t);
}

std::size_t strided_size(std::size_t n, std::size_t stride) { return (n + stride - 1) / stride; }

Grid3 conv2d(const Grid3& input, const ConvBank& bank, std::size_t stride) {
    check_stride(stride);
    const Footprint f = bank_footprint(bank);
    if (bank.in_channels != input.channels()) {
        throw ShapeError("conv2d: kernel bank expects " + std::to_string(bank.in_channels) +
                         " input channels, got " + std::to_string(input.channels()));
    }
    const std::size_t H = input.height(), W = input.width();
    const std::size_t oh = strided_size(H, stride), ow = strided_size(W, stride);
    const auto rows = index_table(oh, H, f.kh, f.r0, stride);
    const auto cols = index_table(ow, W, f.kw, f.c0, stride);

    Grid3 out(Shape3{bank.out_channels, oh, ow});
    for (std::size_t o = 0; o < bank.out_channels; ++o) {
        for (std::size_t i = 0; i < oh; ++i) {
            const std::size_t* ri = &rows[i * f.kh];
            for (std::size_t j = 0; j < ow; ++j) {
                const std::size_t* cj = &cols[j * f.kw];
                double acc = 0.0;
                for (std::size_t c = 0; c < bank.in_channels; ++c) {
                    const Grid2& k = bank.at(o, c).taps;
                    const auto plane = input.channel(c);
                    for (std::size_t p = 0; p < f.kh; ++p) {
                        const double* src = plane.data() + ri[p] * W;
                        const double* kr = &k.data()[p * f.kw];
                        for (std::size_t q = 0; q < f.kw; ++q) acc += kr[q] * src[cj[q]];
                    }
                }
                out(o, i, j) = acc;
            }
        }
    }
    return out;
}

Grid3 conv2d_transpose(const Grid3& cotangent, const ConvBank& bank, const Shape3& input_shape,
                       std::size_t stride) {
    check_stride(stride);
    const Footprint f = bank_footprint(bank);
    const std::size_t H = input_shape.height, W = input_shape.width;
    const std::size_t oh = strided_size(H, stride), ow = strided_size(W, stride);
    if (bank.in_channels != input_shape.channels ||
        cotangent.shape() != Shape3{bank.out_channels, oh, ow}) {
        throw ShapeError("conv2d_transpose: cotangent " + cotangent.shape().str() +
                         " incompatible with input " + input_shape.str());
    }
    const auto rows = index_table(oh, H, f.kh, f.r0, stride);
    const auto cols = index_table(ow, W, f.kw, f.c0, stride);

    Grid3 out(input_shape);
    for (std::size_t o = 0; o < bank.out_channels; ++o) {
        for (std::size_t i = 0; i < oh; ++i) {
            const std::size_t* ri = &rows[i * f.kh];
            for (std::size_t j = 0; j < ow; ++j) {
                const std::size_t* cj = &cols[j * f.kw];
                const double u = cotangent(o, i, j);
                if (u == 0.0) continue;
                for (std::size_t c = 0; c < bank.in_channels; ++c) {
                    const Grid2& k = bank.at(o, c).taps;
                    auto plane = out.channel(c);
                    for (std::size_t p = 0; p < f.kh; ++p) {
                        double* dst = plane.data() + ri[p] * W;
                        const double* kr = &k.data()[p * f.kw];
                        for (std::size_t q = 0; q < f.kw; ++q) dst[cj[q]] += kr[q] * u;
                    }
                }
            }
        }
    }
    return out;
}

ConvBank conv2d_kernel_grad(const Grid3& input, const Grid3& cotangent, const ConvBank& bank,
                            std::size_t stride) {
    check_stride(stride);
    const Footprint f = bank_footprint(bank);
    const std::size_t H = input.height(), W = input.width();
    const std::size_t oh = strided_size(H, stride), ow = strided_size(W, stride);
    if (bank.in_channels != input.channels() || cotangent.shape() != Shape3{bank.out_channels, oh, ow}) {
        throw ShapeError("conv2d_kernel_grad: cotangent " + cotangent.shape().str() +
                         " incompatible with input " + input.shape().str());
    }
    const auto rows = index_table(oh, H, f.kh, f.r0, stride);
    const auto cols = index_table(ow, W, f.kw, f.c0, stride);

    ConvBank grad = bank;
    for (auto& k : grad.kernels) std::fill(k.taps.values().begin(), k.taps.values().end(), 0.0);
    for (std::size_t o = 0; o < bank.out_channels; ++o) {
        for (std::size_t c = 0; c < bank.in_channels; ++c) {
            Grid2& g = grad.at(o, c).taps;
            const auto plane = input.channel(c);
            for (std::size_t i = 0; i < oh; ++i) {
                const std::size_t* ri = &rows[i * f.kh];
                for (std::size_t j = 0; j < ow; ++j) {
                    const std::size_t* cj = &cols[j * f.kw];
                    const double u = cotangent(o, i, j);
                    if (u == 0.0) continue;
                    for (std::size_t p = 0; p < f.kh; ++p) {
                        const double* src = plane.data() + ri[p] * W;
                        for (std::size_t q = 0; q < f.kw; ++q) g(p, q) += u * src[cj[q]];
                    }
                }
            }
        }
    }
    return grad;
}

Grid2 convolve(const Grid2& input, const KernelSpec& k) {
    return conv2d(Grid3(input), single_bank(k)).plane(0);
}

Grid2 convolve_transpose(const Grid2& cotangent, const KernelSpec& k) {
    return conv2d_transpose(Grid3(cotangent), single_bank(k), Shape3{1, cotangent.height(), cotangent.width()})
        .plane(0);
}

Grid2 convolve_kernel_grad(const Grid2& input, const Grid2& cotangent, const KernelSpec& k) {
    return conv2d_kernel_grad(Grid3(input), Grid3(cotangent), single_bank(k)).kernels.front().taps;
}

}  // namespace eigdist
