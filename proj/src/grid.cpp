#include "eigdist/grid.hpp"

#include <cmath>

#include "eigdist/error.hpp"

namespace eigdist {

namespace {

bool finite_all(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void require_same_size(std::span<const double> a, std::span<const double> b, const char* op) {
    if (a.size() != b.size()) {
        throw ShapeError(std::string(op) + ": length mismatch " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    }
}

}  // namespace

std::string Shape3::str() const {
    return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

Grid2::Grid2(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(height * width, fill) {}

Grid2::Grid2(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != height_ * width_) {
        throw ShapeError("Grid2: data length " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(height_) + "x" + std::to_string(width_));
    }
}

bool Grid2::all_finite() const { return finite_all(data_); }

Grid3::Grid3(Shape3 shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

Grid3::Grid3(Shape3 shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
        throw ShapeError("Grid3: data length " + std::to_string(data_.size()) + " does not match " +
                         shape_.str());
    }
}

Grid3::Grid3(const Grid2& plane)
    : shape_{1, plane.height(), plane.width()}, data_(plane.data()) {}

Grid2 Grid3::plane(std::size_t c) const {
    auto ch = channel(c);
    return Grid2(shape_.height, shape_.width, std::vector<double>(ch.begin(), ch.end()));
}

bool Grid3::all_finite() const { return finite_all(data_); }

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(std::span<const double> a) {
    // Scaled accumulation avoids overflow for large entries.
    const double m = max_abs(a);
    if (m == 0.0 || !std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : a) {
        const double y = x / m;
        s += y * y;
    }
    return m * std::sqrt(s);
}

double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

void scale(std::span<double> a, double factor) {
    for (double& x : a) x *= factor;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    require_same_size(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double normalize(std::span<double> a) {
    const double n = l2_norm(a);
    if (n == 0.0) throw InputDomainError("normalize: zero vector");
    scale(a, 1.0 / n);
    return n;
}

}  // namespace eigdist
