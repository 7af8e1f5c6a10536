#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace eigdist {

struct Shape3 {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t size() const { return channels * height * width; }
    bool operator==(const Shape3&) const = default;
    std::string str() const;
};

/// Single-channel image or filter, row-major.
class Grid2 {
public:
    Grid2() = default;
    Grid2(std::size_t height, std::size_t width, double fill = 0.0);
    Grid2(std::size_t height, std::size_t width, std::vector<double> data);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * width_ + c]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const;
    bool operator==(const Grid2&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> data_;
};

/// Multi-channel response, channel-major then row-major.
class Grid3 {
public:
    Grid3() = default;
    explicit Grid3(Shape3 shape, double fill = 0.0);
    Grid3(Shape3 shape, std::vector<double> data);
    /// Wraps a Grid2 as a one-channel grid.
    explicit Grid3(const Grid2& plane);

    const Shape3& shape() const { return shape_; }
    std::size_t channels() const { return shape_.channels; }
    std::size_t height() const { return shape_.height; }
    std::size_t width() const { return shape_.width; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t c, std::size_t r, std::size_t col) {
        return data_[(c * shape_.height + r) * shape_.width + col];
    }
    double operator()(std::size_t c, std::size_t r, std::size_t col) const {
        return data_[(c * shape_.height + r) * shape_.width + col];
    }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    std::span<double> channel(std::size_t c) {
        return std::span<double>(data_).subspan(c * shape_.height * shape_.width, shape_.height * shape_.width);
    }
    std::span<const double> channel(std::size_t c) const {
        return std::span<const double>(data_).subspan(c * shape_.height * shape_.width,
                                                      shape_.height * shape_.width);
    }

    /// Channel `c` copied out as a Grid2.
    Grid2 plane(std::size_t c) const;

    bool all_finite() const;
    bool operator==(const Grid3&) const = default;

private:
    Shape3 shape_;
    std::vector<double> data_;
};

// Flat vector arithmetic. All reductions run in index order.
double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);
double max_abs(std::span<const double> a);
void scale(std::span<double> a, double factor);
/// y <- y + alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// Scales `a` to unit L2 norm and returns the original norm. Throws InputDomainError on zero.
double normalize(std::span<double> a);

}  // namespace eigdist
