#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "eigdist/grid.hpp"
#include "eigdist/kernels.hpp"

namespace eigdist {

/// A stage evaluated at a fixed point, with the intermediates needed for its
/// derivatives cached. jvp and vjp are linear and mutually adjoint.
class StageLinearization {
public:
    virtual ~StageLinearization() = default;

    virtual const Grid3& output() const = 0;
    virtual Grid3 jvp(const Grid3& tangent) const = 0;
    virtual Grid3 vjp(const Grid3& cotangent) const = 0;
    /// Gradient of <cotangent, output> with respect to the stage's own
    /// parameters, in the order documented by the stage. Empty for
    /// parameter-free stages.
    virtual std::vector<double> param_vjp(const Grid3& cotangent) const;
};

/// One differentiable map Grid3 -> Grid3 with hand-derived derivatives.
/// Stages must be smooth everywhere on their input domain.
class Stage {
public:
    virtual ~Stage() = default;

    virtual std::string name() const = 0;
    /// Throws ShapeError when the stage cannot accept `input`.
    virtual Shape3 output_shape(const Shape3& input) const = 0;
    virtual Grid3 forward(const Grid3& x) const = 0;
    virtual std::unique_ptr<StageLinearization> linearize(const Grid3& x) const = 0;
    virtual std::size_t param_count() const { return 0; }

    Grid3 jvp(const Grid3& x, const Grid3& tangent) const { return linearize(x)->jvp(tangent); }
    Grid3 vjp(const Grid3& x, const Grid3& cotangent) const { return linearize(x)->vjp(cotangent); }
};

using StagePtr = std::shared_ptr<const Stage>;

/// y = factor * x
class ScaleStage final : public Stage {
public:
    explicit ScaleStage(double factor);
    std::string name() const override { return "scale"; }
    Shape3 output_shape(const Shape3& input) const override { return input; }
    Grid3 forward(const Grid3& x) const override;
    std::unique_ptr<StageLinearization> linearize(const Grid3& x) const override;
    double factor() const { return factor_; }

private:
    double factor_;
};

/// Elementwise log(1 + exp(x)), evaluated as max(x, 0) + log1p(exp(-|x|)).
class SoftplusStage final : public Stage {
public:
    std::string name() const override { return "softplus"; }
    Shape3 output_shape(const Shape3& input) const override { return input; }
    Grid3 forward(const Grid3& x) const override;
    std::unique_ptr<StageLinearization> linearize(const Grid3& x) const override;
};

double softplus(double x);
/// d softplus / dx = 1 / (1 + exp(-x))
double softplus_derivative(double x);
/// Inverse of softplus on (0, inf).
double softplus_inverse(double y);

/// Dense row-major matrix used for linear test stages and oracles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    static Matrix identity(std::size_t n);
    std::vector<double> apply(std::span<const double> v) const;
    std::vector<double> apply_transpose(std::span<const double> u) const;
    Matrix transpose() const;
    Matrix operator*(const Matrix& rhs) const;
};

/// y = A x on flattened grids.
class DenseLinearStage final : public Stage {
public:
    DenseLinearStage(Matrix a, Shape3 input, Shape3 output);
    std::string name() const override { return "dense"; }
    Shape3 output_shape(const Shape3& input) const override;
    Grid3 forward(const Grid3& x) const override;
    std::unique_ptr<StageLinearization> linearize(const Grid3& x) const override;

private:
    Matrix a_;
    Shape3 in_, out_;
};

/// Mirror-boundary convolution bank. Parameters are the taps, flattened
/// [out][in][row][col].
class ConvStage final : public Stage {
public:
    ConvStage(ConvBank bank, std::size_t stride);
    std::string name() const override { return "conv"; }
    Shape3 output_shape(const Shape3& input) const override;
    Grid3 forward(const Grid3& x) const override;
    std::unique_ptr<StageLinearization> linearize(const Grid3& x) const override;
    std::size_t param_count() const override;
    const ConvBank& bank() const { return bank_; }
    std::size_t stride() const { return stride_; }

private:
    ConvBank bank_;
    std::size_t stride_;
};

class ModelChain;

/// A ModelChain linearized at one input image.
class Linearization {
public:
    const Grid3& output() const { return output_; }
    const Grid2& point() const { return point_; }
    Grid3 jvp(const Grid2& tangent) const;
    Grid2 vjp(const Grid3& cotangent) const;
    /// Concatenated per-stage parameter gradients of <cotangent, output>.
    std::vector<double> param_vjp(const Grid3& cotangent) const;

private:
    friend class ModelChain;
    Shape3 input_shape_;
    Shape3 output_shape_;
    Grid2 point_;
    Grid3 output_;
    std::vector<StagePtr> owners_;  // keeps stages referenced by the linearizations alive
    std::vector<std::unique_ptr<StageLinearization>> stages_;
};

/// Ordered composition of stages mapping a single-channel image to a
/// response grid. Immutable after construction.
class ModelChain {
public:
    ModelChain(std::size_t height, std::size_t width, std::vector<StagePtr> stages);

    const Shape3& input_shape() const { return input_shape_; }
    const Shape3& output_shape() const { return output_shape_; }
    /// N: number of pixels.
    std::size_t input_size() const { return input_shape_.size(); }
    /// M: number of response coefficients.
    std::size_t output_size() const { return output_shape_.size(); }
    const std::vector<StagePtr>& stages() const { return stages_; }
    std::size_t param_count() const;

    Grid3 forward(const Grid2& x) const;
    /// Output of every stage, in order (index k is the output of stage k).
    std::vector<Grid3> stage_outputs(const Grid2& x) const;
    Linearization linearize(const Grid2& x) const;
    Grid3 jvp(const Grid2& x, const Grid2& tangent) const;
    Grid2 vjp(const Grid2& x, const Grid3& cotangent) const;

private:
    void check_input(const Grid2& x) const;

    Shape3 input_shape_;
    Shape3 output_shape_;
    std::vector<StagePtr> stages_;
};

/// Default central-difference step 1e-4 * max(1, max|x|).
double default_fd_step(const Grid2& x);

/// Largest N accepted by dense_jacobian_fd.
inline constexpr std::size_t kDenseJacobianLimit = 4096;

/// Central-difference Jacobian, M x N; column j = (f(x + h e_j) - f(x - h e_j)) / 2h.
Matrix dense_jacobian_fd(const ModelChain& chain, const Grid2& x, double h);

}  // namespace eigdist
