#include "eigdist/diffmodel.hpp"

#include <algorithm>
#include <cmath>

#include "eigdist/error.hpp"

namespace eigdist {

std::vector<double> StageLinearization::param_vjp(const Grid3&) const { return {}; }

namespace {

void require_shape(const Grid3& g, const Shape3& expected, const char* what) {
    if (g.shape() != expected) {
        throw ShapeError(std::string(what) + ": expected " + expected.str() + ", got " + g.shape().str());
    }
}

class ScaleLinearization final : public StageLinearization {
public:
    ScaleLinearization(double factor, Grid3 out) : factor_(factor), out_(std::move(out)) {}
    const Grid3& output() const override { return out_; }
    Grid3 jvp(const Grid3& t) const override {
        require_shape(t, out_.shape(), "scale jvp");
        Grid3 r = t;
        scale(r.values(), factor_);
        return r;
    }
    Grid3 vjp(const Grid3& u) const override {
        require_shape(u, out_.shape(), "scale vjp");
        Grid3 r = u;
        scale(r.values(), factor_);
        return r;
    }

private:
    double factor_;
    Grid3 out_;
};

class SoftplusLinearization final : public StageLinearization {
public:
    explicit SoftplusLinearization(const Grid3& x) : out_(x.shape()), slope_(x.shape()) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            out_.values()[i] = softplus(x.values()[i]);
            slope_.values()[i] = softplus_derivative(x.values()[i]);
        }
    }
    const Grid3& output() const override { return out_; }
    Grid3 jvp(const Grid3& t) const override { return multiply(t, "softplus jvp"); }
    Grid3 vjp(const Grid3& u) const override { return multiply(u, "softplus vjp"); }

private:
    Grid3 multiply(const Grid3& v, const char* what) const {
        require_shape(v, slope_.shape(), what);
        Grid3 r(v.shape());
        for (std::size_t i = 0; i < v.size(); ++i) r.values()[i] = slope_.values()[i] * v.values()[i];
        return r;
    }

    Grid3 out_;
    Grid3 slope_;
};

class DenseLinearization final : public StageLinearization {
public:
    DenseLinearization(const Matrix& a, Shape3 in, Grid3 out) : a_(a), in_(in), out_(std::move(out)) {}
    const Grid3& output() const override { return out_; }
    Grid3 jvp(const Grid3& t) const override {
        require_shape(t, in_, "dense jvp");
        return Grid3(out_.shape(), a_.apply(t.values()));
    }
    Grid3 vjp(const Grid3& u) const override {
        require_shape(u, out_.shape(), "dense vjp");
        return Grid3(in_, a_.apply_transpose(u.values()));
    }

private:
    const Matrix& a_;
    Shape3 in_;
    Grid3 out_;
};

class ConvLinearization final : public StageLinearization {
public:
    ConvLinearization(const ConvStage& stage, Grid3 x)
        : stage_(stage), x_(std::move(x)), out_(conv2d(x_, stage.bank(), stage.stride())) {}
    const Grid3& output() const override { return out_; }
    Grid3 jvp(const Grid3& t) const override {
        require_shape(t, x_.shape(), "conv jvp");
        return conv2d(t, stage_.bank(), stage_.stride());
    }
    Grid3 vjp(const Grid3& u) const override {
        return conv2d_transpose(u, stage_.bank(), x_.shape(), stage_.stride());
    }
    std::vector<double> param_vjp(const Grid3& u) const override {
        const ConvBank g = conv2d_kernel_grad(x_, u, stage_.bank(), stage_.stride());
        std::vector<double> flat;
        flat.reserve(stage_.param_count());
        for (const auto& k : g.kernels) flat.insert(flat.end(), k.taps.data().begin(), k.taps.data().end());
        return flat;
    }

private:
    const ConvStage& stage_;
    Grid3 x_;
    Grid3 out_;
};

}  // namespace

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double softplus_derivative(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double softplus_inverse(double y) {
    if (!(y > 0.0)) throw ParameterDomainError("softplus_inverse requires y > 0, got " + std::to_string(y));
    // log(exp(y) - 1) = y + log(1 - exp(-y))
    return y + std::log(-std::expm1(-y));
}

ScaleStage::ScaleStage(double factor) : factor_(factor) {
    if (!std::isfinite(factor)) throw ParameterDomainError("scale factor must be finite");
}

Grid3 ScaleStage::forward(const Grid3& x) const {
    Grid3 r = x;
    scale(r.values(), factor_);
    return r;
}

std::unique_ptr<StageLinearization> ScaleStage::linearize(const Grid3& x) const {
    return std::make_unique<ScaleLinearization>(factor_, forward(x));
}

Grid3 SoftplusStage::forward(const Grid3& x) const {
    Grid3 r(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) r.values()[i] = softplus(x.values()[i]);
    return r;
}

std::unique_ptr<StageLinearization> SoftplusStage::linearize(const Grid3& x) const {
    return std::make_unique<SoftplusLinearization>(x);
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::vector<double> Matrix::apply(std::span<const double> v) const {
    if (v.size() != cols) throw ShapeError("Matrix::apply: length mismatch");
    std::vector<double> r(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += data[i * cols + j] * v[j];
        r[i] = s;
    }
    return r;
}

std::vector<double> Matrix::apply_transpose(std::span<const double> u) const {
    if (u.size() != rows) throw ShapeError("Matrix::apply_transpose: length mismatch");
    std::vector<double> r(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) r[j] += data[i * cols + j] * u[i];
    }
    return r;
}

Matrix Matrix::transpose() const {
    Matrix t(cols, rows);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
    }
    return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
    if (cols != rhs.rows) throw ShapeError("Matrix product: inner dimensions differ");
    Matrix r(rows, rhs.cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t k = 0; k < cols; ++k) {
            const double a = (*this)(i, k);
            if (a == 0.0) continue;
            for (std::size_t j = 0; j < rhs.cols; ++j) r(i, j) += a * rhs(k, j);
        }
    }
    return r;
}

DenseLinearStage::DenseLinearStage(Matrix a, Shape3 input, Shape3 output)
    : a_(std::move(a)), in_(input), out_(output) {
    if (a_.rows != out_.size() || a_.cols != in_.size()) {
        throw ShapeError("DenseLinearStage: matrix " + std::to_string(a_.rows) + "x" + std::to_string(a_.cols) +
                         " does not map " + in_.str() + " to " + out_.str());
    }
}

Shape3 DenseLinearStage::output_shape(const Shape3& input) const {
    if (input != in_) throw ShapeError("DenseLinearStage: expects input " + in_.str() + ", got " + input.str());
    return out_;
}

Grid3 DenseLinearStage::forward(const Grid3& x) const {
    require_shape(x, in_, "dense forward");
    return Grid3(out_, a_.apply(x.values()));
}

std::unique_ptr<StageLinearization> DenseLinearStage::linearize(const Grid3& x) const {
    return std::make_unique<DenseLinearization>(a_, in_, forward(x));
}

ConvStage::ConvStage(ConvBank bank, std::size_t stride) : bank_(std::move(bank)), stride_(stride) {
    if (stride_ < 1) throw ParameterDomainError("ConvStage: stride must be >= 1");
    if (bank_.kernels.size() != bank_.out_channels * bank_.in_channels || bank_.kernels.empty()) {
        throw ShapeError("ConvStage: malformed kernel bank");
    }
}

Shape3 ConvStage::output_shape(const Shape3& input) const {
    if (input.channels != bank_.in_channels) {
        throw ShapeError("ConvStage: expects " + std::to_string(bank_.in_channels) + " channels, got " +
                         input.str());
    }
    return Shape3{bank_.out_channels, strided_size(input.height, stride_), strided_size(input.width, stride_)};
}

Grid3 ConvStage::forward(const Grid3& x) const { return conv2d(x, bank_, stride_); }

std::unique_ptr<StageLinearization> ConvStage::linearize(const Grid3& x) const {
    return std::make_unique<ConvLinearization>(*this, x);
}

std::size_t ConvStage::param_count() const {
    std::size_t n = 0;
    for (const auto& k : bank_.kernels) n += k.taps.size();
    return n;
}

Grid3 Linearization::jvp(const Grid2& tangent) const {
    if (tangent.height() != input_shape_.height || tangent.width() != input_shape_.width) {
        throw ShapeError("jvp: tangent " + std::to_string(tangent.height()) + "x" +
                         std::to_string(tangent.width()) + " does not match input " + input_shape_.str());
    }
    Grid3 t(tangent);
    for (const auto& s : stages_) t = s->jvp(t);
    return t;
}

Grid2 Linearization::vjp(const Grid3& cotangent) const {
    require_shape(cotangent, output_shape_, "vjp cotangent");
    Grid3 u = cotangent;
    for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) u = (*it)->vjp(u);
    return u.plane(0);
}

std::vector<double> Linearization::param_vjp(const Grid3& cotangent) const {
    require_shape(cotangent, output_shape_, "param_vjp cotangent");
    std::vector<std::vector<double>> per_stage(stages_.size());
    Grid3 u = cotangent;
    for (std::size_t k = stages_.size(); k-- > 0;) {
        per_stage[k] = stages_[k]->param_vjp(u);
        if (k > 0) u = stages_[k]->vjp(u);
    }
    std::vector<double> flat;
    for (auto& g : per_stage) flat.insert(flat.end(), g.begin(), g.end());
    return flat;
}

ModelChain::ModelChain(std::size_t height, std::size_t width, std::vector<StagePtr> stages)
    : input_shape_{1, height, width}, output_shape_(input_shape_), stages_(std::move(stages)) {
    if (height == 0 || width == 0) throw ShapeError("ModelChain: empty input dimensions");
    for (const auto& s : stages_) {
        if (!s) throw ShapeError("ModelChain: null stage");
        output_shape_ = s->output_shape(output_shape_);
    }
}

std::size_t ModelChain::param_count() const {
    std::size_t n = 0;
    for (const auto& s : stages_) n += s->param_count();
    return n;
}

void ModelChain::check_input(const Grid2& x) const {
    if (x.height() != input_shape_.height || x.width() != input_shape_.width) {
        throw ShapeError("model input " + std::to_string(x.height()) + "x" + std::to_string(x.width()) +
                         " does not match " + input_shape_.str());
    }
    if (!x.all_finite()) throw InputDomainError("model input contains non-finite values");
}

Grid3 ModelChain::forward(const Grid2& x) const {
    check_input(x);
    Grid3 r(x);
    for (const auto& s : stages_) r = s->forward(r);
    return r;
}

std::vector<Grid3> ModelChain::stage_outputs(const Grid2& x) const {
    check_input(x);
    std::vector<Grid3> outs;
    outs.reserve(stages_.size());
    Grid3 r(x);
    for (const auto& s : stages_) {
        r = s->forward(r);
        outs.push_back(r);
    }
    return outs;
}

Linearization ModelChain::linearize(const Grid2& x) const {
    check_input(x);
    Linearization lin;
    lin.input_shape_ = input_shape_;
    lin.output_shape_ = output_shape_;
    lin.point_ = x;
    lin.owners_ = stages_;
    Grid3 r(x);
    for (const auto& s : stages_) {
        auto l = s->linearize(r);
        r = l->output();
        lin.stages_.push_back(std::move(l));
    }
    lin.output_ = std::move(r);
    return lin;
}

Grid3 ModelChain::jvp(const Grid2& x, const Grid2& tangent) const { return linearize(x).jvp(tangent); }

Grid2 ModelChain::vjp(const Grid2& x, const Grid3& cotangent) const { return linearize(x).vjp(cotangent); }

double default_fd_step(const Grid2& x) { return 1e-4 * std::max(1.0, max_abs(x.values())); }

Matrix dense_jacobian_fd(const ModelChain& chain, const Grid2& x, double h) {
    const std::size_t n = chain.input_size();
    if (n > kDenseJacobianLimit) {
        throw SizeError("dense_jacobian_fd: N = " + std::to_string(n) + " exceeds limit " +
                        std::to_string(kDenseJacobianLimit));
    }
    if (!(h > 0.0)) throw ParameterDomainError("dense_jacobian_fd: step must be positive");
    const std::size_t m = chain.output_size();
    Matrix jac(m, n);
    Grid2 probe = x;
    for (std::size_t j = 0; j < n; ++j) {
        const double orig = probe.values()[j];
        probe.values()[j] = orig + h;
        const Grid3 plus = chain.forward(probe);
        probe.values()[j] = orig - h;
        const Grid3 minus = chain.forward(probe);
        probe.values()[j] = orig;
        for (std::size_t i = 0; i < m; ++i) jac(i, j) = (plus.values()[i] - minus.values()[i]) / (2.0 * h);
    }
    return jac;
}

}  // namespace eigdist
