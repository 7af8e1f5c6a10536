#include "eigdist/zoo.hpp"

#include <cassert>
#include <cmath>

#include <Eigen/Dense>

#include "eigdist/error.hpp"
#include "eigdist/random.hpp"

namespace eigdist {

namespace {

Grid2 multiply(const Grid2& a, const Grid2& b) {
    Grid2 r(a.height(), a.width());
    for (std::size_t i = 0; i < a.size(); ++i) r.values()[i] = a.values()[i] * b.values()[i];
    return r;
}

double sum(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

double tap_inner(const KernelSpec& a, const Grid2& b) { return dot(a.taps.values(), b.values()); }

// Cached forward intermediates of one channel at one input point.
struct ChannelState {
    Grid2 v;        // signed DoG response
    Grid2 lum;      // G_L * x
    Grid2 lum_den;  // 1 + a_L lum
    Grid2 w;        // luminance-normalized
    Grid2 con;      // sqrt(G_C * w^2 + eps)
    Grid2 con_den;  // 1 + a_C con
    Grid2 z;        // output
};

ChannelState run_channel(const LgnStage::ChannelKernels& k, const LgnChannelParams& p, const LgnLayout& layout,
                         const Grid2& x) {
    ChannelState s;
    s.v = convolve(x, k.dog);
    scale(s.v.values(), k.sign);
    s.w = s.v;
    if (layout.luminance) {
        s.lum = convolve(x, k.lum);
        s.lum_den = Grid2(x.height(), x.width());
        for (std::size_t i = 0; i < x.size(); ++i) {
            s.lum_den.values()[i] = 1.0 + p.lum_amplitude * s.lum.values()[i];
            s.w.values()[i] = s.v.values()[i] / s.lum_den.values()[i];
        }
    }
    s.z = s.w;
    if (layout.contrast) {
        s.con = convolve(multiply(s.w, s.w), k.con);
        s.con_den = Grid2(x.height(), x.width());
        for (std::size_t i = 0; i < x.size(); ++i) {
            s.con.values()[i] = std::sqrt(s.con.values()[i] + kContrastEpsilon);
            s.con_den.values()[i] = 1.0 + p.con_amplitude * s.con.values()[i];
            s.z.values()[i] = s.w.values()[i] / s.con_den.values()[i];
        }
    }
    return s;
}

class LgnLinearization final : public StageLinearization {
public:
    LgnLinearization(const LgnStage& stage, const Grid3& x) : stage_(stage), x_(x.plane(0)) {
        const auto& params = stage_.params();
#ifndef NDEBUG
        bool non_negative = true;
        for (double v : x_.values()) non_negative = non_negative && v >= 0.0;
#endif
        out_ = Grid3(Shape3{params.channels.size(), x_.height(), x_.width()});
        for (std::size_t c = 0; c < params.channels.size(); ++c) {
            states_.push_back(run_channel(stage_.kernels()[c], params.channels[c], params.layout, x_));
            const auto& st = states_.back();
#ifndef NDEBUG
            if (non_negative && params.layout.luminance) {
                for (double d : st.lum_den.values()) assert(d >= 1.0 - 1e-12);
            }
#endif
            std::copy(st.z.values().begin(), st.z.values().end(), out_.channel(c).begin());
        }
    }

    const Grid3& output() const override { return out_; }

    Grid3 jvp(const Grid3& tangent) const override {
        if (tangent.shape() != Shape3{1, x_.height(), x_.width()}) {
            throw ShapeError("lgn jvp: tangent " + tangent.shape().str());
        }
        const Grid2 t = tangent.plane(0);
        const auto& params = stage_.params();
        const auto& layout = params.layout;
        Grid3 out(out_.shape());
        for (std::size_t c = 0; c < params.channels.size(); ++c) {
            const auto& k = stage_.kernels()[c];
            const auto& p = params.channels[c];
            const auto& st = states_[c];
            Grid2 dw = convolve(t, k.dog);
            scale(dw.values(), k.sign);
            if (layout.luminance) {
                const Grid2 dlum = convolve(t, k.lum);
                for (std::size_t i = 0; i < dw.size(); ++i) {
                    dw.values()[i] = (dw.values()[i] - st.w.values()[i] * p.lum_amplitude * dlum.values()[i]) /
                                     st.lum_den.values()[i];
                }
            }
            Grid2 dz = dw;
            if (layout.contrast) {
                Grid2 dsq(dw.height(), dw.width());
                for (std::size_t i = 0; i < dw.size(); ++i) dsq.values()[i] = 2.0 * st.w.values()[i] * dw.values()[i];
                const Grid2 de = convolve(dsq, k.con);
                for (std::size_t i = 0; i < dz.size(); ++i) {
                    const double dcon = de.values()[i] / (2.0 * st.con.values()[i]);
                    dz.values()[i] = (dw.values()[i] - st.z.values()[i] * p.con_amplitude * dcon) /
                                     st.con_den.values()[i];
                }
            }
            std::copy(dz.values().begin(), dz.values().end(), out.channel(c).begin());
        }
        return out;
    }

    Grid3 vjp(const Grid3& cotangent) const override {
        Grid2 grad(x_.height(), x_.width());
        backward(cotangent, &grad, nullptr);
        return Grid3(grad);
    }

    std::vector<double> param_vjp(const Grid3& cotangent) const override {
        std::vector<double> g;
        backward(cotangent, nullptr, &g);
        return g;
    }

private:
    void backward(const Grid3& cotangent, Grid2* x_grad, std::vector<double>* p_grad) const {
        if (cotangent.shape() != out_.shape()) {
            throw ShapeError("lgn vjp: cotangent " + cotangent.shape().str() + " vs " + out_.shape().str());
        }
        const auto& params = stage_.params();
        const auto& layout = params.layout;
        for (std::size_t c = 0; c < params.channels.size(); ++c) {
            const auto& k = stage_.kernels()[c];
            const auto& p = params.channels[c];
            const auto& st = states_[c];
            const Grid2 zbar = cotangent.plane(c);

            Grid2 wbar = zbar;
            double abar_con = 0.0, sbar_con = 0.0;
            if (layout.contrast) {
                Grid2 ebar(zbar.height(), zbar.width());
                for (std::size_t i = 0; i < zbar.size(); ++i) {
                    const double den = st.con_den.values()[i];
                    const double dbar = -zbar.values()[i] * st.z.values()[i] / den;
                    wbar.values()[i] = zbar.values()[i] / den;
                    abar_con += dbar * st.con.values()[i];
                    ebar.values()[i] = p.con_amplitude * dbar / (2.0 * st.con.values()[i]);
                }
                const Grid2 back = convolve_transpose(ebar, k.con);
                for (std::size_t i = 0; i < wbar.size(); ++i) {
                    wbar.values()[i] += 2.0 * st.w.values()[i] * back.values()[i];
                }
                if (p_grad) {
                    const Grid2 kg = convolve_kernel_grad(multiply(st.w, st.w), ebar, k.con);
                    sbar_con = tap_inner(gaussian_kernel_dsigma(p.con_sigma), kg);
                }
            }

            Grid2 vbar = wbar;
            double abar_lum = 0.0, sbar_lum = 0.0;
            if (layout.luminance) {
                Grid2 lbar(wbar.height(), wbar.width());
                for (std::size_t i = 0; i < wbar.size(); ++i) {
                    const double den = st.lum_den.values()[i];
                    const double dbar = -wbar.values()[i] * st.w.values()[i] / den;
                    vbar.values()[i] = wbar.values()[i] / den;
                    abar_lum += dbar * st.lum.values()[i];
                    lbar.values()[i] = p.lum_amplitude * dbar;
                }
                if (x_grad) axpy(1.0, convolve_transpose(lbar, k.lum).values(), x_grad->values());
                if (p_grad) {
                    const Grid2 kg = convolve_kernel_grad(x_, lbar, k.lum);
                    sbar_lum = tap_inner(gaussian_kernel_dsigma(p.lum_sigma), kg);
                }
            }

            scale(vbar.values(), k.sign);
            if (x_grad) axpy(1.0, convolve_transpose(vbar, k.dog).values(), x_grad->values());
            if (p_grad) {
                const Grid2 kg = convolve_kernel_grad(x_, vbar, k.dog);
                const std::size_t radius = k.dog.origin_row;
                const KernelSpec dcenter = pad_kernel(gaussian_kernel_dsigma(p.sigma_center), radius);
                const KernelSpec dsurround = gaussian_kernel_dsigma(p.sigma_surround);
                p_grad->push_back(tap_inner(dcenter, kg));
                p_grad->push_back(-tap_inner(dsurround, kg));
                if (layout.luminance) {
                    p_grad->push_back(abar_lum);
                    p_grad->push_back(sbar_lum);
                }
                if (layout.contrast) {
                    p_grad->push_back(abar_con);
                    p_grad->push_back(sbar_con);
                }
            }
        }
    }

    const LgnStage& stage_;
    Grid2 x_;
    Grid3 out_;
    std::vector<ChannelState> states_;
};

constexpr double kOnSign = 1.0;
constexpr double kOffSign = -1.0;

void check_theta_size(ModelType type, std::size_t got) {
    const std::size_t want = theta_size(type);
    if (got != want) {
        throw ParameterDomainError(to_string(type) + " expects " + std::to_string(want) +
                                   " parameters, got " + std::to_string(got));
    }
}

}  // namespace

std::string to_string(ModelType t) {
    switch (t) {
        case ModelType::mse: return "mse";
        case ModelType::ln: return "ln";
        case ModelType::lg: return "lg";
        case ModelType::lgg: return "lgg";
        case ModelType::onoff: return "onoff";
        case ModelType::cnn: return "cnn";
    }
    return "unknown";
}

ModelType parse_model_type(const std::string& name) {
    for (ModelType t : {ModelType::mse, ModelType::ln, ModelType::lg, ModelType::lgg, ModelType::onoff,
                        ModelType::cnn}) {
        if (to_string(t) == name) return t;
    }
    throw ParameterDomainError("unknown model type '" + name + "'");
}

LgnLayout lgn_layout(ModelType t) {
    switch (t) {
        case ModelType::ln: return {1, false, false};
        case ModelType::lg: return {1, true, false};
        case ModelType::lgg: return {1, true, true};
        case ModelType::onoff: return {2, true, true};
        default: throw ParameterDomainError(to_string(t) + " is not an LGN-family model");
    }
}

void LgnParams::validate() const {
    if (channels.size() != layout.channels) {
        throw ParameterDomainError("LGN params: expected " + std::to_string(layout.channels) + " channels, got " +
                                   std::to_string(channels.size()));
    }
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ParameterDomainError(std::string(what) + " must be positive, got " + std::to_string(v));
        }
    };
    auto non_negative = [](double v, const char* what) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ParameterDomainError(std::string(what) + " must be non-negative, got " + std::to_string(v));
        }
    };
    for (const auto& c : channels) {
        positive(c.sigma_center, "sigma_center");
        positive(c.sigma_surround, "sigma_surround");
        if (!(c.sigma_center < c.sigma_surround)) {
            throw ParameterDomainError("sigma_center must be smaller than sigma_surround");
        }
        if (layout.luminance) {
            non_negative(c.lum_amplitude, "luminance amplitude");
            positive(c.lum_sigma, "luminance sigma");
        }
        if (layout.contrast) {
            non_negative(c.con_amplitude, "contrast amplitude");
            positive(c.con_sigma, "contrast sigma");
        }
    }
}

LgnStage::LgnStage(LgnParams params) : params_(std::move(params)) {
    params_.validate();
    for (std::size_t c = 0; c < params_.channels.size(); ++c) {
        const auto& p = params_.channels[c];
        ChannelKernels k;
        k.sign = (c % 2 == 0) ? kOnSign : kOffSign;
        k.dog = dog_kernel(p.sigma_center, p.sigma_surround);
        if (params_.layout.luminance) k.lum = gaussian_kernel(p.lum_sigma);
        if (params_.layout.contrast) k.con = gaussian_kernel(p.con_sigma);
        kernels_.push_back(std::move(k));
    }
}

Shape3 LgnStage::output_shape(const Shape3& input) const {
    if (input.channels != 1) throw ShapeError("LgnStage expects a single-channel input, got " + input.str());
    return Shape3{params_.channels.size(), input.height, input.width};
}

Grid3 LgnStage::forward(const Grid3& x) const { return LgnLinearization(*this, x).output(); }

std::unique_ptr<StageLinearization> LgnStage::linearize(const Grid3& x) const {
    output_shape(x.shape());
    return std::make_unique<LgnLinearization>(*this, x);
}

std::size_t LgnStage::param_count() const { return params_.channels.size() * params_.layout.params_per_channel(); }

StagePtr softplus_stage() { return std::make_shared<SoftplusStage>(); }

std::vector<double> CnnParams::flat_weights() const {
    std::vector<double> flat;
    flat.reserve(kCnnWeightCount);
    for (const auto& bank : layers) {
        for (const auto& k : bank.kernels) flat.insert(flat.end(), k.taps.data().begin(), k.taps.data().end());
    }
    return flat;
}

CnnParams CnnParams::from_flat(std::span<const double> weights, std::span<const double> divisors) {
    if (weights.size() != kCnnWeightCount) {
        throw ParameterDomainError("CNN expects " + std::to_string(kCnnWeightCount) + " weights, got " +
                                   std::to_string(weights.size()));
    }
    CnnParams p;
    std::size_t at = 0;
    for (std::size_t l = 0; l < kCnnLayers; ++l) {
        ConvBank& bank = p.layers[l];
        bank.in_channels = kCnnChannels[l];
        bank.out_channels = kCnnChannels[l + 1];
        for (std::size_t k = 0; k < bank.in_channels * bank.out_channels; ++k) {
            std::vector<double> taps(weights.begin() + static_cast<std::ptrdiff_t>(at),
                                     weights.begin() + static_cast<std::ptrdiff_t>(at + kCnnKernelSize * kCnnKernelSize));
            at += kCnnKernelSize * kCnnKernelSize;
            bank.kernels.push_back(KernelSpec::centered(Grid2(kCnnKernelSize, kCnnKernelSize, std::move(taps))));
        }
    }
    if (!divisors.empty()) {
        if (divisors.size() != kCnnLayers) {
            throw ParameterDomainError("CNN expects " + std::to_string(kCnnLayers) + " normalization divisors");
        }
        std::copy(divisors.begin(), divisors.end(), p.divisors.begin());
    }
    p.validate();
    return p;
}

void CnnParams::validate() const {
    for (std::size_t l = 0; l < kCnnLayers; ++l) {
        const auto& bank = layers[l];
        if (bank.in_channels != kCnnChannels[l] || bank.out_channels != kCnnChannels[l + 1] ||
            bank.kernels.size() != bank.in_channels * bank.out_channels) {
            throw ParameterDomainError("CNN layer " + std::to_string(l) + " has the wrong channel layout");
        }
        for (const auto& k : bank.kernels) {
            if (k.taps.height() != kCnnKernelSize || k.taps.width() != kCnnKernelSize || !k.taps.all_finite()) {
                throw ParameterDomainError("CNN layer " + std::to_string(l) + " has a malformed kernel");
            }
        }
        if (!(divisors[l] > 0.0) || !std::isfinite(divisors[l])) {
            throw ParameterDomainError("CNN normalization divisors must be positive");
        }
    }
}

CnnParams random_cnn_params(std::uint64_t seed, double scale_factor) {
    Rng rng(seed);
    std::vector<double> flat(kCnnWeightCount);
    std::size_t at = 0;
    for (std::size_t l = 0; l < kCnnLayers; ++l) {
        const double fan_in = static_cast<double>(kCnnChannels[l] * kCnnKernelSize * kCnnKernelSize);
        const double sd = scale_factor / std::sqrt(fan_in);
        const std::size_t n = kCnnChannels[l] * kCnnChannels[l + 1] * kCnnKernelSize * kCnnKernelSize;
        for (std::size_t i = 0; i < n; ++i) flat[at++] = sd * rng.normal();
    }
    return CnnParams::from_flat(flat, {});
}

CnnParams orthogonal_cnn_params(std::uint64_t seed, double gain, double jitter) {
    CnnParams p = random_cnn_params(derive_seed(seed, {1}), jitter);
    Rng rng(derive_seed(seed, {2}));
    const std::size_t c = kCnnKernelSize / 2;
    for (std::size_t l = 0; l < kCnnLayers; ++l) {
        const auto n = static_cast<Eigen::Index>(kCnnChannels[l + 1]);
        Eigen::MatrixXd a(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
        }
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
        for (std::size_t o = 0; o < kCnnChannels[l + 1]; ++o) {
            for (std::size_t i = 0; i < kCnnChannels[l]; ++i) {
                for (std::size_t dr = 0; dr < 2; ++dr) {
                    for (std::size_t dc = 0; dc < 2; ++dc) {
                        const auto col = static_cast<Eigen::Index>(i * 4 + dr * 2 + dc);
                        p.layers[l].at(o, i).taps(c + dr, c + dc) += gain * q(static_cast<Eigen::Index>(o), col);
                    }
                }
            }
        }
    }
    return p;
}

std::array<double, kCnnLayers> cnn_batch_divisors(const CnnParams& params, std::span<const Grid2> images) {
    std::array<double, kCnnLayers> div{};
    std::vector<Grid3> acts;
    for (const auto& im : images) acts.emplace_back(im);
    for (std::size_t l = 0; l < kCnnLayers; ++l) {
        double total = 0.0, count = 0.0;
        std::vector<Grid3> convs;
        for (const auto& a : acts) {
            convs.push_back(conv2d(a, params.layers[l], 2));
            total += sum(convs.back().values());
            count += static_cast<double>(convs.back().size());
        }
        const double mean = count > 0 ? total / count : 0.0;
        double sq = 0.0;
        for (const auto& c : convs) {
            for (double v : c.values()) sq += (v - mean) * (v - mean);
        }
        const double sd = count > 0 ? std::sqrt(sq / count) : 0.0;
        div[l] = sd > 0.0 ? sd : 1.0;
        for (auto& c : convs) {
            for (double& v : c.values()) v = softplus(v / div[l]);
        }
        acts = std::move(convs);
    }
    return div;
}

ModelChain mse_model(std::size_t height, std::size_t width) { return ModelChain(height, width, {}); }

ModelChain lgn_model(std::size_t height, std::size_t width, const LgnParams& params) {
    return ModelChain(height, width, {std::make_shared<LgnStage>(params), softplus_stage()});
}

ModelChain cnn_model(std::size_t height, std::size_t width, const CnnParams& params) {
    if (height < kCnnMinInput || width < kCnnMinInput) {
        throw ShapeError("CNN input must be at least 16x16, got " + std::to_string(height) + "x" +
                         std::to_string(width));
    }
    params.validate();
    std::vector<StagePtr> stages;
    for (std::size_t l = 0; l < kCnnLayers; ++l) {
        stages.push_back(std::make_shared<ConvStage>(params.layers[l], 2));
        stages.push_back(std::make_shared<ScaleStage>(1.0 / params.divisors[l]));
        stages.push_back(softplus_stage());
    }
    return ModelChain(height, width, std::move(stages));
}

LgnParams lgn_constrain(ModelType type, std::span<const double> theta) {
    const LgnLayout layout = lgn_layout(type);
    check_theta_size(type, theta.size());
    LgnParams p;
    p.layout = layout;
    std::size_t at = 0;
    for (std::size_t c = 0; c < layout.channels; ++c) {
        LgnChannelParams ch;
        ch.sigma_center = softplus(theta[at++]);
        ch.sigma_surround = ch.sigma_center + softplus(theta[at++]);
        if (layout.luminance) {
            ch.lum_amplitude = softplus(theta[at++]);
            ch.lum_sigma = softplus(theta[at++]);
        }
        if (layout.contrast) {
            ch.con_amplitude = softplus(theta[at++]);
            ch.con_sigma = softplus(theta[at++]);
        }
        p.channels.push_back(ch);
    }
    return p;
}

std::vector<double> lgn_unconstrain(const LgnParams& params) {
    params.validate();
    std::vector<double> theta;
    for (const auto& ch : params.channels) {
        theta.push_back(softplus_inverse(ch.sigma_center));
        theta.push_back(softplus_inverse(ch.sigma_surround - ch.sigma_center));
        if (params.layout.luminance) {
            theta.push_back(softplus_inverse(ch.lum_amplitude));
            theta.push_back(softplus_inverse(ch.lum_sigma));
        }
        if (params.layout.contrast) {
            theta.push_back(softplus_inverse(ch.con_amplitude));
            theta.push_back(softplus_inverse(ch.con_sigma));
        }
    }
    return theta;
}

std::vector<double> lgn_constrain_vjp(ModelType type, std::span<const double> theta,
                                      std::span<const double> param_grad) {
    const LgnLayout layout = lgn_layout(type);
    check_theta_size(type, theta.size());
    if (param_grad.size() != theta.size()) throw ShapeError("lgn_constrain_vjp: gradient length mismatch");
    std::vector<double> g(theta.size());
    const std::size_t per = layout.params_per_channel();
    for (std::size_t c = 0; c < layout.channels; ++c) {
        const std::size_t b = c * per;
        // sigma_surround = sigma_center + softplus(theta[b + 1]) also depends on theta[b].
        g[b] = softplus_derivative(theta[b]) * (param_grad[b] + param_grad[b + 1]);
        for (std::size_t k = 1; k < per; ++k) g[b + k] = softplus_derivative(theta[b + k]) * param_grad[b + k];
    }
    return g;
}

// No scale sits at a multiple of 0.25, where the truncation radius ceil(4 sigma)
// jumps and the kernels are not differentiable in sigma.
LgnParams default_lgn_params(ModelType type) {
    LgnParams p;
    p.layout = lgn_layout(type);
    const LgnChannelParams on{0.48, 1.4, 4.0, 1.45, 5.0, 1.2};
    const LgnChannelParams off{0.6, 1.6, 3.0, 1.3, 4.0, 1.05};
    p.channels.push_back(on);
    if (p.layout.channels == 2) p.channels.push_back(off);
    return p;
}

std::size_t theta_size(ModelType type) {
    switch (type) {
        case ModelType::mse: return 0;
        case ModelType::cnn: return kCnnWeightCount;
        default: {
            const LgnLayout l = lgn_layout(type);
            return l.channels * l.params_per_channel();
        }
    }
}

ZooModel::ZooModel(ModelType type, std::size_t height, std::size_t width, std::vector<double> theta,
                   std::vector<double> norm_divisors)
    : type_(type), height_(height), width_(width), theta_(std::move(theta)), divisors_(std::move(norm_divisors)) {
    check_theta_size(type_, theta_.size());
    for (double t : theta_) {
        if (!std::isfinite(t)) throw ParameterDomainError("theta contains non-finite values");
    }
    switch (type_) {
        case ModelType::mse:
            chain_ = std::make_shared<ModelChain>(mse_model(height_, width_));
            break;
        case ModelType::cnn: {
            if (divisors_.empty()) divisors_.assign(kCnnLayers, 1.0);
            const CnnParams p = CnnParams::from_flat(theta_, divisors_);
            chain_ = std::make_shared<ModelChain>(cnn_model(height_, width_, p));
            break;
        }
        default:
            chain_ = std::make_shared<ModelChain>(lgn_model(height_, width_, lgn_constrain(type_, theta_)));
    }
    if (type_ != ModelType::cnn && !divisors_.empty()) {
        throw ParameterDomainError("normalization divisors apply only to the cnn model");
    }
}

ZooModel ZooModel::make_default(ModelType type, std::size_t height, std::size_t width, std::uint64_t seed) {
    switch (type) {
        case ModelType::mse: return ZooModel(type, height, width, {});
        case ModelType::cnn: {
            const CnnParams p = orthogonal_cnn_params(seed, kCnnDefaultGain, kCnnDefaultJitter);
            return ZooModel(type, height, width, p.flat_weights(), {});
        }
        default: return ZooModel(type, height, width, lgn_unconstrain(default_lgn_params(type)));
    }
}

std::vector<double> ZooModel::theta_gradient(std::span<const double> chain_param_grad) const {
    switch (type_) {
        case ModelType::mse: return {};
        case ModelType::cnn: return {chain_param_grad.begin(), chain_param_grad.end()};
        default: return lgn_constrain_vjp(type_, theta_, chain_param_grad);
    }
}

ZooModel ZooModel::with_theta(std::vector<double> theta) const {
    return ZooModel(type_, height_, width_, std::move(theta), divisors_);
}

ZooModel ZooModel::resized(std::size_t height, std::size_t width) const {
    return ZooModel(type_, height, width, theta_, divisors_);
}

}  // namespace eigdist
