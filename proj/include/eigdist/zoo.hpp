#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eigdist/diffmodel.hpp"

namespace eigdist {

enum class ModelType { mse, ln, lg, lgg, onoff, cnn };

std::string to_string(ModelType t);
/// Throws ParameterDomainError for unknown names.
ModelType parse_model_type(const std::string& name);

/// Stages of the LGN family present in a model type.
struct LgnLayout {
    std::size_t channels = 1;
    bool luminance = false;
    bool contrast = false;

    /// Trainable scalars per channel: 2 (DoG) + 2 (luminance) + 2 (contrast).
    std::size_t params_per_channel() const { return 2 + (luminance ? 2 : 0) + (contrast ? 2 : 0); }
};

LgnLayout lgn_layout(ModelType t);

/// One LGN channel. Unused gain fields are ignored by reduced models.
struct LgnChannelParams {
    double sigma_center = 0.0;
    double sigma_surround = 0.0;
    double lum_amplitude = 0.0;
    double lum_sigma = 1.0;
    double con_amplitude = 0.0;
    double con_sigma = 1.0;
};

struct LgnParams {
    LgnLayout layout;
    std::vector<LgnChannelParams> channels;

    /// Throws ParameterDomainError unless 0 < sigma_center < sigma_surround,
    /// all sigmas positive and all amplitudes non-negative.
    void validate() const;
};

/// Epsilon inside the local-contrast square root.
inline constexpr double kContrastEpsilon = 1e-8;

/// The LGN gain-control cascade before rectification.
///
/// Channel k computes, with s_k = +1 (On) or -1 (Off):
///   v = s_k DoG * x
///   w = v / (1 + a_L G_L * x)                       (luminance stage)
///   z = w / (1 + a_C sqrt(G_C * w^2 + eps))         (contrast stage)
/// Parameters per channel: [sigma_center, sigma_surround, a_L, sigma_L, a_C, sigma_C],
/// omitting the stages the layout disables.
class LgnStage final : public Stage {
public:
    explicit LgnStage(LgnParams params);

    std::string name() const override { return "lgn"; }
    Shape3 output_shape(const Shape3& input) const override;
    Grid3 forward(const Grid3& x) const override;
    std::unique_ptr<StageLinearization> linearize(const Grid3& x) const override;
    std::size_t param_count() const override;

    const LgnParams& params() const { return params_; }

    struct ChannelKernels {
        double sign = 1.0;
        KernelSpec dog;
        KernelSpec lum;
        KernelSpec con;
    };
    const std::vector<ChannelKernels>& kernels() const { return kernels_; }

private:
    LgnParams params_;
    std::vector<ChannelKernels> kernels_;
};

StagePtr softplus_stage();

/// Layer geometry of the generic CNN: 5x5 filters, stride 2, channels x4 per layer.
inline constexpr std::size_t kCnnLayers = 4;
inline constexpr std::size_t kCnnKernelSize = 5;
inline constexpr std::array<std::size_t, kCnnLayers + 1> kCnnChannels{1, 4, 16, 64, 256};
/// 100 + 1600 + 25600 + 409600.
inline constexpr std::size_t kCnnWeightCount = 436900;
/// Count reported for the original network. The difference of 8 matches one
/// mean and one variance statistic per layer for the four frozen
/// normalization layers; this implementation keeps only the divisor.
inline constexpr std::size_t kCnnReportedParamCount = 436908;
inline constexpr std::size_t kCnnMinInput = 16;

struct CnnParams {
    std::array<ConvBank, kCnnLayers> layers;
    std::array<double, kCnnLayers> divisors{1.0, 1.0, 1.0, 1.0};

    /// Weights flattened layer by layer, [out][in][row][col].
    std::vector<double> flat_weights() const;
    static CnnParams from_flat(std::span<const double> weights, std::span<const double> divisors);
    void validate() const;
};

/// Seeded N(0, (scale / sqrt(fan_in))^2) weights with unit divisors.
CnnParams random_cnn_params(std::uint64_t seed, double scale);

/// Space-to-depth start: each layer's 2x2 stride cells are mixed by a seeded
/// random orthogonal matrix scaled by `gain`, plus random_cnn_params(jitter)
/// on every tap. Keeps the Fisher spectrum away from zero on square inputs.
CnnParams orthogonal_cnn_params(std::uint64_t seed, double gain, double jitter);

inline constexpr double kCnnDefaultGain = 0.5;
inline constexpr double kCnnDefaultJitter = 0.1;

/// Per-layer divisors: the standard deviation of each layer's convolution
/// output over all images and positions, layers evaluated in sequence. A zero
/// deviation maps to divisor 1.
std::array<double, kCnnLayers> cnn_batch_divisors(const CnnParams& params, std::span<const Grid2> images);

// Builders.
ModelChain mse_model(std::size_t height, std::size_t width);
ModelChain lgn_model(std::size_t height, std::size_t width, const LgnParams& params);
ModelChain cnn_model(std::size_t height, std::size_t width, const CnnParams& params);

// Unconstrained parameterization of the LGN family: every scale and
// amplitude is softplus(theta); the surround sigma is sigma_center +
// softplus(theta), which keeps sigma_center < sigma_surround.
LgnParams lgn_constrain(ModelType type, std::span<const double> theta);
std::vector<double> lgn_unconstrain(const LgnParams& params);
/// theta-gradient from a gradient with respect to the natural parameters
/// (the LgnStage parameter order).
std::vector<double> lgn_constrain_vjp(ModelType type, std::span<const double> theta,
                                      std::span<const double> param_grad);

/// Default fixture parameters used when no parameter file is given.
LgnParams default_lgn_params(ModelType type);

/// A zoo model: its type, trainable vector theta, and the chain built from it.
class ZooModel {
public:
    ZooModel(ModelType type, std::size_t height, std::size_t width, std::vector<double> theta,
             std::vector<double> norm_divisors = {});

    /// Fixture model with default parameters (CNN: seeded random weights).
    static ZooModel make_default(ModelType type, std::size_t height, std::size_t width,
                                 std::uint64_t seed = 1);

    ModelType type() const { return type_; }
    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    const ModelChain& chain() const { return *chain_; }
    const std::vector<double>& theta() const { return theta_; }
    const std::vector<double>& norm_divisors() const { return divisors_; }

    /// Gradient with respect to theta of <cotangent, f(x)>, given the chain's
    /// concatenated stage parameter gradient.
    std::vector<double> theta_gradient(std::span<const double> chain_param_grad) const;

    ZooModel with_theta(std::vector<double> theta) const;
    /// Same model rebuilt for another image size.
    ZooModel resized(std::size_t height, std::size_t width) const;

private:
    ModelType type_;
    std::size_t height_, width_;
    std::vector<double> theta_;
    std::vector<double> divisors_;
    std::shared_ptr<const ModelChain> chain_;
};

/// Expected theta length for a type (CNN: kCnnWeightCount).
std::size_t theta_size(ModelType type);

}  // namespace eigdist
