#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "eigdist/diffmodel.hpp"
#include "eigdist/fisher.hpp"

namespace eigdist {

struct ObserverConfig {
    /// Response-noise standard deviation.
    double sigma = 1.0;
    double criterion = 0.75;
    std::size_t trials_per_vector = 120;
    std::size_t grid_points = 9;
    /// Auto-centered grid runs from threshold / span to threshold * span.
    double grid_span = 3.0;
    /// Explicit amplitude grid; overrides auto-centering when non-empty.
    std::vector<double> amplitude_grid;
    std::uint64_t seed = 0;

    void validate() const;
    /// sqrt(2) * Phi^-1(criterion) * sigma.
    double beta() const;
};

inline constexpr double kInfiniteThreshold = std::numeric_limits<double>::infinity();

struct PsychometricFit {
    double threshold = 0.0;
    /// P(alpha) = Phi((alpha / exp(m))^(1/s)).
    double location = 0.0;  // m
    double slope = 0.0;     // s
    double log_likelihood = 0.0;
    bool converged = false;
    /// Threshold not measurable (blind direction): threshold is infinite.
    bool censored = false;
    double lapse = 0.0;  // always 0; reserved
    std::vector<double> alphas;
    std::vector<double> proportions;
    std::vector<std::size_t> trials;
};

/// beta / |jvp(x, e)|; kInfiniteThreshold when the response change is zero.
double analytic_threshold(const ModelChain& model, const Grid2& x, const Grid2& e, const ObserverConfig& config);

/// Fraction of 2AFC trials in which the distorted interval is chosen. Each
/// trial draws r0 = f(x) + n0, r1 = f(x + alpha e) + n1 and a reference
/// r_ref = f(x) + n2, then picks the interval lying farther from r_ref along
/// the unit response change d = normalize(f(x + alpha e) - f(x)); this is
/// the ideal observer for a known signal. Trial t draws its noise from the
/// stream derive_seed(stream, {t}).
double simulate_2afc(const ModelChain& model, const Grid2& x, const Grid2& e, double alpha,
                     const ObserverConfig& config, std::size_t n_trials, std::uint64_t stream);

/// Maximum-likelihood fit of P(alpha) = Phi((alpha / exp(m))^(1/s)), a
/// cumulative Gaussian of a power of the amplitude that reduces to the
/// ideal-observer curve Phi(k alpha) at s = 1. Golden-section search over
/// log s, with m scanned on a fine grid and refined at each s. The threshold
/// solves P = criterion. Throws NonBracketedError when every proportion lies
/// on one side of the criterion.
PsychometricFit fit_psychometric(std::span<const double> alphas, std::span<const double> proportions,
                                 std::span<const std::size_t> trial_counts, double criterion = 0.75);

/// Splits trials_per_vector over the amplitude grid as evenly as possible,
/// earlier levels taking the remainder.
std::vector<std::size_t> distribute_trials(std::size_t total, std::size_t levels);

/// Amplitude grid centered (in log) on `center`.
std::vector<double> centered_grid(double center, const ObserverConfig& config);

/// Method of constant stimuli. `subject` selects an independent noise stream.
/// A direction with infinite analytic threshold yields a censored fit.
PsychometricFit measure_threshold(const ModelChain& model, const Grid2& x, const Grid2& e,
                                  const ObserverConfig& config, std::uint64_t subject = 0);

/// Extremal distortion pair of one image from the tested model.
struct DistortionPair {
    Grid2 e_max;
    Grid2 e_min;
};

struct DEntry {
    std::size_t image = 0;
    std::size_t subject = 0;
    double threshold_max = 0.0;
    double threshold_min = 0.0;
    double log_ratio = 0.0;
    bool censored = false;
    /// Empty in analytic mode.
    PsychometricFit fit_max;
    PsychometricFit fit_min;
    /// Master seed of this image's measurements; subject s uses streams
    /// (2s) for e_max and (2s + 1) for e_min below it.
    std::uint64_t seed = 0;
};

struct DReport {
    /// Mean log ratio; +inf when an e_min threshold is censored.
    double D = 0.0;
    /// Mean over the uncensored entries only.
    double D_finite = 0.0;
    std::size_t n_finite = 0;
    std::size_t n_censored = 0;
    std::vector<DEntry> entries;
};

/// Mean over images and subjects of ln(T(e_min) / T(e_max)), thresholds taken
/// against the reference observer. With `analytic` set, thresholds are the
/// analytic values and subjects are not simulated.
DReport empirical_D(std::span<const DistortionPair> pairs, const ModelChain& reference,
                    std::span<const Grid2> images, const ObserverConfig& config, std::size_t subjects,
                    bool analytic = false);

/// Measured against predicted threshold ratio for a model's own extremal
/// pair. A rank-deficient result marks e_min as a blind direction of the
/// observer, so its threshold is censored rather than simulated.
struct RatioExperiment {
    std::optional<double> predicted;  // nullopt = infinite
    PsychometricFit fit_max;
    PsychometricFit fit_min;
    /// ln(T_min / T_max); +inf when the e_min threshold is censored.
    double measured = 0.0;
};

RatioExperiment eigen_threshold_experiment(const ModelChain& model, const Grid2& x, const EigenResult& eig,
                                           const ObserverConfig& config, std::uint64_t subject = 0);

}  // namespace eigdist
