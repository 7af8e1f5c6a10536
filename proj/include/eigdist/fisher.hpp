#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "eigdist/diffmodel.hpp"

namespace eigdist {

/// Fisher information of a model with unit additive Gaussian response noise,
/// J[x] = (df/dx)^T (df/dx), applied matrix-free at a fixed base image.
class FimOperator {
public:
    FimOperator(const ModelChain& model, const Grid2& x);

    /// vjp(x, jvp(x, v)).
    Grid2 apply(const Grid2& v) const;
    /// jvp(x, v): the response change along v; |jvp(x, v)|^2 = <v, J v>.
    Grid3 response_change(const Grid2& v) const;

    std::size_t height() const { return lin_.point().height(); }
    std::size_t width() const { return lin_.point().width(); }
    const Grid2& base_image() const { return lin_.point(); }

private:
    Linearization lin_;
};

struct IterationConfig {
    double tol = 1e-6;
    std::size_t max_iters = 10000;
    std::uint64_t seed = 0;
};

struct IterationTelemetry {
    std::size_t iterations = 0;
    bool converged = false;
    /// |J e - lambda e| for the returned vector.
    double residual = 0.0;
    /// <e, J e> for the returned vector.
    double rayleigh = 0.0;
    /// Iteration magnitudes, one per step (lambda^(k) or mu^(k)).
    std::vector<double> history;
};

struct PowerResult {
    double lambda = 0.0;
    Grid2 vector;
    IterationTelemetry telemetry;
};

struct DeflatedResult {
    double lambda = 0.0;  // clamped to >= 0
    Grid2 vector;
    /// Converged magnitude of (J - lambda_max I).
    double mu = 0.0;
    /// Geometric extrapolation of the change in mu still to come.
    double lambda_uncertainty = 0.0;
    /// lambda < tol * lambda_max + 2 * lambda_uncertainty: the minimal
    /// eigenvalue cannot be told apart from zero.
    bool rank_deficient = false;
    bool degenerate_spectrum = false;
    IterationTelemetry telemetry;
};

/// Power iteration from seeded white noise: e <- J e / |J e|, lambda = |J e|.
/// Stops when |lambda^(k+1) - lambda^(k)| <= tol * lambda^(k+1), where
/// lambda^(0) is the Rayleigh quotient of the starting vector. Returns the
/// Rayleigh quotient of the final vector, with the largest-magnitude
/// component made positive. Throws RankZeroError if J e vanishes.
PowerResult power_iterate(const FimOperator& op, const IterationConfig& config);

/// Power iteration on J - lambda_max I. The converged magnitude mu gives
/// lambda_min = lambda_max - mu. The stopping rule bounds the last change of
/// mu, not its distance to the limit, which is larger by about 1 / (1 - r)
/// for convergence ratio r; rank deficiency is therefore judged against an
/// extrapolated estimate of that distance.
DeflatedResult deflated_iterate(const FimOperator& op, double lambda_max, const IterationConfig& config,
                                const Grid2* e_max = nullptr);

struct EigenResult {
    double lambda_max = 0.0;
    Grid2 e_max;
    double lambda_min = 0.0;
    Grid2 e_min;
    std::size_t iterations_max = 0;
    std::size_t iterations_min = 0;
    double residual_max = 0.0;
    double residual_min = 0.0;
    bool converged_max = false;
    bool converged_min = false;
    bool rank_deficient = false;
    double lambda_min_uncertainty = 0.0;
    bool degenerate_spectrum = false;
    /// Deflated iteration collapsed (mu ~ 0) on a model whose top eigenvalue
    /// may be repeated; e_max is then seed-dependent within its eigenspace.
    bool multiplicity_warning = false;
    /// <e_min, J e_min>, logged as a cross-check of lambda_max - mu.
    double rayleigh_min = 0.0;
    std::uint64_t seed = 0;
    double tol = 0.0;
    std::size_t max_iters = 0;

    bool converged() const { return converged_max && converged_min; }
};

/// Power iteration followed by deflated iteration. The deflated stage uses
/// the seed stream derived from (seed, 1).
EigenResult synthesize(const ModelChain& model, const Grid2& x, const IterationConfig& config);

/// 0.5 * ln(lambda_max / lambda_min), or nullopt when the minimal
/// eigenvalue is numerically zero (infinite predicted ratio).
std::optional<double> predicted_log_threshold_ratio(const EigenResult& result);

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
void canonicalize_sign(Grid2& v);

}  // namespace eigdist
