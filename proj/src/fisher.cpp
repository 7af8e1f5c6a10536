#include "eigdist/fisher.hpp"

#include <cmath>

#include "eigdist/error.hpp"
#include "eigdist/random.hpp"

namespace eigdist {

namespace {

Grid2 start_vector(const FimOperator& op, std::uint64_t seed) {
    Grid2 v = gaussian_noise(seed, op.height(), op.width());
    normalize(v.values());
    return v;
}

// {|J v - lambda v|, <v, J v>}; a null lambda means the Rayleigh quotient.
std::pair<double, double> residual_of(const FimOperator& op, const Grid2& v, std::optional<double> lambda) {
    Grid2 jv = op.apply(v);
    const double rq = dot(v.values(), jv.values());
    axpy(-lambda.value_or(rq), v.values(), jv.values());
    return {l2_norm(jv.values()), rq};
}

}  // namespace

FimOperator::FimOperator(const ModelChain& model, const Grid2& x) : lin_(model.linearize(x)) {}

Grid2 FimOperator::apply(const Grid2& v) const { return lin_.vjp(lin_.jvp(v)); }

Grid3 FimOperator::response_change(const Grid2& v) const { return lin_.jvp(v); }

void canonicalize_sign(Grid2& v) {
    std::size_t best = 0;
    double best_abs = -1.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double a = std::abs(v.values()[i]);
        if (a > best_abs) {
            best_abs = a;
            best = i;
        }
    }
    if (v.size() > 0 && v.values()[best] < 0.0) scale(v.values(), -1.0);
}

PowerResult power_iterate(const FimOperator& op, const IterationConfig& config) {
    if (!(config.tol > 0.0)) throw ParameterDomainError("power_iterate: tol must be positive");
    if (config.max_iters < 1) throw ParameterDomainError("power_iterate: max_iters must be >= 1");

    PowerResult res;
    Grid2 v = start_vector(op, config.seed);
    double previous = 0.0;
    double lambda = 0.0;
    for (std::size_t k = 0; k < config.max_iters; ++k) {
        Grid2 jv = op.apply(v);
        if (k == 0) previous = dot(v.values(), jv.values());
        lambda = l2_norm(jv.values());
        if (lambda == 0.0) {
            throw RankZeroError("Fisher operator annihilated the iterate at step " + std::to_string(k) +
                                "; the model is locally constant");
        }
        scale(jv.values(), 1.0 / lambda);
        v = std::move(jv);
        res.telemetry.history.push_back(lambda);
        res.telemetry.iterations = k + 1;
        if (std::abs(lambda - previous) <= config.tol * lambda) {
            res.telemetry.converged = true;
            break;
        }
        previous = lambda;
    }
    canonicalize_sign(v);
    const auto [residual, rq] = residual_of(op, v, std::nullopt);
    res.telemetry.rayleigh = rq;
    res.telemetry.residual = residual;
    res.lambda = rq;
    res.vector = std::move(v);
    return res;
}

namespace {

// Remaining change of a geometrically converging sequence after its last
// term: |d_k| r / (1 - r) with r = d_k / d_(k-1). Without a contracting ratio
// the last step is the only estimate available.
double geometric_tail(const std::vector<double>& h) {
    if (h.size() < 3) return h.size() == 2 ? std::abs(h[1] - h[0]) : 0.0;
    const double d1 = h[h.size() - 1] - h[h.size() - 2];
    const double d0 = h[h.size() - 2] - h[h.size() - 3];
    if (d1 == 0.0) return 0.0;
    const double r = d0 != 0.0 ? d1 / d0 : 2.0;
    if (!(r > 0.0 && r < 1.0)) return std::abs(d1);
    return std::abs(d1) * r / (1.0 - r);
}

}  // namespace

DeflatedResult deflated_iterate(const FimOperator& op, double lambda_max, const IterationConfig& config,
                                const Grid2* e_max) {
    if (!(config.tol > 0.0)) throw ParameterDomainError("deflated_iterate: tol must be positive");
    if (config.max_iters < 1) throw ParameterDomainError("deflated_iterate: max_iters must be >= 1");
    if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
        throw ParameterDomainError("deflated_iterate: lambda_max must be positive and finite");
    }

    DeflatedResult res;
    Grid2 v = start_vector(op, config.seed);
    double previous = 0.0;
    double mu = 0.0;
    for (std::size_t k = 0; k < config.max_iters; ++k) {
        Grid2 mv = op.apply(v);
        axpy(-lambda_max, v.values(), mv.values());
        mu = l2_norm(mv.values());
        res.telemetry.history.push_back(mu);
        res.telemetry.iterations = k + 1;
        if (k == 0 && mu <= config.tol * lambda_max) {
            // Every direction is (numerically) an eigenvector with eigenvalue lambda_max.
            res.degenerate_spectrum = true;
            res.telemetry.converged = true;
            mu = 0.0;
            break;
        }
        if (mu == 0.0) throw RankZeroError("deflated operator annihilated the iterate");
        scale(mv.values(), 1.0 / mu);
        v = std::move(mv);
        if (k > 0 && std::abs(mu - previous) <= config.tol * mu) {
            res.telemetry.converged = true;
            break;
        }
        previous = mu;
    }
    if (res.degenerate_spectrum && e_max != nullptr) {
        // Any unit vector orthogonal to e_max is a valid minimal direction.
        axpy(-dot(v.values(), e_max->values()), e_max->values(), v.values());
        normalize(v.values());
    }
    canonicalize_sign(v);
    res.mu = mu;
    res.lambda = std::max(0.0, lambda_max - mu);
    res.lambda_uncertainty = res.degenerate_spectrum ? 0.0 : geometric_tail(res.telemetry.history);
    res.rank_deficient = !res.degenerate_spectrum &&
                         res.lambda < config.tol * lambda_max + 2.0 * res.lambda_uncertainty;
    const auto [residual, rq] = residual_of(op, v, res.lambda);
    res.telemetry.residual = residual;
    res.telemetry.rayleigh = rq;
    res.vector = std::move(v);
    return res;
}

EigenResult synthesize(const ModelChain& model, const Grid2& x, const IterationConfig& config) {
    const FimOperator op(model, x);
    EigenResult r;
    r.seed = config.seed;
    r.tol = config.tol;
    r.max_iters = config.max_iters;

    PowerResult top = power_iterate(op, config);
    r.lambda_max = top.lambda;
    r.iterations_max = top.telemetry.iterations;
    r.residual_max = top.telemetry.residual;
    r.converged_max = top.telemetry.converged;

    IterationConfig low = config;
    low.seed = derive_seed(config.seed, {1});
    DeflatedResult bottom = deflated_iterate(op, top.lambda, low, &top.vector);
    r.lambda_min = bottom.lambda;
    r.iterations_min = bottom.telemetry.iterations;
    r.residual_min = bottom.telemetry.residual;
    r.converged_min = bottom.telemetry.converged;
    r.rank_deficient = bottom.rank_deficient;
    r.lambda_min_uncertainty = bottom.lambda_uncertainty;
    r.degenerate_spectrum = bottom.degenerate_spectrum;
    r.rayleigh_min = bottom.telemetry.rayleigh;
    r.e_max = std::move(top.vector);
    r.e_min = std::move(bottom.vector);
    if (r.degenerate_spectrum && model.output_size() != 0 && !model.stages().empty()) {
        r.multiplicity_warning = true;
    }
    return r;
}

std::optional<double> predicted_log_threshold_ratio(const EigenResult& result) {
    if (result.rank_deficient || !(result.lambda_min > 0.0)) return std::nullopt;
    return 0.5 * std::log(result.lambda_max / result.lambda_min);
}

}  // namespace eigdist
