#include "eigdist/observer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "eigdist/error.hpp"
#include "eigdist/parallel.hpp"
#include "eigdist/random.hpp"

namespace eigdist {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal_distribution<double>(), p); }

// Golden-section maximization of a unimodal f on [lo, hi].
template <class F>
double golden_max(F&& f, double lo, double hi, std::size_t iters) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    for (std::size_t i = 0; i < iters; ++i) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? c : d;
}

struct Binomial {
    std::span<const double> u;  // log amplitudes
    std::span<const double> p;
    std::span<const std::size_t> n;

    double loglik(double m, double s) const {
        double ll = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double z = std::exp((u[i] - m) / s);
            const double pr = std::clamp(normal_cdf(z), 1e-15, 1.0 - 1e-15);
            const double k = p[i] * static_cast<double>(n[i]);
            ll += k * std::log(pr) + (static_cast<double>(n[i]) - k) * std::log1p(-pr);
        }
        return ll;
    }
};

constexpr std::size_t kLocationScan = 801;

// Best location for a fixed slope: grid scan, then golden refinement
// between the neighbours of the best grid point.
double profile_location(const Binomial& b, double s, double lo, double hi) {
    const double step = (hi - lo) / static_cast<double>(kLocationScan - 1);
    std::size_t best = 0;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kLocationScan; ++k) {
        const double ll = b.loglik(lo + step * static_cast<double>(k), s);
        if (ll > best_ll) {
            best_ll = ll;
            best = k;
        }
    }
    const double m0 = lo + step * static_cast<double>(best);
    return golden_max([&](double m) { return b.loglik(m, s); }, m0 - step, m0 + step, 60);
}

}  // namespace

void ObserverConfig::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterDomainError("observer sigma must be positive");
    if (!(criterion > 0.5 && criterion < 1.0)) throw ParameterDomainError("criterion must lie in (0.5, 1)");
    if (trials_per_vector == 0) throw ParameterDomainError("trials_per_vector must be positive");
    if (amplitude_grid.empty()) {
        if (grid_points < 4) throw ParameterDomainError("amplitude grid needs at least 4 points");
        if (!(grid_span > 1.0)) throw ParameterDomainError("grid span must exceed 1");
    } else {
        if (amplitude_grid.size() < 4) throw ParameterDomainError("amplitude grid needs at least 4 points");
        for (std::size_t i = 0; i < amplitude_grid.size(); ++i) {
            if (!(amplitude_grid[i] > 0.0) || (i > 0 && !(amplitude_grid[i] > amplitude_grid[i - 1]))) {
                throw ParameterDomainError("amplitude grid must be positive and strictly increasing");
            }
        }
    }
}

double ObserverConfig::beta() const { return std::sqrt(2.0) * normal_quantile(criterion) * sigma; }

double analytic_threshold(const ModelChain& model, const Grid2& x, const Grid2& e, const ObserverConfig& config) {
    config.validate();
    const double gain = l2_norm(model.jvp(x, e).values());
    if (gain == 0.0) return kInfiniteThreshold;
    return config.beta() / gain;
}

double simulate_2afc(const ModelChain& model, const Grid2& x, const Grid2& e, double alpha,
                     const ObserverConfig& config, std::size_t n_trials, std::uint64_t stream) {
    config.validate();
    if (!(alpha > 0.0)) throw ParameterDomainError("2afc amplitude must be positive");
    if (n_trials == 0) throw ParameterDomainError("2afc needs at least one trial");
    Grid2 xd = x;
    axpy(alpha, e.values(), xd.values());
    const Grid3 f0 = model.forward(x);
    const Grid3 f1 = model.forward(xd);
    Grid3 d = f1;
    axpy(-1.0, f0.values(), d.values());
    const double dn = l2_norm(d.values());
    if (dn > 0.0) scale(d.values(), 1.0 / dn);

    const std::size_t m = f0.size();
    const double sigma = config.sigma;
    std::vector<char> correct(n_trials, 0);
    parallel_for(n_trials, [&](std::size_t t) {
        Rng rng(derive_seed(stream, {t}));
        if (dn == 0.0) {
            correct[t] = static_cast<char>(rng.next_bits() >> 63);
            return;
        }
        // Projections on d of (r1 - r_ref) and (r0 - r_ref).
        double s0 = 0.0, s1 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double r0 = f0.values()[i] + sigma * rng.normal();
            const double r1 = f1.values()[i] + sigma * rng.normal();
            const double ref = f0.values()[i] + sigma * rng.normal();
            s0 += (r0 - ref) * d.values()[i];
            s1 += (r1 - ref) * d.values()[i];
        }
        correct[t] = s1 > s0 ? 1 : 0;
    });
    std::size_t hits = 0;
    for (char c : correct) hits += static_cast<std::size_t>(c);
    return static_cast<double>(hits) / static_cast<double>(n_trials);
}

PsychometricFit fit_psychometric(std::span<const double> alphas, std::span<const double> proportions,
                                 std::span<const std::size_t> trial_counts, double criterion) {
    const std::size_t n = alphas.size();
    if (proportions.size() != n || trial_counts.size() != n) throw ShapeError("psychometric: length mismatch");
    if (n < 4) throw SizeError("psychometric fit needs at least 4 amplitude levels");
    if (!(criterion > 0.5 && criterion < 1.0)) throw ParameterDomainError("criterion must lie in (0.5, 1)");
    std::vector<double> u(n);
    bool above = false, below = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(alphas[i] > 0.0) || !std::isfinite(alphas[i])) throw InputDomainError("amplitudes must be positive");
        if (!(proportions[i] >= 0.0 && proportions[i] <= 1.0)) throw InputDomainError("proportions must lie in [0, 1]");
        if (trial_counts[i] == 0) throw InputDomainError("trial counts must be positive");
        u[i] = std::log(alphas[i]);
        above = above || proportions[i] > criterion;
        below = below || proportions[i] < criterion;
    }
    if (!above || !below) {
        throw NonBracketedError("all proportions lie on one side of the criterion; widen or move the amplitude grid");
    }
    const auto [umin_it, umax_it] = std::minmax_element(u.begin(), u.end());
    const double umin = *umin_it, umax = *umax_it;
    const double range = std::max(umax - umin, 1e-6);
    const double m_lo = umin - 2.0 * range - 2.0, m_hi = umax + 2.0 * range + 2.0;

    const Binomial b{u, proportions, trial_counts};
    auto profile = [&](double log_s) {
        const double s = std::exp(log_s);
        return b.loglik(profile_location(b, s, m_lo, m_hi), s);
    };
    // Coarse scan in log s, then golden section around the best cell.
    const double ls_lo = std::log(1e-3 * range / 4.0 + 1e-9), ls_hi = std::log(20.0);
    constexpr std::size_t kSlopeScan = 41;
    const double ls_step = (ls_hi - ls_lo) / static_cast<double>(kSlopeScan - 1);
    std::size_t best = 0;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kSlopeScan; ++k) {
        const double ll = profile(ls_lo + ls_step * static_cast<double>(k));
        if (ll > best_ll) {
            best_ll = ll;
            best = k;
        }
    }
    const double ls0 = ls_lo + ls_step * static_cast<double>(best);
    const double log_s = golden_max(profile, std::max(ls_lo, ls0 - ls_step), std::min(ls_hi, ls0 + ls_step), 50);

    PsychometricFit fit;
    fit.slope = std::exp(log_s);
    fit.location = profile_location(b, fit.slope, m_lo, m_hi);
    fit.log_likelihood = b.loglik(fit.location, fit.slope);
    fit.threshold = std::exp(fit.location + fit.slope * std::log(normal_quantile(criterion)));
    fit.converged = std::isfinite(fit.threshold) && fit.threshold > 0.0;
    fit.alphas.assign(alphas.begin(), alphas.end());
    fit.proportions.assign(proportions.begin(), proportions.end());
    fit.trials.assign(trial_counts.begin(), trial_counts.end());
    return fit;
}

std::vector<std::size_t> distribute_trials(std::size_t total, std::size_t levels) {
    if (levels == 0) throw SizeError("distribute_trials: no levels");
    std::vector<std::size_t> out(levels, total / levels);
    for (std::size_t i = 0; i < total % levels; ++i) ++out[i];
    return out;
}

std::vector<double> centered_grid(double center, const ObserverConfig& config) {
    if (!config.amplitude_grid.empty()) return config.amplitude_grid;
    if (!(center > 0.0) || !std::isfinite(center)) throw ParameterDomainError("grid center must be positive and finite");
    std::vector<double> g(config.grid_points);
    const double half = std::log(config.grid_span);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(g.size() - 1);
        g[i] = center * std::exp(-half + 2.0 * half * t);
    }
    return g;
}

PsychometricFit measure_threshold(const ModelChain& model, const Grid2& x, const Grid2& e,
                                  const ObserverConfig& config, std::uint64_t subject) {
    config.validate();
    const double center = analytic_threshold(model, x, e, config);
    if (!std::isfinite(center)) {
        PsychometricFit fit;
        fit.threshold = kInfiniteThreshold;
        fit.censored = true;
        return fit;
    }
    const std::vector<double> grid = centered_grid(center, config);
    const std::vector<std::size_t> counts = distribute_trials(config.trials_per_vector, grid.size());
    std::vector<double> props(grid.size());
    for (std::size_t l = 0; l < grid.size(); ++l) {
        if (counts[l] == 0) throw ParameterDomainError("fewer trials than amplitude levels");
        props[l] = simulate_2afc(model, x, e, grid[l], config, counts[l], derive_seed(config.seed, {subject, l}));
    }
    return fit_psychometric(grid, props, counts, config.criterion);
}

DReport empirical_D(std::span<const DistortionPair> pairs, const ModelChain& reference,
                    std::span<const Grid2> images, const ObserverConfig& config, std::size_t subjects,
                    bool analytic) {
    if (pairs.size() != images.size()) throw ShapeError("empirical_D: one distortion pair per image required");
    if (images.empty()) throw SizeError("empirical_D: no images");
    if (!analytic && subjects == 0) throw SizeError("empirical_D: no subjects");
    DReport rep;
    const std::size_t n_subj = analytic ? 1 : subjects;
    double sum = 0.0;
    bool infinite = false;
    for (std::size_t i = 0; i < images.size(); ++i) {
        ObserverConfig cfg = config;
        cfg.seed = derive_seed(config.seed, {i});
        for (std::size_t s = 0; s < n_subj; ++s) {
            DEntry e;
            e.image = i;
            e.subject = s;
            e.seed = cfg.seed;
            if (analytic) {
                e.threshold_max = analytic_threshold(reference, images[i], pairs[i].e_max, cfg);
                e.threshold_min = analytic_threshold(reference, images[i], pairs[i].e_min, cfg);
            } else {
                e.fit_max = measure_threshold(reference, images[i], pairs[i].e_max, cfg, 2 * s);
                e.fit_min = measure_threshold(reference, images[i], pairs[i].e_min, cfg, 2 * s + 1);
                e.threshold_max = e.fit_max.threshold;
                e.threshold_min = e.fit_min.threshold;
            }
            e.censored = !std::isfinite(e.threshold_max) || !std::isfinite(e.threshold_min);
            if (e.censored) {
                e.log_ratio = std::isfinite(e.threshold_min) ? -kInfiniteThreshold : kInfiniteThreshold;
                if (!std::isfinite(e.threshold_min) && !std::isfinite(e.threshold_max)) {
                    e.log_ratio = std::numeric_limits<double>::quiet_NaN();
                }
                ++rep.n_censored;
                infinite = infinite || e.log_ratio == kInfiniteThreshold;
            } else {
                e.log_ratio = std::log(e.threshold_min / e.threshold_max);
                sum += e.log_ratio;
                ++rep.n_finite;
            }
            rep.entries.push_back(e);
        }
    }
    rep.D_finite = rep.n_finite > 0 ? sum / static_cast<double>(rep.n_finite) : std::numeric_limits<double>::quiet_NaN();
    rep.D = infinite ? kInfiniteThreshold : rep.D_finite;
    return rep;
}

RatioExperiment eigen_threshold_experiment(const ModelChain& model, const Grid2& x, const EigenResult& eig,
                                           const ObserverConfig& config, std::uint64_t subject) {
    RatioExperiment out;
    out.predicted = predicted_log_threshold_ratio(eig);
    out.fit_max = measure_threshold(model, x, eig.e_max, config, 2 * subject);
    if (eig.rank_deficient) {
        out.fit_min.threshold = kInfiniteThreshold;
        out.fit_min.censored = true;
    } else {
        out.fit_min = measure_threshold(model, x, eig.e_min, config, 2 * subject + 1);
    }
    out.measured = out.fit_min.censored ? kInfiniteThreshold : std::log(out.fit_min.threshold / out.fit_max.threshold);
    return out;
}

}  // namespace eigdist
