#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include <boost/math/distributions/normal.hpp>

#include "eigdist/error.hpp"
#include "eigdist/fixtures.hpp"
#include "eigdist/observer.hpp"
#include "eigdist/zoo.hpp"

using namespace eigdist;

namespace {

double Phi(double z) { return boost::math::cdf(boost::math::normal(), z); }

IterationConfig tight() {
    IterationConfig c;
    c.tol = 1e-12;
    c.max_iters = 20000;
    c.seed = 1;
    return c;
}

Grid2 unit_fixture(std::uint64_t seed, std::size_t side) {
    Grid2 e = oracle::random_unit(seed, side, side);
    return e;
}

}  // namespace

TEST_CASE("analytic threshold of the identity observer") {
    const ModelChain mse = mse_model(8, 8);
    const Grid2 x = fixture_image(1, 8, 8);
    ObserverConfig cfg;
    CHECK(cfg.beta() == doctest::Approx(0.9538725524).epsilon(1e-9));
    CHECK(analytic_threshold(mse, x, unit_fixture(3, 8), cfg) == doctest::Approx(cfg.beta()).epsilon(1e-12));
    cfg.sigma = 2.0;
    CHECK(analytic_threshold(mse, x, unit_fixture(3, 8), cfg) == doctest::Approx(2 * 0.9538725524).epsilon(1e-9));

    // The constant image is a null direction of LN up to rounding.
    const ZooModel ln = ZooModel::make_default(ModelType::ln, 8, 8);
    CHECK(analytic_threshold(ln.chain(), x, Grid2(8, 8, 1.0 / 8.0), ObserverConfig{}) > 1e10);
    CHECK(std::isinf(analytic_threshold(ln.chain(), x, Grid2(8, 8, 0.0), ObserverConfig{})));
}

TEST_CASE("analytic thresholds of the eigenvectors follow the eigenvalues") {
    const ZooModel m = ZooModel::make_default(ModelType::onoff, 10, 10);
    const Grid2 x = fixture_image(2, 10, 10);
    const EigenResult eig = synthesize(m.chain(), x, tight());
    const ObserverConfig cfg;
    const double tmax = analytic_threshold(m.chain(), x, eig.e_max, cfg);
    const double tmin = analytic_threshold(m.chain(), x, eig.e_min, cfg);
    CHECK(tmax == doctest::Approx(cfg.beta() / std::sqrt(eig.lambda_max)).epsilon(1e-9));
    CHECK(std::log(tmin / tmax) == doctest::Approx(*predicted_log_threshold_ratio(eig)).epsilon(1e-6));
}

TEST_CASE("2afc proportions: chance, saturation, criterion") {
    const ModelChain mse = mse_model(8, 8);
    const Grid2 x = fixture_image(4, 8, 8);
    const Grid2 e = unit_fixture(5, 8);
    const ObserverConfig cfg;
    const double t = analytic_threshold(mse, x, e, cfg);

    const std::size_t n = 4000;
    const double chance = simulate_2afc(mse, x, e, 1e-9 * t, cfg, n, 1);
    CHECK(std::abs(chance - 0.5) <= 3.0 * std::sqrt(0.25 / n));
    CHECK(simulate_2afc(mse, x, e, 10 * t, cfg, 2000, 2) >= 0.99);
    CHECK(std::abs(simulate_2afc(mse, x, e, t, cfg, 100000, 3) - 0.75) <= 0.02);

    CHECK(simulate_2afc(mse, x, e, t, cfg, 500, 9) == simulate_2afc(mse, x, e, t, cfg, 500, 9));
    CHECK_THROWS_AS(simulate_2afc(mse, x, e, 0.0, cfg, 10, 1), ParameterDomainError);
}

TEST_CASE("2afc proportions of the identity observer follow the ideal curve") {
    const ModelChain mse = mse_model(8, 8);
    const Grid2 x = fixture_image(4, 8, 8);
    const Grid2 e = unit_fixture(8, 8);
    ObserverConfig cfg;
    cfg.sigma = 0.3;
    for (double alpha : {0.1, 0.3, 0.6}) {
        const double p = simulate_2afc(mse, x, e, alpha, cfg, 20000, 12);
        CHECK(std::abs(p - Phi(alpha / (std::sqrt(2.0) * cfg.sigma))) <= 4.0 * std::sqrt(0.25 / 20000));
    }
}

TEST_CASE("2afc proportion increases with amplitude") {
    const ZooModel m = ZooModel::make_default(ModelType::onoff, 8, 8);
    const Grid2 x = fixture_image(6, 8, 8);
    const Grid2 e = unit_fixture(7, 8);
    const ObserverConfig cfg;
    const double t = analytic_threshold(m.chain(), x, e, cfg);
    double previous = 0.0;
    for (double f : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double p = simulate_2afc(m.chain(), x, e, f * t, cfg, 20000, 11);
        CHECK(p > previous);
        previous = p;
    }
}

TEST_CASE("psychometric fit recovers a known curve") {
    const double m = std::log(0.2), s = 0.8;
    std::vector<double> alphas, props;
    std::vector<std::size_t> counts;
    for (int i = -4; i <= 4; ++i) {
        const double a = 0.2 * std::pow(1.3, i);
        alphas.push_back(a);
        props.push_back(Phi(std::pow(a / std::exp(m), 1.0 / s)));
        counts.push_back(1000);
    }
    const PsychometricFit fit = fit_psychometric(alphas, props, counts, 0.75);
    const double truth = std::exp(m) * std::pow(0.674489750196082, s);
    CHECK(fit.threshold == doctest::Approx(truth).epsilon(0.01));
    CHECK(fit.slope == doctest::Approx(s).epsilon(0.02));
    CHECK_FALSE(fit.censored);

    std::vector<double> scaled = alphas;
    for (double& a : scaled) a *= 10.0;
    const PsychometricFit ten = fit_psychometric(scaled, props, counts, 0.75);
    CHECK(ten.threshold == doctest::Approx(10.0 * fit.threshold).epsilon(1e-3));
}

TEST_CASE("psychometric fit of a step lands inside the step") {
    const std::vector<double> alphas{0.1, 0.2, 0.4, 0.8, 1.6, 3.2};
    const std::vector<double> props{0.5, 0.5, 0.5, 1.0, 1.0, 1.0};
    const std::vector<std::size_t> counts(6, 50);
    const PsychometricFit fit = fit_psychometric(alphas, props, counts, 0.75);
    CHECK(fit.threshold > 0.4);
    CHECK(fit.threshold < 0.8);
}

TEST_CASE("psychometric fit input checks") {
    const std::vector<double> alphas{0.1, 0.2, 0.4, 0.8};
    const std::vector<std::size_t> counts(4, 20);
    CHECK_THROWS_AS(fit_psychometric(alphas, std::vector<double>{0.5, 0.55, 0.6, 0.7}, counts),
                    NonBracketedError);
    CHECK_THROWS_AS(fit_psychometric(alphas, std::vector<double>{0.8, 0.9, 0.95, 1.0}, counts),
                    NonBracketedError);
    CHECK_THROWS_AS(fit_psychometric(alphas, std::vector<double>{0.5, 0.6, 0.8}, counts), ShapeError);
    CHECK_THROWS_AS(fit_psychometric(std::vector<double>{0.1, 0.2, 0.4}, std::vector<double>{0.5, 0.6, 0.8},
                                     std::vector<std::size_t>(3, 5)),
                    SizeError);
    CHECK_THROWS_AS(fit_psychometric(alphas, std::vector<double>{0.5, 0.6, 1.2, 0.9}, counts), InputDomainError);
}

TEST_CASE("trial distribution and grids") {
    const auto d = distribute_trials(120, 9);
    CHECK(d == std::vector<std::size_t>{14, 14, 14, 13, 13, 13, 13, 13, 13});
    ObserverConfig cfg;
    const auto g = centered_grid(0.5, cfg);
    REQUIRE(g.size() == 9);
    CHECK(g.front() == doctest::Approx(0.5 / 3.0).epsilon(1e-12));
    CHECK(g.back() == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(g[4] == doctest::Approx(0.5).epsilon(1e-12));
    cfg.grid_points = 3;
    CHECK_THROWS_AS(cfg.validate(), ParameterDomainError);
    cfg = ObserverConfig{};
    cfg.criterion = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ParameterDomainError);
}

TEST_CASE("measured identity-observer threshold") {
    const ModelChain mse = mse_model(8, 8);
    const Grid2 x = fixture_image(1, 8, 8);
    const Grid2 e = unit_fixture(21, 8);
    ObserverConfig cfg;
    cfg.seed = 1;
    // At 120 trials the log threshold has a spread of about 0.32, so a
    // single run is not a precise estimate; the average over subjects is
    // unbiased.
    double mean_log = 0.0;
    const int subjects = 100;
    for (int k = 0; k < subjects; ++k) {
        mean_log += std::log(measure_threshold(mse, x, e, cfg, 100 + k).threshold / cfg.beta()) / subjects;
    }
    CHECK(std::abs(mean_log) <= 0.1);
    const PsychometricFit small = measure_threshold(mse, x, e, cfg);

    cfg.trials_per_vector = 1000000;
    const PsychometricFit big = measure_threshold(mse, x, e, cfg);
    CHECK(std::abs(big.threshold / cfg.beta() - 1.0) <= 0.01);

    cfg.trials_per_vector = 120;
    const PsychometricFit again = measure_threshold(mse, x, e, cfg);
    CHECK(again.threshold == small.threshold);
    CHECK(again.proportions == small.proportions);
    const PsychometricFit other = measure_threshold(mse, x, e, cfg, 1);
    CHECK(other.proportions != small.proportions);
}

TEST_CASE("a direction without response change gives a censored threshold") {
    const ZooModel ln = ZooModel::make_default(ModelType::ln, 8, 8);
    const PsychometricFit fit =
        measure_threshold(ln.chain(), fixture_image(1, 8, 8), Grid2(8, 8, 0.0), ObserverConfig{});
    CHECK(fit.censored);
    CHECK(std::isinf(fit.threshold));
}

namespace {

std::vector<DistortionPair> pairs_for(const ModelChain& m, std::span<const Grid2> images) {
    std::vector<DistortionPair> out;
    for (const Grid2& x : images) {
        EigenResult eig = synthesize(m, x, tight());
        out.push_back({std::move(eig.e_max), std::move(eig.e_min)});
    }
    return out;
}

}  // namespace

TEST_CASE("analytic D of a model against itself is its mean predicted ratio") {
    const std::size_t side = 10;
    const std::vector<Grid2> images{fixture_image(11, side, side), fixture_image(12, side, side)};
    const ZooModel m = ZooModel::make_default(ModelType::onoff, side, side);
    double expect = 0.0;
    std::vector<DistortionPair> pairs;
    for (const Grid2& x : images) {
        EigenResult eig = synthesize(m.chain(), x, tight());
        expect += *predicted_log_threshold_ratio(eig) / images.size();
        pairs.push_back({eig.e_max, eig.e_min});
    }
    const DReport r = empirical_D(pairs, m.chain(), images, ObserverConfig{}, 0, true);
    CHECK(r.D == doctest::Approx(expect).epsilon(1e-6));
    CHECK(r.n_finite == 2);

    ObserverConfig loud;
    loud.sigma = 3.7;
    CHECK(empirical_D(pairs, m.chain(), images, loud, 0, true).D == doctest::Approx(r.D).epsilon(1e-12));
}

TEST_CASE("analytic D orders the models under an On-Off reference") {
    const std::size_t side = 10;
    const std::vector<Grid2> images{fixture_image(11, side, side), fixture_image(12, side, side)};
    const ZooModel ref = ZooModel::make_default(ModelType::onoff, side, side);
    auto d_of = [&](ModelType t) {
        const ZooModel m = ZooModel::make_default(t, side, side);
        return empirical_D(pairs_for(m.chain(), images), ref.chain(), images, ObserverConfig{}, 0, true).D;
    };
    const double onoff = d_of(ModelType::onoff), ln = d_of(ModelType::ln);
    CHECK(onoff > ln);
    CHECK(ln > 0.0);

    const ModelChain mse = mse_model(side, side);
    const DReport self = empirical_D(pairs_for(mse, images), mse, images, ObserverConfig{}, 0, true);
    CHECK(std::abs(self.D) <= 1e-12);
}

TEST_CASE("simulated D is reproducible and checks its inputs") {
    const std::size_t side = 8;
    const std::vector<Grid2> images{fixture_image(11, side, side)};
    const ModelChain mse = mse_model(side, side);
    const auto pairs = pairs_for(mse, images);
    ObserverConfig cfg;
    cfg.seed = 4;
    const DReport a = empirical_D(pairs, mse, images, cfg, 2);
    const DReport b = empirical_D(pairs, mse, images, cfg, 2);
    REQUIRE(a.entries.size() == 2);
    CHECK(a.D == b.D);
    CHECK(a.entries[0].threshold_max != a.entries[1].threshold_max);
    CHECK_THROWS_AS(empirical_D(pairs, mse, std::vector<Grid2>{}, cfg, 2), ShapeError);
    CHECK_THROWS_AS(empirical_D(pairs, mse, images, cfg, 0), SizeError);
}

TEST_CASE("measured ratio follows the predicted ratio with many trials") {
    const ZooModel m = ZooModel::make_default(ModelType::onoff, 8, 8);
    const Grid2 x = fixture_image(1, 8, 8);
    const EigenResult eig = synthesize(m.chain(), x, tight());
    ObserverConfig cfg;
    cfg.seed = 1;
    // Keep both thresholds in the linear regime of the model.
    cfg.sigma = 1e-6 / analytic_threshold(m.chain(), x, eig.e_max, ObserverConfig{});
    cfg.trials_per_vector = 20000;
    const RatioExperiment r = eigen_threshold_experiment(m.chain(), x, eig, cfg);
    REQUIRE(r.predicted.has_value());
    // Sampling SD of the log ratio at 20000 trials is about 0.015.
    CHECK(std::abs(r.measured - *r.predicted) <= 0.06);

    const ZooModel lg = ZooModel::make_default(ModelType::lg, 8, 8);
    const EigenResult blind = synthesize(lg.chain(), x, tight());
    const RatioExperiment c = eigen_threshold_experiment(lg.chain(), x, blind, ObserverConfig{});
    CHECK_FALSE(c.predicted.has_value());
    CHECK(std::isinf(c.measured));
    CHECK(c.fit_min.censored);
}
