#include "eigdist/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "eigdist/error.hpp"
#include "eigdist/kernels.hpp"
#include "eigdist/parallel.hpp"
#include "eigdist/random.hpp"

namespace eigdist {

namespace {

Grid3 difference(const Grid3& a, const Grid3& b) {
    Grid3 d = a;
    axpy(-1.0, b.values(), d.values());
    return d;
}

void check_pair(const DatasetRecord& r, std::size_t index) {
    if (r.reference.height() != r.distorted.height() || r.reference.width() != r.distorted.width()) {
        throw ShapeError("record " + std::to_string(index) + ": reference and distorted sizes differ");
    }
}

// Fisher-Yates driven by the project RNG, so shuffles are identical everywhere.
void shuffle(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
}

std::vector<Grid2> record_images(std::span<const DatasetRecord> records, std::span<const std::size_t> which) {
    std::vector<Grid2> out;
    out.reserve(2 * which.size());
    for (std::size_t i : which) {
        out.push_back(records[i].reference);
        out.push_back(records[i].distorted);
    }
    return out;
}

ZooModel with_divisors(const ZooModel& m, std::span<const DatasetRecord> records, std::span<const std::size_t> which) {
    const CnnParams p = CnnParams::from_flat(m.theta(), m.norm_divisors());
    const std::vector<Grid2> images = record_images(records, which);
    const auto div = cnn_batch_divisors(p, images);
    return ZooModel(m.type(), m.height(), m.width(), m.theta(), {div.begin(), div.end()});
}

std::vector<DatasetRecord> pick(std::span<const DatasetRecord> records, std::span<const std::size_t> which) {
    std::vector<DatasetRecord> out;
    out.reserve(which.size());
    for (std::size_t i : which) out.push_back(records[i]);
    return out;
}

}  // namespace

double perceptual_distance(const ModelChain& model, const Grid2& x, const Grid2& x_prime) {
    if (x.height() != x_prime.height() || x.width() != x_prime.width()) {
        throw ShapeError("perceptual_distance: images differ in size");
    }
    const Grid3 d = difference(model.forward(x), model.forward(x_prime));
    return l2_norm(d.values());
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("pearson: length mismatch");
    if (a.size() < 3) throw SizeError("pearson: need at least 3 points");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw UndefinedCorrelationError("pearson: zero variance");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !(eps_adam > 0.0)) throw ParameterDomainError("learning rate and eps must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ParameterDomainError("Adam betas must lie in [0, 1)");
    }
    if (!(weight_decay >= 0.0)) throw ParameterDomainError("weight decay must be non-negative");
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
        throw ParameterDomainError("holdout fraction must lie in [0, 1)");
    }
    if (batch_size < 3) throw ParameterDomainError("batch size must be at least 3");
}

std::vector<double> model_distances(const ModelChain& model, std::span<const DatasetRecord> records) {
    std::vector<double> d(records.size());
    parallel_for(records.size(), [&](std::size_t i) {
        check_pair(records[i], i);
        d[i] = perceptual_distance(model, records[i].reference, records[i].distorted);
    });
    return d;
}

double evaluate_rho(const ModelChain& model, std::span<const DatasetRecord> records) {
    const std::vector<double> d = model_distances(model, records);
    std::vector<double> s(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) s[i] = records[i].score;
    return pearson(d, s);
}

ObjectiveResult objective_and_gradient(const ZooModel& model, std::span<const DatasetRecord> batch,
                                       double weight_decay) {
    if (batch.size() < 3) throw SizeError("objective: batch needs at least 3 records");
    const ModelChain& chain = model.chain();
    const std::size_t n = batch.size();
    const std::size_t p = chain.param_count();

    // Per-record distance and dD/d(stage params).
    std::vector<double> dist(n);
    std::vector<std::vector<double>> dgrad(n);
    parallel_for(n, [&](std::size_t i) {
        check_pair(batch[i], i);
        const Linearization a = chain.linearize(batch[i].reference);
        const Linearization b = chain.linearize(batch[i].distorted);
        Grid3 u = difference(a.output(), b.output());
        dist[i] = l2_norm(u.values());
        if (p == 0 || dist[i] == 0.0) {
            dgrad[i].assign(p, 0.0);
            return;
        }
        scale(u.values(), 1.0 / dist[i]);
        std::vector<double> g = a.param_vjp(u);
        const std::vector<double> gb = b.param_vjp(u);
        axpy(-1.0, gb, g);
        dgrad[i] = std::move(g);
    });

    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i] = batch[i].score;
    ObjectiveResult out;
    out.rho = pearson(dist, scores);
    out.distances = dist;

    const double nn = static_cast<double>(n);
    const double md = std::accumulate(dist.begin(), dist.end(), 0.0) / nn;
    const double ms = std::accumulate(scores.begin(), scores.end(), 0.0) / nn;
    double dd = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dd += (dist[i] - md) * (dist[i] - md);
        ss += (scores[i] - ms) * (scores[i] - ms);
    }
    const double dnorm = std::sqrt(dd), snorm = std::sqrt(ss);

    std::vector<double> chain_grad(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (scores[i] - ms) / (dnorm * snorm) - out.rho * (dist[i] - md) / dd;
        axpy(w, dgrad[i], chain_grad);
        for (double g : dgrad[i]) {
            if (!std::isfinite(g)) {
                throw DiagnosticsError("non-finite gradient at record " + std::to_string(i));
            }
        }
    }
    out.gradient = model.theta_gradient(chain_grad);
    const auto& theta = model.theta();
    double sq = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        out.gradient[k] -= weight_decay * theta[k];
        sq += theta[k] * theta[k];
        if (!std::isfinite(out.gradient[k])) throw DiagnosticsError("non-finite gradient entry " + std::to_string(k));
    }
    out.objective = out.rho - 0.5 * weight_decay * sq;
    return out;
}

void adam_step(AdamState& state, std::vector<double>& theta, std::span<const double> gradient,
               const TrainConfig& config) {
    if (gradient.size() != theta.size()) throw ShapeError("adam_step: gradient length mismatch");
    if (state.m.empty() && state.v.empty()) {
        state.m.assign(theta.size(), 0.0);
        state.v.assign(theta.size(), 0.0);
    }
    if (state.m.size() != theta.size() || state.v.size() != theta.size()) {
        throw ShapeError("adam_step: state does not match theta");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t k = 0; k < theta.size(); ++k) {
        state.m[k] = config.beta1 * state.m[k] + (1.0 - config.beta1) * gradient[k];
        state.v[k] = config.beta2 * state.v[k] + (1.0 - config.beta2) * gradient[k] * gradient[k];
        const double mhat = state.m[k] / c1;
        const double vhat = state.v[k] / c2;
        theta[k] += config.learning_rate * mhat / (std::sqrt(vhat) + config.eps_adam);
    }
}

TrainResult train(const ZooModel& initial, std::span<const DatasetRecord> dataset, const TrainConfig& config) {
    config.validate();
    if (dataset.size() < 10) throw SizeError("train: need at least 10 records");
    for (std::size_t i = 0; i < dataset.size(); ++i) check_pair(dataset[i], i);

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(derive_seed(config.seed, {0}));
    shuffle(order, split_rng);
    const auto n_hold = static_cast<std::size_t>(std::floor(config.holdout_fraction * static_cast<double>(dataset.size())));
    if (n_hold > 0 && n_hold < 3) throw SizeError("train: holdout split needs at least 3 records");
    std::vector<std::size_t> hold(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hold));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_hold), order.end());
    if (train_idx.size() < 3) throw SizeError("train: training split needs at least 3 records");
    std::sort(hold.begin(), hold.end());
    std::sort(train_idx.begin(), train_idx.end());
    const std::vector<DatasetRecord> train_set = pick(dataset, train_idx);
    const std::vector<DatasetRecord> hold_set = pick(dataset, hold);

    const bool cnn = initial.type() == ModelType::cnn;
    std::vector<std::size_t> all_train(train_set.size());
    std::iota(all_train.begin(), all_train.end(), 0);
    auto frozen = [&](const ZooModel& m) { return cnn ? with_divisors(m, train_set, all_train) : m; };

    TrainResult result{frozen(initial), {}, 0, 0.0, hold};
    auto log_epoch = [&](std::size_t epoch, const ZooModel& m) {
        TrainLogEntry e;
        e.epoch = epoch;
        e.rho_train = evaluate_rho(m.chain(), train_set);
        e.rho_holdout = hold_set.empty() ? e.rho_train : evaluate_rho(m.chain(), hold_set);
        result.log.push_back(e);
        if (result.log.size() == 1 || e.rho_holdout > result.best_rho_holdout) {
            result.best_rho_holdout = e.rho_holdout;
            result.best_epoch = epoch;
            result.model = m;
        }
    };
    log_epoch(0, result.model);

    std::vector<double> theta = initial.theta();
    AdamState adam;
    ZooModel current = initial;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        if (!theta.empty()) {
            std::vector<std::size_t> perm = all_train;
            Rng rng(derive_seed(config.seed, {1, epoch}));
            shuffle(perm, rng);
            std::size_t n_batches = std::max<std::size_t>(1, perm.size() / config.batch_size);
            for (std::size_t b = 0; b < n_batches; ++b) {
                const std::size_t lo = b * config.batch_size;
                const std::size_t hi = b + 1 == n_batches ? perm.size() : lo + config.batch_size;
                const std::span<const std::size_t> which(perm.data() + lo, hi - lo);
                ZooModel m = current.with_theta(theta);
                if (cnn) m = with_divisors(m, train_set, which);
                const std::vector<DatasetRecord> batch = pick(train_set, which);
                const ObjectiveResult obj = objective_and_gradient(m, batch, config.weight_decay);
                adam_step(adam, theta, obj.gradient, config);
            }
            current = current.with_theta(theta);
        }
        log_epoch(epoch, frozen(current));
    }
    return result;
}

SyntheticDataset generate_synthetic_dataset(const ModelChain& truth, std::span<const Grid2> base_images,
                                            const SyntheticConfig& config) {
    if (base_images.empty()) throw SizeError("synthetic dataset: no base images");
    if (!(config.score_noise >= 0.0)) throw ParameterDomainError("score noise must be non-negative");
    if (!(config.min_amplitude > 0.0) || !(config.max_amplitude >= config.min_amplitude)) {
        throw ParameterDomainError("amplitude range must be positive and ordered");
    }
    SyntheticDataset out;
    out.records.resize(config.n_records);
    out.true_distances.resize(config.n_records);
    const double lo = std::log(config.min_amplitude), hi = std::log(config.max_amplitude);
    parallel_for(config.n_records, [&](std::size_t i) {
        Rng rng(derive_seed(config.seed, {0, i}));
        const Grid2& base = base_images[rng.below(base_images.size())];
        const double amp = std::exp(lo + (hi - lo) * rng.uniform());
        // Blur class: 0 = white noise, otherwise sigma in {0.6, 1.2, 2.4}.
        const std::uint64_t blur_class = rng.below(4);
        Grid2 noise = gaussian_noise(rng.next_bits(), base.height(), base.width());
        if (blur_class > 0) {
            noise = convolve(noise, gaussian_kernel(0.6 * std::pow(2.0, static_cast<double>(blur_class - 1))));
            const double rms = l2_norm(noise.values()) / std::sqrt(static_cast<double>(noise.size()));
            if (rms > 0.0) scale(noise.values(), 1.0 / rms);
        }
        Grid2 dist = base;
        for (std::size_t k = 0; k < dist.size(); ++k) {
            dist.values()[k] = std::clamp(dist.values()[k] + amp * noise.values()[k], 0.0, 1.0);
        }
        out.true_distances[i] = perceptual_distance(truth, base, dist);
        out.records[i] = DatasetRecord{base, std::move(dist), 0.0};
    });
    out.noise_sd = config.score_noise;
    if (config.relative_noise) {
        const double n = static_cast<double>(config.n_records);
        const double mean = std::accumulate(out.true_distances.begin(), out.true_distances.end(), 0.0) / n;
        double sq = 0.0;
        for (double d : out.true_distances) sq += (d - mean) * (d - mean);
        out.noise_sd = config.score_noise * (n > 0 ? std::sqrt(sq / n) : 0.0);
    }
    Rng noise_rng(derive_seed(config.seed, {1}));
    for (std::size_t i = 0; i < config.n_records; ++i) {
        const double eps = noise_rng.normal();
        out.records[i].score = config.score_gain * out.true_distances[i] + config.score_offset + out.noise_sd * eps;
    }
    return out;
}

std::vector<std::size_t> rectified_stages(const ModelChain& model) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < model.stages().size(); ++k) {
        if (model.stages()[k]->name() == "softplus") out.push_back(k);
    }
    return out;
}

Eigen::MatrixXd stage_distance_matrix(const ModelChain& model, std::span<const DatasetRecord> records,
                                      std::span<const std::size_t> stages) {
    for (std::size_t s : stages) {
        if (s >= model.stages().size()) throw ShapeError("stage index " + std::to_string(s) + " out of range");
    }
    Eigen::MatrixXd r(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(stages.size()));
    parallel_for(records.size(), [&](std::size_t i) {
        check_pair(records[i], i);
        const auto a = model.stage_outputs(records[i].reference);
        const auto b = model.stage_outputs(records[i].distorted);
        for (std::size_t j = 0; j < stages.size(); ++j) {
            const Grid3 d = difference(a[stages[j]], b[stages[j]]);
            const double n = l2_norm(d.values());
            r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = n * n;
        }
    });
    return r;
}

StageWeights fit_stage_weights_nnls(const ModelChain& model, std::span<const DatasetRecord> records) {
    StageWeights out;
    out.stages = rectified_stages(model);
    if (out.stages.empty()) throw ShapeError("model has no rectified stages");
    if (records.size() < out.stages.size()) throw SizeError("nnls: fewer records than stages");
    const Eigen::MatrixXd r = stage_distance_matrix(model, records, out.stages);
    Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) y(static_cast<Eigen::Index>(i)) = records[i].score;
    const double lo = y.minCoeff(), hi = y.maxCoeff();
    if (hi > lo) {
        y = ((y.array() - lo) / (hi - lo)).matrix();
    } else {
        y.setZero();
    }
    out.fit = nnls(r, y);
    return out;
}

}  // namespace eigdist
