#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eigdist/nnls.hpp"
#include "eigdist/zoo.hpp"

namespace eigdist {

/// One rated distortion: reference, distorted image, and a score that grows
/// with perceived distortion.
struct DatasetRecord {
    Grid2 reference;
    Grid2 distorted;
    double score = 0.0;
};

/// |f(x) - f(x')|_2.
double perceptual_distance(const ModelChain& model, const Grid2& x, const Grid2& x_prime);

/// Centered Pearson correlation. Throws SizeError below 3 points and
/// UndefinedCorrelationError when either side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    double weight_decay = 1e-4;
    std::size_t epochs = 10;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    double holdout_fraction = 0.2;

    void validate() const;
};

struct ObjectiveResult {
    double rho = 0.0;
    /// rho - weight_decay/2 * |theta|^2, the quantity the gradient ascends.
    double objective = 0.0;
    std::vector<double> gradient;  // d objective / d theta
    std::vector<double> distances;
};

/// Pearson correlation of model distances with scores over a batch, and its
/// gradient with respect to the model's unconstrained theta, minus
/// weight_decay * theta. Throws DiagnosticsError naming the record when a
/// gradient entry is not finite.
ObjectiveResult objective_and_gradient(const ZooModel& model, std::span<const DatasetRecord> batch,
                                       double weight_decay);

/// Model distances for every record.
std::vector<double> model_distances(const ModelChain& model, std::span<const DatasetRecord> records);
/// pearson(model_distances, scores).
double evaluate_rho(const ModelChain& model, std::span<const DatasetRecord> records);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;
};

/// Bias-corrected Adam update in the ascent direction; initializes the
/// accumulators on first use.
void adam_step(AdamState& state, std::vector<double>& theta, std::span<const double> gradient,
               const TrainConfig& config);

struct TrainLogEntry {
    std::size_t epoch = 0;
    double rho_train = 0.0;
    double rho_holdout = 0.0;
};

struct TrainResult {
    ZooModel model;
    std::vector<TrainLogEntry> log;
    std::size_t best_epoch = 0;
    double best_rho_holdout = 0.0;
    std::vector<std::size_t> holdout_indices;
};

/// Adam ascent on the batch correlation. The holdout split is drawn once from
/// the seed; batches are reshuffled every epoch. Epoch 0 in the log is the
/// starting point. Returns the parameters with the best holdout correlation
/// (training correlation when there is no holdout). For the CNN the per-layer
/// divisors are recomputed from each batch and held constant in its gradient,
/// then frozen to statistics over the whole training split.
TrainResult train(const ZooModel& initial, std::span<const DatasetRecord> dataset, const TrainConfig& config);

struct SyntheticConfig {
    std::size_t n_records = 200;
    /// Standard deviation of the additive score noise.
    double score_noise = 0.0;
    /// When set, score_noise is a fraction of std(D_true).
    bool relative_noise = false;
    double score_gain = 1.0;     // a
    double score_offset = 1.0;   // b
    double min_amplitude = 0.01;
    double max_amplitude = 0.1;
    std::uint64_t seed = 0;
};

struct SyntheticDataset {
    std::vector<DatasetRecord> records;
    std::vector<double> true_distances;
    double noise_sd = 0.0;  // absolute, as applied
};

/// Records from a ground-truth model: each picks a base image, adds seeded
/// noise (white or Gaussian-blurred) of log-uniform random amplitude, clamps
/// to [0, 1], and scores a * D_true + b + N(0, noise_sd^2).
SyntheticDataset generate_synthetic_dataset(const ModelChain& truth, std::span<const Grid2> base_images,
                                            const SyntheticConfig& config);

/// Stages whose outputs enter the weighted metric: every softplus stage.
std::vector<std::size_t> rectified_stages(const ModelChain& model);

/// Column j, row i: |s_j(x_i) - s_j(x'_i)|^2 for stage output s_j.
Eigen::MatrixXd stage_distance_matrix(const ModelChain& model, std::span<const DatasetRecord> records,
                                      std::span<const std::size_t> stages);

struct StageWeights {
    std::vector<std::size_t> stages;
    NnlsResult fit;
};

/// Non-negative stage weights fitting the scores rescaled affinely to [0, 1].
StageWeights fit_stage_weights_nnls(const ModelChain& model, std::span<const DatasetRecord> records);

}  // namespace eigdist
