#pragma once

#include "simplexreg/codec.hpp"
#include "simplexreg/data.hpp"
#include "simplexreg/losses.hpp"
#include "simplexreg/nn.hpp"
#include "simplexreg/optim.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace simplexreg {

enum class Method {
    ls,            // squared loss on a direct regressor f(x) in R^m
    ls_softmax,    // squared loss on mu^T softmax(g(x)), (theta, mu) trained jointly
    hard_bin,      // KL to nearest-center one-hots, mu = centers
    soft_bin,      // KL to a frozen Gaussian soft-binning encoder
    pretrain_enc,  // codec pretrained on targets, then frozen as in soft_bin
    end_to_end,    // composite objective over (w, mu, theta)
};

std::string to_string(Method m);
Method parse_method(const std::string& name);
bool is_classification(Method m);
const std::vector<Method>& all_methods();

/// 10^(-7/6): the grid value selected most often for the KL weight.
inline constexpr double kDefaultLambdaKl = 0.06812920690579612;

struct MethodKind {
    Method method = Method::ls;
    Index k = 25;
    double lambda_sigma = 1.0;
    BinStyle bin_style = BinStyle::equal_width;
    LossWeights weights{1.0, kDefaultLambdaKl, 1.0, 1e-6};
    /// Entropy coefficient of stage-1 pretraining (pretrain_enc).
    double alpha = 1e-6;
    /// Stage-1 epochs for pretrain_enc; 0 reuses TrainConfig::epochs.
    int pretrain_epochs = 0;
    int kmeans_iters = 50;
    /// end_to_end only: keep the initial codec fixed and train theta alone.
    bool freeze_codec = false;

    std::string label() const;
};

struct ModelConfig {
    std::vector<Index> hidden_dims{128, 128};
    double dropout_rate = 0.3;
};

/// Input dim from the data; output dim m for ls, k otherwise.
MlpSpec mlp_spec_for(const MethodKind& method, const PreparedDataset& ds, const ModelConfig& model);

/// Trained model bundle. For ls `codec` is empty; for the classification-style
/// methods predictions are mu^T softmax(g(x)) with mu = codec.mu. Methods with
/// no learned encoder keep zero encoder weights.
struct Predictor {
    Method method = Method::ls;
    MlpModel mlp;
    TargetCodec codec;

    Tensor predict(const Eigen::Ref<const Tensor>& x) const;
    /// softmax(g(x)); classification-style methods only.
    Tensor class_probs(const Eigen::Ref<const Tensor>& x) const;
};

struct EvalStats {
    double rmse = 0.0;
    std::size_t batches = 0;
    std::size_t hull_violations = 0;  // batches with a decoded coordinate outside [min mu, max mu]
};

EvalStats evaluate(const Predictor& p, const Eigen::Ref<const Tensor>& x,
                   const Eigen::Ref<const Tensor>& y, Index batch_size = 4096);
/// sqrt(mean_b ||y_b - prediction_b||^2) in scaled target units.
double evaluate_rmse(const Predictor& p, const Eigen::Ref<const Tensor>& x,
                     const Eigen::Ref<const Tensor>& y);
double evaluate_rmse(const Predictor& p, const PreparedDataset& ds, Split split);
/// Same RMSE after mapping predictions and targets back to original units.
double evaluate_rmse_unscaled(const Predictor& p, const PreparedDataset& ds, Split split);

struct ExperimentResult {
    std::string dataset;
    MethodKind method;
    std::uint64_t seed = 0;
    double best_val_rmse = 0.0;
    double test_rmse = 0.0;
    double normalized_test_rmse = std::numeric_limits<double>::quiet_NaN();  // set by run_benchmark
    int best_epoch = -1;
    std::map<std::string, double> hparams;
    double wall_clock_s = 0.0;
    bool failed = false;
    std::string error;
};

struct TrainTrace {
    std::vector<double> step_loss;
    std::vector<double> epoch_train_loss;  // mean of step losses per epoch
    std::vector<double> epoch_val_rmse;
    std::size_t hull_violations = 0;       // over every evaluation batch
    std::vector<double> pretrain_step_loss;
};

struct FitOutput {
    Predictor predictor;        // best-validation checkpoint
    Predictor final_predictor;  // parameters after the last epoch
    ExperimentResult result;
    TrainTrace trace;
};

/// Trains one method with Adam, gradient clipping and the configured
/// schedule, evaluating validation RMSE after every epoch and keeping the best
/// parameters. Test RMSE is measured on that checkpoint. Throws TrainingError
/// (with epoch and step) on a non-finite loss.
FitOutput train_method(const MethodKind& method, const PreparedDataset& ds,
                       const MlpSpec& mlp_spec, const TrainConfig& cfg);

/// Hard binner used by hard_bin: equal-width or quantile for m == 1 over the
/// train target range, k-means centers for m > 1.
HardBinner make_hard_binner(const MethodKind& method, const PreparedDataset& ds, Rng& rng);

/// Codec initialization used by soft_bin, pretrain_enc, end_to_end and the mu
/// of ls_softmax: uniform grid for m == 1, k-means++ for m > 1.
TargetCodec initial_codec(const MethodKind& method, const PreparedDataset& ds, Rng& rng);

// ---------------------------------------------------------------------------

struct SummaryRow {
    std::string dataset;
    std::string label;
    Method method = Method::ls;
    Index k = 0;
    std::size_t seeds = 0;
    std::size_t failures = 0;
    double mean_val_rmse = 0.0;
    double mean_test_rmse = 0.0;
    double std_test_rmse = 0.0;
    double normalized = 0.0;
    std::vector<double> per_seed_test_rmse;
};

struct BenchmarkTable {
    std::vector<ExperimentResult> cells;
    std::vector<SummaryRow> summary;
};

/// Trains every (dataset, method, k, seed) cell, in parallel over `jobs`
/// threads, and summarizes means over seeds normalized by the least-squares
/// mean of the same dataset. Least squares is added when absent. A failing
/// cell is recorded with failed = true; the remaining cells still run. The
/// output does not depend on `jobs`.
BenchmarkTable run_benchmark(std::span<const PreparedDataset> datasets,
                             const std::vector<MethodKind>& methods, const std::vector<Index>& ks,
                             const std::vector<std::uint64_t>& seeds, const ModelConfig& model,
                             const TrainConfig& cfg, int jobs = 1);

using HparamGrid = std::vector<std::pair<std::string, std::vector<double>>>;

/// Applies one named hyperparameter. Names: lr, epochs, batch_size, k,
/// lambda_sigma, lambda_auto, lambda_kl, lambda_pred, alpha, weight_decay,
/// dropout.
void apply_hparam(const std::string& name, double value, MethodKind& method, TrainConfig& cfg,
                  ModelConfig& model);

struct SweepPoint {
    std::map<std::string, double> hparams;
    std::vector<ExperimentResult> runs;  // one per seed
    double mean_val_rmse = 0.0;
    double mean_test_rmse = 0.0;
    bool failed = false;
};

struct SweepResult {
    std::vector<SweepPoint> points;  // cartesian product, first grid entry varies slowest
    std::size_t best = 0;
    MethodKind best_method;
    TrainConfig best_cfg;
    ModelConfig best_model;
};

/// Trains every grid point over `seeds` and selects the lowest mean validation
/// RMSE; ties go to the smaller lambda_kl, then the smaller lr.
SweepResult sweep(const PreparedDataset& ds, const MethodKind& method, const HparamGrid& grid,
                  const std::vector<std::uint64_t>& seeds, const ModelConfig& model,
                  const TrainConfig& cfg, int jobs = 1);

/// `count` values log-spaced over [10^lo, 10^hi].
std::vector<double> logspace(double lo_exp, double hi_exp, int count);

/// The default KL-weight grid: 10 points over [10^-1.5, 10^1.5].
std::vector<double> default_lambda_kl_grid();

/// Runs fn(i) for i in [0, n) over `jobs` worker threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace simplexreg
