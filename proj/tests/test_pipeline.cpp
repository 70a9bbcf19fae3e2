#include "simplexreg/container.hpp"
#include "simplexreg/pipeline.hpp"
#include "simplexreg/report.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

using namespace simplexreg;

namespace {

PreparedDataset small_sinusoid(Index n = 400, double noise = 0.0, std::uint64_t seed = 1) {
    Rng rng(seed);
    return synth_dataset(SynthKind::sinusoid, n, noise, rng);
}

TrainConfig quick(int epochs = 5, std::uint64_t seed = 0) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.max_lr = 3e-3;
    cfg.seed = seed;
    return cfg;
}

ModelConfig tiny_model() {
    return {{16, 16}, 0.1};
}

MethodKind kind(Method m, Index k = 9) {
    MethodKind mk;
    mk.method = m;
    mk.k = k;
    return mk;
}

FitOutput fit(const MethodKind& m, const PreparedDataset& ds, const TrainConfig& cfg) {
    return train_method(m, ds, mlp_spec_for(m, ds, tiny_model()), cfg);
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(Method, NamesRoundTrip) {
    EXPECT_EQ(all_methods().size(), 6u);
    for (Method m : all_methods()) EXPECT_EQ(parse_method(to_string(m)), m);
    EXPECT_EQ(parse_method("END-TO-END"), Method::end_to_end);
    EXPECT_THROW(parse_method("huber"), std::invalid_argument);
}

TEST(Evaluate, RmseIdentities) {
    // A least-squares "model" with one linear layer set by hand.
    Predictor p;
    p.method = Method::ls;
    p.mlp.spec = MlpSpec{1, {}, 1, 0.0};
    p.mlp.params = {Tensor::Ones(1, 1), Tensor::Zero(1, 1)};
    const Tensor y = test_util::col({0.1, 0.4, 0.9});
    EXPECT_EQ(evaluate_rmse(p, y, y), 0.0);
    p.mlp.params = {Tensor::Zero(1, 1), Tensor::Constant(1, 1, 0.5)};
    EXPECT_NEAR(evaluate_rmse(p, test_util::col({7}), test_util::col({0.2})), 0.3, 1e-15);
    const double mean = y.mean();
    p.mlp.params[1](0, 0) = mean;
    const double sd = std::sqrt((y.array() - mean).square().mean());
    EXPECT_NEAR(evaluate_rmse(p, y, y), sd, 1e-9);
    EXPECT_THROW(evaluate_rmse(p, Tensor(0, 1), Tensor(0, 1)), DataError);
}

TEST(Train, ShapeMismatchRejected) {
    const PreparedDataset ds = small_sinusoid();
    MlpSpec bad = mlp_spec_for(kind(Method::soft_bin), ds, tiny_model());
    bad.output_dim = 4;
    EXPECT_THROW(train_method(kind(Method::soft_bin), ds, bad, quick()), ShapeError);
    bad = mlp_spec_for(kind(Method::ls), ds, tiny_model());
    bad.input_dim = 3;
    EXPECT_THROW(train_method(kind(Method::ls), ds, bad, quick()), ShapeError);
}

TEST(Train, SeedDeterminismBitwise) {
    const PreparedDataset ds = small_sinusoid();
    for (Method m : all_methods()) {
        const FitOutput a = fit(kind(m), ds, quick(3, 7));
        const FitOutput b = fit(kind(m), ds, quick(3, 7));
        EXPECT_TRUE(bitwise_equal(a.trace.step_loss, b.trace.step_loss)) << to_string(m);
        EXPECT_EQ(a.result.test_rmse, b.result.test_rmse) << to_string(m);
        ASSERT_EQ(a.predictor.mlp.params.size(), b.predictor.mlp.params.size());
        for (std::size_t i = 0; i < a.predictor.mlp.params.size(); ++i) {
            EXPECT_EQ(a.predictor.mlp.params[i], b.predictor.mlp.params[i]);
        }
        const FitOutput c = fit(kind(m), ds, quick(3, 8));
        EXPECT_FALSE(bitwise_equal(a.trace.step_loss, c.trace.step_loss)) << to_string(m);
    }
}

TEST(Train, EndToEndPredOnlyEqualsLsSoftmax) {
    const PreparedDataset ds = small_sinusoid();
    MethodKind e2e = kind(Method::end_to_end);
    e2e.weights = {0, 0, 1, 1e-6};
    const FitOutput a = fit(e2e, ds, quick(4, 3));
    const FitOutput b = fit(kind(Method::ls_softmax), ds, quick(4, 3));
    EXPECT_TRUE(bitwise_equal(a.trace.step_loss, b.trace.step_loss));
    EXPECT_EQ(a.predictor.codec.mu, b.predictor.codec.mu);
}

TEST(Train, EndToEndKlOnlyFrozenEqualsSoftBin) {
    const PreparedDataset ds = small_sinusoid();
    MethodKind e2e = kind(Method::end_to_end);
    e2e.weights = {0, 1, 0, 1e-6};
    e2e.freeze_codec = true;
    const FitOutput a = fit(e2e, ds, quick(4, 3));
    const FitOutput b = fit(kind(Method::soft_bin), ds, quick(4, 3));
    EXPECT_TRUE(bitwise_equal(a.trace.step_loss, b.trace.step_loss));
}

TEST(Train, EndToEndAutoOnlyEqualsPretrain) {
    const PreparedDataset ds = small_sinusoid();
    MethodKind e2e = kind(Method::end_to_end);
    e2e.weights = {1, 0, 0, 1e-6};
    TrainConfig cfg = quick(4, 3);
    cfg.batch_size = 32;
    const FitOutput a = fit(e2e, ds, cfg);
    Rng init(3, streams::init);
    init_mlp(mlp_spec_for(e2e, ds, tiny_model()), init);
    const TargetCodec codec0 = initial_codec(e2e, ds, init);
    const PretrainResult pre = pretrain_codec(codec0, ds.y_train, 1e-6, cfg);
    EXPECT_TRUE(bitwise_equal(a.trace.step_loss, pre.step_losses));
}

TEST(Train, PredictionsStayInDecoderHull) {
    Rng rng(4);
    const PreparedDataset ds2 = synth_dataset(SynthKind::two_blob_2d, 300, 0.05, rng);
    for (const PreparedDataset& ds : {small_sinusoid(), ds2}) {
        for (Method m : all_methods()) {
            if (!is_classification(m)) continue;
            const FitOutput f = fit(kind(m, 5), ds, quick(3));
            EXPECT_EQ(f.trace.hull_violations, 0u) << to_string(m);
            const Tensor z = f.predictor.predict(ds.x_test);
            EXPECT_TRUE(within_decoder_hull(f.predictor.codec.mu, z)) << to_string(m);
        }
    }
}

TEST(Train, ReportsBestValidationCheckpoint) {
    // Few noisy rows and a wide net without dropout: validation RMSE turns up
    // once the net starts fitting the noise.
    const PreparedDataset ds = small_sinusoid(100, 0.5);
    TrainConfig cfg = quick(60, 1);
    cfg.schedule = Schedule::constant;
    cfg.max_lr = 1e-2;
    cfg.batch_size = 16;
    const MethodKind ls = kind(Method::ls);
    const FitOutput f = train_method(ls, ds, mlp_spec_for(ls, ds, ModelConfig{{64, 64}, 0.0}), cfg);
    const auto& val = f.trace.epoch_val_rmse;
    const auto best = std::min_element(val.begin(), val.end());
    EXPECT_EQ(f.result.best_epoch, best - val.begin());
    EXPECT_EQ(f.result.best_val_rmse, *best);
    EXPECT_EQ(evaluate_rmse(f.predictor, ds, Split::val), *best);
    EXPECT_EQ(evaluate_rmse(f.predictor, ds, Split::test), f.result.test_rmse);
    ASSERT_LT(f.result.best_epoch, 59) << "run did not worsen late";
    EXPECT_LT(*best, val.back());
    EXPECT_NE(evaluate_rmse(f.final_predictor, ds, Split::test), f.result.test_rmse);
}

TEST(Train, SoftBinSharpTargetsMatchHardAssignment) {
    const PreparedDataset ds = small_sinusoid(1000);
    MethodKind sb = kind(Method::soft_bin, 11);
    sb.lambda_sigma = 1e-3;
    Rng rng(0);
    const TargetCodec codec = initial_codec(sb, ds, rng);
    const double delta = codec.mu(1, 0) - codec.mu(0, 0);
    const Tensor soft = encode_soft(codec, ds.y_train);
    const Tensor hard = encode_hard(HardBinner{codec.mu}, ds.y_train);
    int compared = 0;
    for (Index i = 0; i < ds.y_train.rows(); ++i) {
        // Boundaries sit halfway between grid points.
        const double frac = std::fmod(ds.y_train(i, 0) / delta + 0.5, 1.0);
        if (std::min(frac, 1 - frac) < 0.1) continue;
        Index a, b;
        soft.row(i).maxCoeff(&a);
        hard.row(i).maxCoeff(&b);
        EXPECT_EQ(a, b) << "y = " << ds.y_train(i, 0);
        ++compared;
    }
    EXPECT_GT(compared, 500);
}

TEST(Train, PretrainEncRecordsStageOne) {
    const PreparedDataset ds = small_sinusoid();
    MethodKind pe = kind(Method::pretrain_enc);
    pe.pretrain_epochs = 2;
    const FitOutput f = fit(pe, ds, quick(2));
    EXPECT_FALSE(f.trace.pretrain_step_loss.empty());
}

TEST(Train, NonFiniteLossAbortsWithContext) {
    const PreparedDataset ds = small_sinusoid();
    TrainConfig cfg = quick(3);
    cfg.max_lr = 1e300;
    cfg.grad_clip = 1e300;
    cfg.schedule = Schedule::constant;
    try {
        fit(kind(Method::ls), ds, cfg);
        FAIL() << "expected TrainingError";
    } catch (const TrainingError& e) {
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("step"), std::string::npos) << e.what();
    }
}

TEST(Benchmark, NormalizationMeansAndJobsInvariance) {
    const PreparedDataset ds = small_sinusoid(300);
    const std::vector<PreparedDataset> sets{ds};
    const std::vector<MethodKind> methods{kind(Method::ls), kind(Method::soft_bin)};
    const std::vector<std::uint64_t> seeds{0, 1};
    const BenchmarkTable t1 = run_benchmark(sets, methods, {5}, seeds, tiny_model(), quick(2), 1);
    const BenchmarkTable t3 = run_benchmark(sets, methods, {5}, seeds, tiny_model(), quick(2), 3);
    ASSERT_EQ(t1.summary.size(), 2u);
    EXPECT_EQ(t1.summary[0].method, Method::ls);
    EXPECT_EQ(t1.summary[0].normalized, 1.0);
    const auto& sb = t1.summary[1];
    EXPECT_EQ(sb.mean_test_rmse, (sb.per_seed_test_rmse[0] + sb.per_seed_test_rmse[1]) / 2);
    EXPECT_EQ(without_runtime(to_json(t1)), without_runtime(to_json(t3)));
    for (const auto& c : t1.cells) {
        if (c.method.method == Method::ls) continue;
        EXPECT_DOUBLE_EQ(c.normalized_test_rmse, c.test_rmse / t1.summary[0].mean_test_rmse);
    }
}

TEST(Benchmark, FailedCellsMarkedOthersRun) {
    const PreparedDataset ds = small_sinusoid(300);
    const std::vector<PreparedDataset> sets{ds};
    MethodKind bad = kind(Method::end_to_end, 5);
    bad.weights.lambda_kl = -1;  // rejected inside the cell
    const BenchmarkTable t = run_benchmark(sets, {bad}, {5}, {0}, tiny_model(), quick(1), 2);
    ASSERT_EQ(t.cells.size(), 2u);
    EXPECT_FALSE(t.cells[0].failed);
    EXPECT_TRUE(t.cells[1].failed);
    EXPECT_FALSE(t.cells[1].error.empty());
    EXPECT_EQ(t.summary[1].failures, 1u);
}

TEST(Sweep, SingletonAndSelection) {
    const PreparedDataset ds = small_sinusoid(300);
    const SweepResult one =
        sweep(ds, kind(Method::ls), {{"lr", {2e-3}}}, {0}, tiny_model(), quick(2));
    EXPECT_EQ(one.points.size(), 1u);
    EXPECT_EQ(one.best, 0u);
    EXPECT_EQ(one.best_cfg.max_lr, 2e-3);
    EXPECT_THROW(sweep(ds, kind(Method::ls), {}, {0}, tiny_model(), quick(2)), std::invalid_argument);
    EXPECT_THROW(sweep(ds, kind(Method::ls), {{"nope", {1}}}, {0}, tiny_model(), quick(2)),
                 std::invalid_argument);
}

TEST(Sweep, GridOrderAndTieBreak) {
    const PreparedDataset ds = small_sinusoid(300);
    // epochs = 1 vs 1: identical runs, so ties resolve to the smaller lambda_kl.
    const SweepResult r = sweep(ds, kind(Method::end_to_end, 5), {{"lambda_kl", {0.5, 0.1}}, {"epochs", {1, 1}}},
                                {0}, tiny_model(), quick(1));
    ASSERT_EQ(r.points.size(), 4u);
    EXPECT_EQ(r.points[0].hparams.at("lambda_kl"), 0.5);
    EXPECT_EQ(r.points[3].hparams.at("lambda_kl"), 0.1);
    const auto& best = r.points[r.best];
    for (const auto& p : r.points) EXPECT_LE(best.mean_val_rmse, p.mean_val_rmse);
    if (r.points[1].mean_val_rmse == r.points[2].mean_val_rmse) {
        EXPECT_EQ(r.best_method.weights.lambda_kl, 0.1);
    }
}

TEST(Sweep, AvoidsDivergentLearningRate) {
    // On a quadratic, Adam's step is ~lr regardless of gradient scale, so a
    // huge lr overshoots by ~lr every step: lr = 10 cannot fit [0, 1] targets.
    const PreparedDataset ds = small_sinusoid(300);
    const SweepResult r = sweep(ds, kind(Method::ls), {{"lr", {1e-2, 10.0}}}, {0}, tiny_model(), quick(3));
    EXPECT_EQ(r.best_cfg.max_lr, 1e-2);
}

TEST(Sweep, DefaultLambdaGrid) {
    const auto g = default_lambda_kl_grid();
    ASSERT_EQ(g.size(), 10u);
    // mpmath values of 10^(-1.5 + i/3).
    EXPECT_NEAR(g[0], 0.031622776601683793, 1e-15);
    EXPECT_NEAR(g[1], 0.068129206905796129, 1e-15);
    EXPECT_NEAR(g[2], 0.14677992676220695, 1e-15);
    EXPECT_NEAR(g[3], 0.31622776601683793, 1e-15);
    EXPECT_NEAR(g[6], 3.1622776601683793, 1e-14);
    EXPECT_NEAR(g[9], 31.622776601683793, 1e-13);
    EXPECT_NEAR(g[1], kDefaultLambdaKl, 1e-15);
}

TEST(Predictor, SaveLoadRoundTrip) {
    const PreparedDataset ds = small_sinusoid();
    const FitOutput f = fit(kind(Method::end_to_end), ds, quick(1));
    const auto path = std::filesystem::temp_directory_path() / "simplexreg_model_test.bin";
    save_predictor(path, f.predictor);
    const Predictor back = load_predictor(path);
    EXPECT_EQ(back.method, Method::end_to_end);
    EXPECT_EQ(back.predict(ds.x_test), f.predictor.predict(ds.x_test));
    std::filesystem::remove(path);
}

TEST(Report, JsonSchemaFields) {
    ExperimentResult r;
    r.dataset = "WN";
    r.method = kind(Method::soft_bin, 25);
    r.seed = 3;
    r.best_val_rmse = 0.1;
    r.test_rmse = 0.2;
    const auto j = to_json(r);
    for (const char* key : {"dataset", "method", "k", "seed", "val_rmse", "test_rmse", "normalized", "hparams",
                            "runtime"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_TRUE(j["normalized"].is_null());
    EXPECT_FALSE(without_runtime(j).contains("runtime"));
}

TEST(Train, SinusoidLearnableWithDefaults) {
    Rng rng(0, streams::data);
    const PreparedDataset ds = synth_dataset(SynthKind::sinusoid, 2000, 0.0, rng);
    for (Method m : {Method::ls, Method::end_to_end}) {
        const MethodKind mk = kind(m, 25);
        const FitOutput f = train_method(mk, ds, mlp_spec_for(mk, ds, ModelConfig{}), TrainConfig{});
        EXPECT_LT(f.result.test_rmse, 0.05) << to_string(m);
    }
}
