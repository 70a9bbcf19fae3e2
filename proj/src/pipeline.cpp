#include "simplexreg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace simplexreg {

std::string to_string(Method m) {
    switch (m) {
        case Method::ls: return "ls";
        case Method::ls_softmax: return "ls_softmax";
        case Method::hard_bin: return "hard_bin";
        case Method::soft_bin: return "soft_bin";
        case Method::pretrain_enc: return "pretrain_enc";
        case Method::end_to_end: return "end_to_end";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
        return c == '-' ? '_' : static_cast<char>(std::tolower(c));
    });
    for (Method m : all_methods()) {
        if (to_string(m) == s) return m;
    }
    if (s == "e2e") return Method::end_to_end;
    if (s == "pretrain") return Method::pretrain_enc;
    if (s == "hard") return Method::hard_bin;
    if (s == "soft") return Method::soft_bin;
    throw std::invalid_argument("unknown method '" + name +
                                "' (expected ls, ls_softmax, hard_bin, soft_bin, pretrain_enc, "
                                "end_to_end)");
}

bool is_classification(Method m) {
    return m != Method::ls;
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> all{Method::ls,       Method::ls_softmax,
                                         Method::hard_bin, Method::soft_bin,
                                         Method::pretrain_enc, Method::end_to_end};
    return all;
}

std::string MethodKind::label() const {
    std::ostringstream os;
    os << to_string(method);
    if (method == Method::ls) return os.str();
    os << "(k=" << k;
    if (method == Method::soft_bin) os << ",lambda_sigma=" << lambda_sigma;
    if (method == Method::hard_bin && bin_style == BinStyle::quantile) os << ",quantile";
    if (method == Method::end_to_end) {
        if (freeze_codec) os << ",frozen";
        os << ",auto=" << weights.lambda_auto << ",kl=" << weights.lambda_kl
           << ",pred=" << weights.lambda_pred;
    }
    os << ")";
    return os.str();
}

MlpSpec mlp_spec_for(const MethodKind& method, const PreparedDataset& ds, const ModelConfig& model) {
    MlpSpec spec;
    spec.input_dim = ds.input_dim();
    spec.hidden_dims = model.hidden_dims;
    spec.output_dim = method.method == Method::ls ? ds.target_dim() : method.k;
    spec.dropout_rate = model.dropout_rate;
    return spec;
}

Tensor Predictor::class_probs(const Eigen::Ref<const Tensor>& x) const {
    if (!is_classification(method)) {
        throw std::logic_error("class_probs: least squares has no class distribution");
    }
    return softmax_rows(mlp_predict(mlp, x));
}

Tensor Predictor::predict(const Eigen::Ref<const Tensor>& x) const {
    if (!is_classification(method)) return mlp_predict(mlp, x);
    return class_probs(x) * codec.mu;
}

EvalStats evaluate(const Predictor& p, const Eigen::Ref<const Tensor>& x,
                   const Eigen::Ref<const Tensor>& y, Index batch_size) {
    if (x.rows() == 0) throw DataError("evaluate: empty split");
    if (x.rows() != y.rows()) throw ShapeError("evaluate: feature/target row counts differ");
    EvalStats st;
    double sq = 0.0;
    for (Index start = 0; start < x.rows(); start += batch_size) {
        const Index len = std::min(batch_size, x.rows() - start);
        const Tensor z = p.predict(x.middleRows(start, len));
        if (z.cols() != y.cols()) throw ShapeError("evaluate: prediction/target dims differ");
        sq += (y.middleRows(start, len) - z).squaredNorm();
        ++st.batches;
        if (is_classification(p.method) && !within_decoder_hull(p.codec.mu, z, 1e-12)) {
            ++st.hull_violations;
        }
    }
    st.rmse = std::sqrt(sq / static_cast<double>(x.rows()));
    return st;
}

double evaluate_rmse(const Predictor& p, const Eigen::Ref<const Tensor>& x,
                     const Eigen::Ref<const Tensor>& y) {
    return evaluate(p, x, y).rmse;
}

double evaluate_rmse(const Predictor& p, const PreparedDataset& ds, Split split) {
    return evaluate(p, ds.x(split), ds.y(split)).rmse;
}

double evaluate_rmse_unscaled(const Predictor& p, const PreparedDataset& ds, Split split) {
    const Tensor& x = ds.x(split);
    if (x.rows() == 0) throw DataError("evaluate: empty split");
    const Tensor z = ds.y_scaler.inverse(p.predict(x));
    const Tensor y = ds.y_scaler.inverse(ds.y(split));
    return std::sqrt((y - z).squaredNorm() / static_cast<double>(x.rows()));
}

namespace {

CodecInitConfig codec_config(const MethodKind& method, const PreparedDataset& ds) {
    CodecInitConfig cfg;
    cfg.k = method.k;
    cfg.m = ds.target_dim();
    cfg.lambda_sigma = method.lambda_sigma;
    cfg.kmeans_iters = method.kmeans_iters;
    cfg.alpha = method.alpha;
    cfg.range_min.clear();
    cfg.range_max.clear();
    for (Index d = 0; d < ds.target_dim(); ++d) {
        cfg.range_min.push_back(ds.y_train.col(d).minCoeff());
        cfg.range_max.push_back(ds.y_train.col(d).maxCoeff());
    }
    return cfg;
}

TargetCodec decoder_only(const Tensor& mu) {
    return {Tensor::Zero(mu.cols(), mu.rows()), Tensor::Zero(1, mu.rows()), mu};
}

}  // namespace

TargetCodec initial_codec(const MethodKind& method, const PreparedDataset& ds, Rng& rng) {
    const CodecInitConfig cfg = codec_config(method, ds);
    if (ds.target_dim() == 1) return init_uniform_1d(cfg);
    return init_kmeanspp(cfg, ds.y_train, rng);
}

HardBinner make_hard_binner(const MethodKind& method, const PreparedDataset& ds, Rng& rng) {
    if (ds.target_dim() == 1) {
        const double lo = ds.y_train.minCoeff();
        const double hi = ds.y_train.maxCoeff();
        return make_binner_1d(ds.y_train, method.k, method.bin_style, lo, hi);
    }
    HardBinner b{kmeans(ds.y_train, method.k, method.kmeans_iters, rng).centers};
    b.validate();
    return b;
}

namespace {

std::map<std::string, double> describe_hparams(const MethodKind& m, const MlpSpec& spec,
                                               const TrainConfig& cfg, Index batch_size) {
    std::map<std::string, double> h{
        {"lr", cfg.max_lr},
        {"epochs", cfg.epochs},
        {"batch_size", static_cast<double>(batch_size)},
        {"weight_decay", cfg.weight_decay_mlp},
        {"dropout", spec.dropout_rate},
        {"grad_clip", cfg.grad_clip},
    };
    if (m.method != Method::ls) h["k"] = static_cast<double>(m.k);
    if (m.method == Method::soft_bin || m.method == Method::pretrain_enc ||
        m.method == Method::end_to_end) {
        h["lambda_sigma"] = m.lambda_sigma;
    }
    if (m.method == Method::pretrain_enc) h["alpha"] = m.alpha;
    if (m.method == Method::end_to_end) {
        h["lambda_auto"] = m.weights.lambda_auto;
        h["lambda_kl"] = m.weights.lambda_kl;
        h["lambda_pred"] = m.weights.lambda_pred;
        h["alpha"] = m.weights.alpha;
    }
    return h;
}

}  // namespace

FitOutput train_method(const MethodKind& method, const PreparedDataset& ds,
                       const MlpSpec& mlp_spec, const TrainConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    mlp_spec.validate();
    const Method kind = method.method;
    if (mlp_spec.input_dim != ds.input_dim()) {
        throw ShapeError("train_method: MLP input dim " + std::to_string(mlp_spec.input_dim) +
                         " but data has " + std::to_string(ds.input_dim()) + " features");
    }
    const Index want_out = kind == Method::ls ? ds.target_dim() : method.k;
    if (mlp_spec.output_dim != want_out) {
        throw ShapeError("train_method: " + to_string(kind) + " needs MLP output dim " +
                         std::to_string(want_out) + ", got " + std::to_string(mlp_spec.output_dim));
    }
    if (kind != Method::ls && method.k < 2) {
        throw std::invalid_argument("train_method: k must be >= 2");
    }
    if (kind == Method::end_to_end) method.weights.validate();
    if (ds.x_val.rows() == 0) throw DataError("train_method: empty validation split");

    Rng init_rng(cfg.seed, streams::init);
    Rng shuffle_rng(cfg.seed, streams::shuffle);
    Rng dropout_rng(cfg.seed, streams::dropout);

    FitOutput out;
    Predictor& best = out.predictor;
    best.method = kind;
    best.mlp = init_mlp(mlp_spec, init_rng);

    const Index n = ds.x_train.rows();
    const Index bs = cfg.batch_size > 0 ? cfg.batch_size : ds.batch_size;

    // Frozen targets for the KL-only methods, encoded once.
    Tensor frozen_psi;
    switch (kind) {
        case Method::ls:
            break;
        case Method::ls_softmax:
        case Method::end_to_end:
            best.codec = initial_codec(method, ds, init_rng);
            if (kind == Method::ls_softmax) best.codec = decoder_only(best.codec.mu);
            if (kind == Method::end_to_end && method.freeze_codec) {
                frozen_psi = encode_soft(best.codec, ds.y_train);
            }
            break;
        case Method::hard_bin: {
            const HardBinner binner = make_hard_binner(method, ds, init_rng);
            best.codec = decoder_only(binner.centers);
            frozen_psi = encode_hard(binner, ds.y_train);
            break;
        }
        case Method::soft_bin:
            best.codec = initial_codec(method, ds, init_rng);
            frozen_psi = encode_soft(best.codec, ds.y_train);
            break;
        case Method::pretrain_enc: {
            const TargetCodec init = initial_codec(method, ds, init_rng);
            TrainConfig stage1 = cfg;
            stage1.batch_size = static_cast<int>(bs);
            if (method.pretrain_epochs > 0) stage1.epochs = method.pretrain_epochs;
            PretrainResult pre = pretrain_codec(init, ds.y_train, method.alpha, stage1);
            best.codec = std::move(pre.codec);
            out.trace.pretrain_step_loss = std::move(pre.step_losses);
            frozen_psi = encode_soft(best.codec, ds.y_train);
            break;
        }
    }

    // Flat trainable list: MLP tensors first, then the codec tensors this
    // method learns.
    std::vector<Tensor> params = best.mlp.params;
    const std::size_t n_mlp = params.size();
    if (kind == Method::ls_softmax) {
        params.push_back(best.codec.mu);
    } else if (kind == Method::end_to_end && !method.freeze_codec) {
        params.push_back(best.codec.w_lin);
        params.push_back(best.codec.w_bias);
        params.push_back(best.codec.mu);
    }
    std::vector<double> decay(params.size(), cfg.weight_decay_mlp);
    std::fill(decay.begin() + static_cast<std::ptrdiff_t>(n_mlp), decay.end(),
              cfg.weight_decay_codec);

    auto snapshot = [&](Predictor& p) {
        p.method = kind;
        p.mlp.spec = mlp_spec;
        p.mlp.params.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(n_mlp));
        if (kind == Method::ls_softmax) {
            p.codec = decoder_only(params[n_mlp]);
        } else if (kind == Method::end_to_end && !method.freeze_codec) {
            p.codec = {params[n_mlp], params[n_mlp + 1], params[n_mlp + 2]};
        } else {
            p.codec = best.codec;
        }
    };

    AdamState adam = make_adam_state(params);
    const long steps_per_epoch = static_cast<long>((n + bs - 1) / bs);
    const long total_steps = steps_per_epoch * cfg.epochs;
    long step = 0;
    double best_val = std::numeric_limits<double>::infinity();
    const LossWeights& w = method.weights;
    const bool need_logits = kind != Method::end_to_end || w.lambda_kl > 0.0 || w.lambda_pred > 0.0;
    Predictor current;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (const auto& idx : batch_indices(n, bs, shuffle_rng, true)) {
            Tape tape;
            const std::vector<Var> leaves = tape.variables(params);
            const std::span<const Var> mlp_leaves(leaves.data(), n_mlp);
            const Tensor yb = gather_rows(ds.y_train, idx);
            const Var y = tape.constant(yb);
            Var logits;
            if (need_logits) {
                const Var x = tape.constant(gather_rows(ds.x_train, idx));
                logits = mlp_forward(mlp_spec, mlp_leaves, x, Mode::train, dropout_rng);
            }
            Var loss;
            switch (kind) {
                case Method::ls:
                    loss = squared_error(y, logits);
                    break;
                case Method::ls_softmax:
                    loss = squared_error(y, matmul(softmax_rows(logits), leaves[n_mlp]));
                    break;
                case Method::hard_bin:
                case Method::soft_bin:
                case Method::pretrain_enc:
                    loss = kl_div(tape.constant(gather_rows(frozen_psi, idx)),
                                  log_softmax_rows(logits));
                    break;
                case Method::end_to_end: {
                    Var psi, mu;
                    if (method.freeze_codec) {
                        psi = tape.constant(gather_rows(frozen_psi, idx));
                        mu = tape.constant(best.codec.mu);
                    } else {
                        psi = encode_soft(y, leaves[n_mlp], leaves[n_mlp + 1]);
                        mu = leaves[n_mlp + 2];
                    }
                    const Var log_pi = w.lambda_kl > 0.0 ? log_softmax_rows(logits) : Var{};
                    const Var pi = w.lambda_pred > 0.0 ? softmax_rows(logits) : Var{};
                    loss = composite_objective(w, y, psi, log_pi, mu, pi);
                    break;
                }
            }
            const double value = loss.scalar();
            if (!std::isfinite(value)) {
                throw TrainingError("train_method(" + to_string(kind) + "): non-finite loss at epoch " +
                                    std::to_string(epoch) + ", step " + std::to_string(step));
            }
            out.trace.step_loss.push_back(value);
            epoch_loss += value;
            tape.backward(loss);
            std::vector<Tensor> grads = tape.grads(leaves);
            clip_grad_norm(grads, cfg.grad_clip);
            try {
                adam_step(adam, params, grads, decay, lr_at(cfg, step, total_steps), cfg);
            } catch (const TrainingError& e) {
                throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                                    ", step " + std::to_string(step));
            }
            ++step;
        }
        out.trace.epoch_train_loss.push_back(epoch_loss / static_cast<double>(steps_per_epoch));

        snapshot(current);
        const EvalStats val = evaluate(current, ds.x_val, ds.y_val);
        out.trace.hull_violations += val.hull_violations;
        out.trace.epoch_val_rmse.push_back(val.rmse);
        if (!std::isfinite(val.rmse)) {
            throw TrainingError("train_method(" + to_string(kind) +
                                "): non-finite validation RMSE at epoch " + std::to_string(epoch));
        }
        if (val.rmse < best_val) {
            best_val = val.rmse;
            out.result.best_epoch = epoch;
            snapshot(best);
        }
    }
    out.final_predictor = current;

    const EvalStats test = evaluate(best, ds.x_test, ds.y_test);
    out.trace.hull_violations += test.hull_violations;

    ExperimentResult& r = out.result;
    r.dataset = ds.name;
    r.method = method;
    r.seed = cfg.seed;
    r.best_val_rmse = best_val;
    r.test_rmse = test.rmse;
    r.hparams = describe_hparams(method, mlp_spec, cfg, bs);
    r.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

ExperimentResult run_cell(const PreparedDataset& ds, const MethodKind& method,
                          const ModelConfig& model, TrainConfig cfg, std::uint64_t seed) {
    cfg.seed = seed;
    try {
        return train_method(method, ds, mlp_spec_for(method, ds, model), cfg).result;
    } catch (const std::exception& e) {
        ExperimentResult r;
        r.dataset = ds.name;
        r.method = method;
        r.seed = seed;
        r.failed = true;
        r.error = e.what();
        r.best_val_rmse = std::numeric_limits<double>::quiet_NaN();
        r.test_rmse = std::numeric_limits<double>::quiet_NaN();
        r.normalized_test_rmse = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

BenchmarkTable run_benchmark(std::span<const PreparedDataset> datasets,
                             const std::vector<MethodKind>& methods, const std::vector<Index>& ks,
                             const std::vector<std::uint64_t>& seeds, const ModelConfig& model,
                             const TrainConfig& cfg, int jobs) {
    if (seeds.empty()) throw std::invalid_argument("run_benchmark: need at least one seed");
    if (methods.empty()) throw std::invalid_argument("run_benchmark: no methods");

    // Expand (method, k) variants; least squares has no k and runs once.
    std::vector<MethodKind> variants;
    MethodKind ls;
    ls.method = Method::ls;
    variants.push_back(ls);
    for (const MethodKind& m : methods) {
        if (m.method == Method::ls) continue;
        if (ks.empty()) {
            variants.push_back(m);
            continue;
        }
        for (Index k : ks) {
            MethodKind v = m;
            v.k = k;
            variants.push_back(v);
        }
    }

    struct Job {
        std::size_t dataset;
        std::size_t variant;
        std::uint64_t seed;
    };
    std::vector<Job> grid;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        for (std::size_t v = 0; v < variants.size(); ++v) {
            for (std::uint64_t s : seeds) grid.push_back({d, v, s});
        }
    }

    BenchmarkTable table;
    table.cells.resize(grid.size());
    parallel_for(grid.size(), jobs, [&](std::size_t i) {
        const Job& j = grid[i];
        table.cells[i] = run_cell(datasets[j.dataset], variants[j.variant], model, cfg, j.seed);
    });

    std::size_t cell = 0;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        double ls_mean = std::numeric_limits<double>::quiet_NaN();
        std::vector<SummaryRow> rows;
        for (std::size_t v = 0; v < variants.size(); ++v) {
            SummaryRow row;
            row.dataset = datasets[d].name;
            row.label = variants[v].label();
            row.method = variants[v].method;
            row.k = variants[v].method == Method::ls ? 0 : variants[v].k;
            std::vector<double> val;
            for (std::size_t s = 0; s < seeds.size(); ++s, ++cell) {
                const ExperimentResult& r = table.cells[cell];
                ++row.seeds;
                if (r.failed) {
                    ++row.failures;
                    continue;
                }
                row.per_seed_test_rmse.push_back(r.test_rmse);
                val.push_back(r.best_val_rmse);
            }
            row.mean_test_rmse = mean_of(row.per_seed_test_rmse);
            row.std_test_rmse = std_of(row.per_seed_test_rmse);
            row.mean_val_rmse = mean_of(val);
            if (variants[v].method == Method::ls) ls_mean = row.mean_test_rmse;
            rows.push_back(std::move(row));
        }
        for (SummaryRow& row : rows) row.normalized = row.mean_test_rmse / ls_mean;
        table.summary.insert(table.summary.end(), rows.begin(), rows.end());

        for (ExperimentResult& r : table.cells) {
            if (r.dataset == datasets[d].name && !r.failed) {
                r.normalized_test_rmse = r.test_rmse / ls_mean;
            }
        }
    }
    return table;
}

void apply_hparam(const std::string& name, double value, MethodKind& method, TrainConfig& cfg,
                  ModelConfig& model) {
    if (name == "lr") {
        cfg.max_lr = value;
    } else if (name == "epochs") {
        cfg.epochs = static_cast<int>(value);
    } else if (name == "batch_size") {
        cfg.batch_size = static_cast<int>(value);
    } else if (name == "k") {
        method.k = static_cast<Index>(value);
    } else if (name == "lambda_sigma") {
        method.lambda_sigma = value;
    } else if (name == "lambda_auto") {
        method.weights.lambda_auto = value;
    } else if (name == "lambda_kl") {
        method.weights.lambda_kl = value;
    } else if (name == "lambda_pred") {
        method.weights.lambda_pred = value;
    } else if (name == "alpha") {
        method.alpha = value;
        method.weights.alpha = value;
    } else if (name == "weight_decay") {
        cfg.weight_decay_mlp = value;
        cfg.weight_decay_codec = value;
    } else if (name == "dropout") {
        model.dropout_rate = value;
    } else {
        throw std::invalid_argument("unknown hyperparameter '" + name + "'");
    }
}

SweepResult sweep(const PreparedDataset& ds, const MethodKind& method, const HparamGrid& grid,
                  const std::vector<std::uint64_t>& seeds, const ModelConfig& model,
                  const TrainConfig& cfg, int jobs) {
    if (grid.empty()) throw std::invalid_argument("sweep: empty grid");
    if (seeds.empty()) throw std::invalid_argument("sweep: need at least one seed");
    std::size_t n_points = 1;
    for (const auto& [name, values] : grid) {
        if (values.empty()) throw std::invalid_argument("sweep: no values for '" + name + "'");
        n_points *= values.size();
    }

    struct Point {
        MethodKind method;
        TrainConfig cfg;
        ModelConfig model;
        std::map<std::string, double> hparams;
    };
    std::vector<Point> points;
    for (std::size_t p = 0; p < n_points; ++p) {
        Point pt{method, cfg, model, {}};
        std::size_t rem = p;
        for (std::size_t g = grid.size(); g-- > 0;) {
            const auto& [name, values] = grid[g];
            const double v = values[rem % values.size()];
            rem /= values.size();
            apply_hparam(name, v, pt.method, pt.cfg, pt.model);
            pt.hparams[name] = v;
        }
        points.push_back(std::move(pt));
    }

    SweepResult res;
    res.points.resize(points.size());
    std::vector<ExperimentResult> runs(points.size() * seeds.size());
    parallel_for(runs.size(), jobs, [&](std::size_t i) {
        const Point& pt = points[i / seeds.size()];
        runs[i] = run_cell(ds, pt.method, pt.model, pt.cfg, seeds[i % seeds.size()]);
    });

    for (std::size_t p = 0; p < points.size(); ++p) {
        SweepPoint& sp = res.points[p];
        sp.hparams = points[p].hparams;
        std::vector<double> val, test;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const ExperimentResult& r = runs[p * seeds.size() + s];
            sp.runs.push_back(r);
            if (r.failed) {
                sp.failed = true;
            } else {
                val.push_back(r.best_val_rmse);
                test.push_back(r.test_rmse);
            }
        }
        sp.mean_val_rmse = sp.failed ? std::numeric_limits<double>::infinity() : mean_of(val);
        sp.mean_test_rmse = sp.failed ? std::numeric_limits<double>::quiet_NaN() : mean_of(test);
    }

    auto key = [&](std::size_t p) {
        return std::tuple(res.points[p].mean_val_rmse, points[p].method.weights.lambda_kl,
                          points[p].cfg.max_lr);
    };
    res.best = 0;
    for (std::size_t p = 1; p < points.size(); ++p) {
        if (key(p) < key(res.best)) res.best = p;
    }
    if (!std::isfinite(res.points[res.best].mean_val_rmse)) {
        throw TrainingError("sweep: every grid point failed");
    }
    res.best_method = points[res.best].method;
    res.best_cfg = points[res.best].cfg;
    res.best_model = points[res.best].model;
    return res;
}

std::vector<double> logspace(double lo_exp, double hi_exp, int count) {
    if (count < 1) throw std::invalid_argument("logspace: count must be >= 1");
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        out.push_back(std::pow(10.0, lo_exp + t * (hi_exp - lo_exp)));
    }
    return out;
}

std::vector<double> default_lambda_kl_grid() {
    return logspace(-1.5, 1.5, 10);
}

}  // namespace simplexreg
