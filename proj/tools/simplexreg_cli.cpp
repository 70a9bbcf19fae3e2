// simplexreg: prepare | fit | sweep | bench | encode-grid
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 training failure.

#include "simplexreg/container.hpp"
#include "simplexreg/pipeline.hpp"
#include "simplexreg/report.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace simplexreg;

namespace {

enum Exit { ok = 0, usage = 1, data = 2, training = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Where the dataset comes from: exactly one of these is set.
struct DataSource {
    std::string spec;
    std::string prepared;
    std::string synth;
    Index synth_n = 2000;
    double noise = 0.0;
    std::uint64_t synth_seed = 0;

    void add(CLI::App* app) {
        app->add_option("--spec", spec, "dataset spec file (key = value)");
        app->add_option("--prepared", prepared, "prepared dataset written by `prepare`");
        app->add_option("--synth", synth, "synthetic dataset: sinusoid, piecewise, two_blob_2d");
        app->add_option("--synth-n", synth_n, "synthetic row count")->capture_default_str();
        app->add_option("--noise", noise, "synthetic noise scale")->capture_default_str();
        app->add_option("--synth-seed", synth_seed, "synthetic data seed")->capture_default_str();
    }

    void check() const {
        const int n = !spec.empty() + !prepared.empty() + !synth.empty();
        if (n != 1) throw UsageError("give exactly one of --spec, --prepared, --synth");
        if (!synth.empty()) {
            parse_synth_kind(synth);
            if (synth_n < 100) throw UsageError("--synth-n must be >= 100");
            if (noise < 0.0) throw UsageError("--noise must be >= 0");
        }
    }

    PreparedDataset load() const {
        if (!prepared.empty()) return load_prepared(prepared);
        if (!synth.empty()) {
            Rng rng(synth_seed, streams::data);
            return synth_dataset(parse_synth_kind(synth), synth_n, noise, rng);
        }
        const DatasetSpec ds = load_dataset_spec(spec);
        return simplexreg::prepare(ds, load_csv(ds));
    }
};

// Method and training flags shared by fit, sweep and bench.
struct TrainFlags {
    std::string method = "end_to_end";
    Index k = 25;
    double lambda_sigma = 1.0;
    std::string bin_style = "equal_width";
    double lambda_auto = 1.0;
    double lambda_kl = kDefaultLambdaKl;
    double lambda_pred = 1.0;
    double alpha = 1e-6;
    int pretrain_epochs = 0;
    bool freeze_codec = false;
    double lr = 1e-3;
    int epochs = 200;
    int batch_size = 0;
    double weight_decay = 1e-4;
    double grad_clip = 1.0;
    std::string schedule = "cosine";
    std::string hidden = "128,128";
    double dropout = 0.3;

    void add(CLI::App* app, bool with_method) {
        if (with_method) {
            app->add_option("--method", method,
                            "ls, ls_softmax, hard_bin, soft_bin, pretrain_enc, end_to_end")
                ->capture_default_str();
            app->add_option("--k", k, "number of classes")->capture_default_str();
        }
        app->add_option("--lambda-sigma", lambda_sigma, "encoder bandwidth / prototype spacing")
            ->capture_default_str();
        app->add_option("--bin-style", bin_style, "hard_bin centers: equal_width or quantile")
            ->capture_default_str();
        app->add_option("--lambda-auto", lambda_auto, "end_to_end autoencoding weight")
            ->capture_default_str();
        app->add_option("--lambda-kl", lambda_kl, "end_to_end KL weight")->capture_default_str();
        app->add_option("--lambda-pred", lambda_pred, "end_to_end prediction weight")
            ->capture_default_str();
        app->add_option("--alpha", alpha, "entropy coefficient")->capture_default_str();
        app->add_option("--pretrain-epochs", pretrain_epochs,
                        "pretrain_enc stage-1 epochs (0 = --epochs)")
            ->capture_default_str();
        app->add_flag("--freeze-codec", freeze_codec, "end_to_end: keep the initial codec fixed");
        app->add_option("--lr", lr, "max learning rate")->capture_default_str();
        app->add_option("--epochs", epochs, "training epochs")->capture_default_str();
        app->add_option("--batch-size", batch_size, "batch size (0 = dataset default)")
            ->capture_default_str();
        app->add_option("--weight-decay", weight_decay, "coupled L2 weight decay")
            ->capture_default_str();
        app->add_option("--grad-clip", grad_clip, "global gradient-norm clip")->capture_default_str();
        app->add_option("--schedule", schedule, "cosine or constant")->capture_default_str();
        app->add_option("--hidden", hidden, "hidden layer widths, comma-separated")
            ->capture_default_str();
        app->add_option("--dropout", dropout, "dropout rate")->capture_default_str();
    }

    MethodKind method_kind() const {
        MethodKind m;
        m.method = parse_method(method);
        m.k = k;
        m.lambda_sigma = lambda_sigma;
        if (bin_style == "equal_width") {
            m.bin_style = BinStyle::equal_width;
        } else if (bin_style == "quantile") {
            m.bin_style = BinStyle::quantile;
        } else {
            throw UsageError("--bin-style must be equal_width or quantile");
        }
        m.weights = {lambda_auto, lambda_kl, lambda_pred, alpha};
        m.alpha = alpha;
        m.pretrain_epochs = pretrain_epochs;
        m.freeze_codec = freeze_codec;
        if (m.method != Method::ls && m.k < 2) throw UsageError("--k must be >= 2");
        if (!(lambda_sigma > 0.0)) throw UsageError("--lambda-sigma must be positive");
        if (pretrain_epochs < 0) throw UsageError("--pretrain-epochs must be >= 0");
        if (m.method == Method::end_to_end) m.weights.validate();
        return m;
    }

    TrainConfig train_config(std::uint64_t seed) const {
        TrainConfig cfg;
        cfg.max_lr = lr;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.weight_decay_mlp = weight_decay;
        cfg.weight_decay_codec = weight_decay;
        cfg.grad_clip = grad_clip;
        if (schedule == "cosine") {
            cfg.schedule = Schedule::cosine;
        } else if (schedule == "constant") {
            cfg.schedule = Schedule::constant;
        } else {
            throw UsageError("--schedule must be cosine or constant");
        }
        cfg.seed = seed;
        cfg.validate();
        return cfg;
    }

    ModelConfig model() const {
        ModelConfig mc;
        mc.hidden_dims.clear();
        std::stringstream ss(hidden);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            Index width = 0;
            try {
                width = std::stol(tok);
            } catch (const std::exception&) {
                throw UsageError("--hidden: bad width '" + tok + "'");
            }
            if (width < 1) throw UsageError("--hidden: widths must be >= 1");
            mc.hidden_dims.push_back(width);
        }
        if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("--dropout must be in [0, 1)");
        mc.dropout_rate = dropout;
        return mc;
    }
};

fs::path default_out() {
    if (const char* env = std::getenv("SIMPLEXREG_OUT"); env && *env) return env;
    return "out";
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        const auto dash = tok.find('-');
        try {
            if (dash != std::string::npos && dash > 0) {
                const auto lo = std::stoull(tok.substr(0, dash));
                const auto hi = std::stoull(tok.substr(dash + 1));
                if (hi < lo) throw UsageError("--seeds: empty range '" + tok + "'");
                for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
            } else {
                seeds.push_back(std::stoull(tok));
            }
        } catch (const std::logic_error&) {
            throw UsageError("--seeds: bad entry '" + tok + "'");
        }
    }
    if (seeds.empty()) throw UsageError("--seeds: no seeds given");
    return seeds;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (const std::logic_error&) {
            throw UsageError(what + ": bad number '" + tok + "'");
        }
    }
    if (out.empty()) throw UsageError(what + ": no values");
    return out;
}

std::string dump(const nlohmann::json& j) {
    return j.dump(2) + "\n";
}

template <typename F>
std::string render(F&& write) {
    std::ostringstream os;
    write(os);
    return os.str();
}

// ---------------------------------------------------------------------------

int cmd_prepare(const DataSource& src, const fs::path& out) {
    const PreparedDataset ds = src.load();
    save_prepared(out / "prepared.bin", ds);
    nlohmann::json j{{"name", ds.name},
                     {"rows", {ds.x_train.rows(), ds.x_val.rows(), ds.x_test.rows()}},
                     {"input_dim", ds.input_dim()},
                     {"target_dim", ds.target_dim()},
                     {"batch_size", ds.batch_size}};
    write_text(out / "prepared.json", dump(j));
    std::cout << ds.name << ": " << ds.x_train.rows() << "/" << ds.x_val.rows() << "/"
              << ds.x_test.rows() << " rows, " << ds.input_dim() << " features -> "
              << (out / "prepared.bin").string() << "\n";
    return ok;
}

int cmd_fit(const DataSource& src, const TrainFlags& flags, std::uint64_t seed, bool unscaled,
            const fs::path& out) {
    const MethodKind method = flags.method_kind();
    const TrainConfig cfg = flags.train_config(seed);
    const ModelConfig model = flags.model();
    const PreparedDataset ds = src.load();
    const FitOutput fit = train_method(method, ds, mlp_spec_for(method, ds, model), cfg);

    nlohmann::json j = to_json(fit.result);
    if (unscaled) {
        j["test_rmse_unscaled"] = evaluate_rmse_unscaled(fit.predictor, ds, Split::test);
        j["val_rmse_unscaled"] = evaluate_rmse_unscaled(fit.predictor, ds, Split::val);
    }
    j["hull_violations"] = fit.trace.hull_violations;
    write_text(out / "result.json", dump(j));
    write_text(out / "curve.csv", render([&](std::ostream& os) { write_curve_csv(os, fit.trace); }));
    save_predictor(out / "model.bin", fit.predictor);
    std::cout << std::setprecision(6) << ds.name << " " << method.label() << " seed " << seed
              << ": val " << fit.result.best_val_rmse << " test " << fit.result.test_rmse
              << " (best epoch " << fit.result.best_epoch << ")\n";
    return ok;
}

int cmd_sweep(const DataSource& src, const TrainFlags& flags, const std::vector<std::string>& grid_args,
              bool lambda_kl_grid, const std::string& seeds_arg, int jobs, const fs::path& out) {
    const MethodKind method = flags.method_kind();
    const TrainConfig cfg = flags.train_config(0);
    const ModelConfig model = flags.model();
    const auto seeds = parse_seeds(seeds_arg);
    HparamGrid grid;
    for (const std::string& g : grid_args) {
        const auto eq = g.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--grid expects name=v1,v2,...");
        const std::string name = g.substr(0, eq);
        const auto values = parse_doubles(g.substr(eq + 1), "--grid " + name);
        {
            MethodKind m = method;
            TrainConfig c = cfg;
            ModelConfig mc = model;
            try {
                apply_hparam(name, values.front(), m, c, mc);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
        }
        grid.emplace_back(name, values);
    }
    if (lambda_kl_grid) grid.emplace_back("lambda_kl", default_lambda_kl_grid());
    if (grid.empty()) throw UsageError("sweep: give --grid and/or --lambda-kl-grid");

    const PreparedDataset ds = src.load();
    const SweepResult res = sweep(ds, method, grid, seeds, model, cfg, jobs);
    write_text(out / "sweep.json", dump(to_json(res)));
    write_text(out / "sweep.csv", render([&](std::ostream& os) {
                   os << "point";
                   for (const auto& [name, values] : grid) os << ',' << name;
                   os << ",mean_val_rmse,mean_test_rmse,failed\n";
                   os << std::setprecision(17);
                   for (std::size_t p = 0; p < res.points.size(); ++p) {
                       os << p;
                       for (const auto& [name, values] : grid) os << ',' << res.points[p].hparams.at(name);
                       os << ',' << res.points[p].mean_val_rmse << ',' << res.points[p].mean_test_rmse
                          << ',' << res.points[p].failed << '\n';
                   }
               }));
    const SweepPoint& best = res.points[res.best];
    std::cout << "best point " << res.best << ":";
    for (const auto& [name, value] : best.hparams) std::cout << " " << name << "=" << value;
    std::cout << " mean val " << best.mean_val_rmse << "\n";
    for (const auto& p : res.points) {
        if (p.failed) return training;
    }
    return ok;
}

int cmd_bench(const std::vector<std::string>& specs, const std::vector<std::string>& prepared,
              const TrainFlags& flags, const std::string& methods_arg, const std::string& ks_arg,
              const std::string& seeds_arg, int jobs, const fs::path& out) {
    std::vector<MethodKind> methods;
    std::stringstream ss(methods_arg);
    for (std::string tok; std::getline(ss, tok, ',');) {
        if (tok.empty()) continue;
        TrainFlags f = flags;
        f.method = tok;
        methods.push_back(f.method_kind());
    }
    if (methods.empty()) throw UsageError("--methods: no methods");
    std::vector<Index> ks;
    for (double k : parse_doubles(ks_arg, "--ks")) {
        if (k < 2 || k != std::floor(k)) throw UsageError("--ks: each k must be an integer >= 2");
        ks.push_back(static_cast<Index>(k));
    }
    const auto seeds = parse_seeds(seeds_arg);
    const TrainConfig cfg = flags.train_config(0);
    const ModelConfig model = flags.model();
    if (specs.empty() && prepared.empty()) throw UsageError("bench: give --spec and/or --prepared");

    std::vector<PreparedDataset> datasets;
    for (const auto& s : specs) {
        const DatasetSpec spec = load_dataset_spec(s);
        datasets.push_back(simplexreg::prepare(spec, load_csv(spec)));
    }
    for (const auto& p : prepared) datasets.push_back(load_prepared(p));

    const BenchmarkTable table = run_benchmark(datasets, methods, ks, seeds, model, cfg, jobs);
    write_text(out / "results.json", dump(to_json(table)));
    write_text(out / "table.csv", render([&](std::ostream& os) { write_table_csv(os, table); }));
    write_text(out / "normalized.csv",
               render([&](std::ostream& os) { write_normalized_csv(os, table); }));
    std::size_t failures = 0;
    for (const auto& row : table.summary) {
        failures += row.failures;
        std::cout << std::left << std::setw(6) << row.dataset << std::setw(40) << row.label
                  << std::right << std::setprecision(5) << std::setw(10) << row.mean_test_rmse
                  << std::setw(10) << row.normalized << "\n";
    }
    if (failures > 0) {
        std::cerr << failures << " cell(s) failed; see results.json\n";
        return training;
    }
    return ok;
}

int cmd_encode_grid(const std::string& codec_path, Index centers_grid, double sigma, double lo,
                    double hi, Index resolution, const fs::path& out) {
    if (resolution < 2) throw UsageError("--resolution must be >= 2");
    if (!(hi > lo)) throw UsageError("--hi must exceed --lo");
    TargetCodec codec;
    if (!codec_path.empty()) {
        const Container c = load_container(codec_path);
        codec = get_codec(c);
    } else {
        if (centers_grid < 2) throw UsageError("give --codec or --centers-grid n (n >= 2)");
        if (!(sigma > 0.0)) throw UsageError("--sigma must be positive");
        Tensor centers(centers_grid * centers_grid, 2);
        for (Index a = 0; a < centers_grid; ++a) {
            for (Index b = 0; b < centers_grid; ++b) {
                centers(a * centers_grid + b, 0) = lo + (hi - lo) * static_cast<double>(a) / (centers_grid - 1);
                centers(a * centers_grid + b, 1) = lo + (hi - lo) * static_cast<double>(b) / (centers_grid - 1);
            }
        }
        const AffineEncoder enc = gaussian_to_affine(centers, sigma);
        codec = {enc.w_lin, enc.w_bias, centers};
    }
    if (codec.m() != 2) {
        throw UsageError("encode-grid needs a codec with m = 2, got m = " + std::to_string(codec.m()));
    }
    Tensor y(resolution * resolution, 2);
    for (Index a = 0; a < resolution; ++a) {
        for (Index b = 0; b < resolution; ++b) {
            y(a * resolution + b, 0) = lo + (hi - lo) * static_cast<double>(a) / (resolution - 1);
            y(a * resolution + b, 1) = lo + (hi - lo) * static_cast<double>(b) / (resolution - 1);
        }
    }
    const Tensor psi = encode_soft(codec, y);
    write_text(out, render([&](std::ostream& os) {
                   os << "y0,y1";
                   for (Index i = 0; i < codec.k(); ++i) os << ",psi" << i;
                   os << '\n' << std::setprecision(17);
                   for (Index r = 0; r < y.rows(); ++r) {
                       os << y(r, 0) << ',' << y(r, 1);
                       for (Index i = 0; i < codec.k(); ++i) os << ',' << psi(r, i);
                       os << '\n';
                   }
               }));
    std::cout << y.rows() << " lattice points x " << codec.k() << " classes -> " << out.string() << "\n";
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regression as classification over learned target encoders"};
    app.require_subcommand(1);
    std::string out_arg;
    app.add_option("--out", out_arg, "output directory (default: $SIMPLEXREG_OUT or ./out)");

    DataSource prep_src;
    auto* prep = app.add_subcommand("prepare", "load, split and scale a dataset");
    prep_src.add(prep);

    DataSource fit_src;
    TrainFlags fit_flags;
    std::uint64_t fit_seed = 0;
    bool unscaled = false;
    auto* fit = app.add_subcommand("fit", "train one method on one dataset");
    fit_src.add(fit);
    fit_flags.add(fit, true);
    fit->add_option("--seed", fit_seed, "seed for init, shuffling and dropout")->capture_default_str();
    fit->add_flag("--unscaled", unscaled, "also report RMSE in original target units");

    DataSource sw_src;
    TrainFlags sw_flags;
    std::vector<std::string> grid_args;
    bool kl_grid = false;
    std::string sw_seeds = "0-4";
    int sw_jobs = 1;
    auto* sw = app.add_subcommand("sweep", "grid search by mean validation RMSE");
    sw_src.add(sw);
    sw_flags.add(sw, true);
    sw->add_option("--grid", grid_args, "name=v1,v2,... (repeatable)");
    sw->add_flag("--lambda-kl-grid", kl_grid, "add lambda_kl over 10 points of [10^-1.5, 10^1.5]");
    sw->add_option("--seeds", sw_seeds, "seed list, e.g. 0-4 or 1,3,5")->capture_default_str();
    sw->add_option("--jobs", sw_jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

    std::vector<std::string> bench_specs, bench_prepared;
    TrainFlags bench_flags;
    std::string bench_methods = "ls,ls_softmax,hard_bin,soft_bin,pretrain_enc,end_to_end";
    std::string bench_ks = "25";
    std::string bench_seeds = "0-4";
    int bench_jobs = 1;
    auto* bench = app.add_subcommand("bench", "every dataset x method x k x seed");
    bench->add_option("--spec", bench_specs, "dataset spec files");
    bench->add_option("--prepared", bench_prepared, "prepared dataset files");
    bench_flags.add(bench, false);
    bench->add_option("--methods", bench_methods, "comma-separated methods")->capture_default_str();
    bench->add_option("--ks", bench_ks, "comma-separated k values")->capture_default_str();
    bench->add_option("--seeds", bench_seeds, "seed list")->capture_default_str();
    bench->add_option("--jobs", bench_jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

    std::string codec_path, grid_csv = "encode_grid.csv";
    Index centers_grid = 0, resolution = 41;
    double sigma = 0.1, lo = 0.0, hi = 1.0;
    auto* eg = app.add_subcommand("encode-grid", "psi over a 2-D lattice of targets");
    eg->add_option("--codec", codec_path, "codec or model file with an m = 2 codec");
    eg->add_option("--centers-grid", centers_grid, "build an n x n center grid over [lo, hi]^2 instead");
    eg->add_option("--sigma", sigma, "bandwidth for --centers-grid")->capture_default_str();
    eg->add_option("--lo", lo, "lattice lower bound")->capture_default_str();
    eg->add_option("--hi", hi, "lattice upper bound")->capture_default_str();
    eg->add_option("--resolution", resolution, "points per lattice axis")->capture_default_str();
    eg->add_option("--csv", grid_csv, "output file name inside --out")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    const fs::path out = out_arg.empty() ? default_out() : fs::path(out_arg);
    try {
        if (*prep) {
            prep_src.check();
            return cmd_prepare(prep_src, out);
        }
        if (*fit) {
            fit_src.check();
            return cmd_fit(fit_src, fit_flags, fit_seed, unscaled, out);
        }
        if (*sw) {
            sw_src.check();
            return cmd_sweep(sw_src, sw_flags, grid_args, kl_grid, sw_seeds, sw_jobs, out);
        }
        if (*bench) {
            return cmd_bench(bench_specs, bench_prepared, bench_flags, bench_methods, bench_ks,
                             bench_seeds, bench_jobs, out);
        }
        if (*eg) return cmd_encode_grid(codec_path, centers_grid, sigma, lo, hi, resolution, out / grid_csv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return usage;
    } catch (const ShapeError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return usage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data;
    } catch (const TrainingError& e) {
        std::cerr << "training failed: " << e.what() << "\n";
        return training;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return data;
    }
    return usage;
}
