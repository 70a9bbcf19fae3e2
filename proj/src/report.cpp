#include "simplexreg/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace simplexreg {

namespace {

// NaN has no JSON form; failed cells carry null instead.
nlohmann::json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

nlohmann::json to_json(const ExperimentResult& r) {
    nlohmann::json j;
    j["dataset"] = r.dataset;
    j["method"] = to_string(r.method.method);
    j["label"] = r.method.label();
    j["k"] = r.method.method == Method::ls ? 0 : r.method.k;
    j["seed"] = r.seed;
    j["val_rmse"] = number(r.best_val_rmse);
    j["test_rmse"] = number(r.test_rmse);
    j["normalized"] = number(r.normalized_test_rmse);
    j["best_epoch"] = r.best_epoch;
    j["hparams"] = r.hparams;
    j["runtime"] = r.wall_clock_s;
    j["failed"] = r.failed;
    if (r.failed) j["error"] = r.error;
    return j;
}

nlohmann::json to_json(const SummaryRow& row) {
    nlohmann::json j;
    j["dataset"] = row.dataset;
    j["label"] = row.label;
    j["method"] = to_string(row.method);
    j["k"] = row.k;
    j["seeds"] = row.seeds;
    j["failures"] = row.failures;
    j["mean_val_rmse"] = number(row.mean_val_rmse);
    j["mean_test_rmse"] = number(row.mean_test_rmse);
    j["std_test_rmse"] = number(row.std_test_rmse);
    j["normalized"] = number(row.normalized);
    nlohmann::json per = nlohmann::json::array();
    for (double v : row.per_seed_test_rmse) per.push_back(number(v));
    j["per_seed_test_rmse"] = per;
    return j;
}

nlohmann::json to_json(const BenchmarkTable& table) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : table.cells) cells.push_back(to_json(c));
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& s : table.summary) summary.push_back(to_json(s));
    return {{"cells", cells}, {"summary", summary}};
}

nlohmann::json to_json(const SweepResult& result) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : result.points) {
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& r : p.runs) runs.push_back(to_json(r));
        points.push_back({{"hparams", p.hparams},
                          {"val_rmse", number(p.mean_val_rmse)},
                          {"test_rmse", number(p.mean_test_rmse)},
                          {"failed", p.failed},
                          {"runs", runs}});
    }
    nlohmann::json j;
    j["best"] = result.best;
    j["best_hparams"] = result.points.empty() ? nlohmann::json::object()
                                              : nlohmann::json(result.points[result.best].hparams);
    j["best_label"] = result.best_method.label();
    j["points"] = points;
    return j;
}

void write_table_csv(std::ostream& out, const BenchmarkTable& table) {
    std::size_t max_seeds = 0;
    for (const auto& row : table.summary) max_seeds = std::max(max_seeds, row.per_seed_test_rmse.size());
    out << "dataset,label,method,k,mean_test_rmse,std_test_rmse,mean_val_rmse,normalized,seeds,failures";
    for (std::size_t s = 0; s < max_seeds; ++s) out << ",test_rmse_" << s;
    out << '\n';
    for (const auto& row : table.summary) {
        out << csv_field(row.dataset) << ',' << csv_field(row.label) << ',' << to_string(row.method)
            << ',' << row.k << ',' << csv_number(row.mean_test_rmse) << ','
            << csv_number(row.std_test_rmse) << ',' << csv_number(row.mean_val_rmse) << ','
            << csv_number(row.normalized) << ',' << row.seeds << ',' << row.failures;
        for (std::size_t s = 0; s < max_seeds; ++s) {
            out << ',';
            if (s < row.per_seed_test_rmse.size()) out << csv_number(row.per_seed_test_rmse[s]);
        }
        out << '\n';
    }
}

void write_normalized_csv(std::ostream& out, const BenchmarkTable& table) {
    out << "dataset,label,method,k,normalized\n";
    for (const auto& row : table.summary) {
        out << csv_field(row.dataset) << ',' << csv_field(row.label) << ',' << to_string(row.method)
            << ',' << row.k << ',' << csv_number(row.normalized) << '\n';
    }
}

void write_curve_csv(std::ostream& out, const TrainTrace& trace) {
    out << "epoch,train_loss,val_rmse\n";
    for (std::size_t e = 0; e < trace.epoch_val_rmse.size(); ++e) {
        const double loss = e < trace.epoch_train_loss.size()
                                ? trace.epoch_train_loss[e]
                                : std::numeric_limits<double>::quiet_NaN();
        out << e << ',' << csv_number(loss) << ',' << csv_number(trace.epoch_val_rmse[e]) << '\n';
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

nlohmann::json without_runtime(nlohmann::json j) {
    if (j.is_object()) {
        j.erase("runtime");
        for (auto& [key, value] : j.items()) value = without_runtime(value);
    } else if (j.is_array()) {
        for (auto& value : j) value = without_runtime(value);
    }
    return j;
}

}  // namespace simplexreg
