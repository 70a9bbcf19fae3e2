#include "simplexreg/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace simplexreg {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// One CSV record; handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

}  // namespace

void DatasetSpec::validate() const {
    if (target_columns.empty()) throw DataError("dataset spec '" + name + "': no target columns");
    if (batch_size < 1) throw DataError("dataset spec '" + name + "': batch_size must be >= 1");
    for (Index c : split_counts) {
        if (c < 0) throw DataError("dataset spec '" + name + "': negative split count");
    }
    if (split_counts[0] < 1) throw DataError("dataset spec '" + name + "': train split is empty");
}

DatasetSpec parse_dataset_spec(const std::string& text, const std::filesystem::path& base_dir) {
    DatasetSpec spec;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("dataset spec line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "name") {
                spec.name = value;
            } else if (key == "source") {
                std::filesystem::path p(value);
                spec.source_path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
            } else if (key == "targets") {
                spec.target_columns = split_list(value);
            } else if (key == "features") {
                spec.feature_columns = split_list(value);
            } else if (key == "split") {
                const auto parts = split_list(value);
                if (parts.size() != 3) throw DataError("split needs three counts");
                for (std::size_t i = 0; i < 3; ++i) spec.split_counts[i] = std::stol(parts[i]);
            } else if (key == "batch_size") {
                spec.batch_size = std::stoi(value);
            } else if (key == "shuffle_seed") {
                spec.shuffle_seed = std::stoull(value);
            } else {
                throw DataError("unknown key '" + key + "'");
            }
        } catch (const std::logic_error&) {
            throw DataError("dataset spec line " + std::to_string(lineno) + ": bad value for '" +
                            key + "'");
        } catch (const DataError& e) {
            throw DataError("dataset spec line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    spec.validate();
    return spec;
}

DatasetSpec load_dataset_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset spec " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_dataset_spec(ss.str(), path.parent_path());
}

Table parse_csv(std::istream& in, const DatasetSpec& spec, const std::string& source_name) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(source_name + ": empty file (no header)");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const std::vector<std::string> header = split_csv_line(line);
    std::unordered_map<std::string, std::size_t> col_of;
    for (std::size_t i = 0; i < header.size(); ++i) col_of.emplace(header[i], i);

    Table table;
    table.target_names = spec.target_columns;
    if (spec.feature_columns.empty()) {
        for (const std::string& h : header) {
            if (h.empty()) continue;
            if (std::find(spec.target_columns.begin(), spec.target_columns.end(), h) ==
                spec.target_columns.end()) {
                table.feature_names.push_back(h);
            }
        }
    } else {
        table.feature_names = spec.feature_columns;
    }

    std::vector<std::size_t> wanted;
    std::vector<std::string> wanted_names;
    for (const auto* names : {&table.feature_names, &table.target_names}) {
        for (const std::string& n : *names) {
            const auto it = col_of.find(n);
            if (it == col_of.end()) {
                throw DataError(source_name + ": missing column \"" + n + "\"");
            }
            wanted.push_back(it->second);
            wanted_names.push_back(n);
        }
    }

    std::vector<double> values;
    Index rows = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++rows;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError(source_name + ": row " + std::to_string(rows) + " has " +
                            std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(header.size()));
        }
        for (std::size_t j = 0; j < wanted.size(); ++j) {
            double v = 0.0;
            const std::string& cell = fields[wanted[j]];
            if (!parse_double(cell, v)) {
                throw DataError(source_name + ": non-numeric cell \"" + cell + "\" at (row " +
                                std::to_string(rows) + ", column " + wanted_names[j] + ")");
            }
            if (!std::isfinite(v)) {
                throw DataError(source_name + ": NaN or infinite cell at (row " +
                                std::to_string(rows) + ", column " + wanted_names[j] + ")");
            }
            values.push_back(v);
        }
    }

    const auto nf = static_cast<Index>(table.feature_names.size());
    const auto nt = static_cast<Index>(table.target_names.size());
    const Eigen::Map<const Tensor> all(values.data(), rows, nf + nt);
    table.features = all.leftCols(nf);
    table.targets = all.rightCols(nt);
    return table;
}

Table load_csv(const DatasetSpec& spec) {
    std::ifstream in(spec.source_path);
    if (!in) throw DataError("cannot open CSV " + spec.source_path.string());
    return parse_csv(in, spec, spec.source_path.filename().string());
}

MinMaxScaler MinMaxScaler::fit(const Eigen::Ref<const Tensor>& values) {
    if (values.rows() == 0) throw DataError("MinMaxScaler: no rows to fit");
    return {values.colwise().minCoeff(), values.colwise().maxCoeff()};
}

Tensor MinMaxScaler::transform(const Eigen::Ref<const Tensor>& values) const {
    Tensor out(values.rows(), values.cols());
    for (Index c = 0; c < values.cols(); ++c) {
        const double range = max(c) - min(c);
        if (range > 0.0) {
            out.col(c) = (values.col(c).array() - min(c)) / range;
        } else {
            out.col(c).setZero();
        }
    }
    return out;
}

Tensor MinMaxScaler::inverse(const Eigen::Ref<const Tensor>& scaled) const {
    Tensor out(scaled.rows(), scaled.cols());
    for (Index c = 0; c < scaled.cols(); ++c) {
        out.col(c) = scaled.col(c).array() * (max(c) - min(c)) + min(c);
    }
    return out;
}

const Tensor& PreparedDataset::x(Split s) const {
    switch (s) {
        case Split::train: return x_train;
        case Split::val: return x_val;
        case Split::test: return x_test;
    }
    return x_train;
}

const Tensor& PreparedDataset::y(Split s) const {
    switch (s) {
        case Split::train: return y_train;
        case Split::val: return y_val;
        case Split::test: return y_test;
    }
    return y_train;
}

Tensor gather_rows(const Eigen::Ref<const Tensor>& m, const std::vector<Index>& idx) {
    Tensor out(static_cast<Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = m.row(idx[i]);
    return out;
}

PreparedDataset prepare(const DatasetSpec& spec, const Table& table) {
    spec.validate();
    const Index n = table.features.rows();
    const auto [n_train, n_val, n_test] = spec.split_counts;
    if (n_train + n_val + n_test > n) {
        throw DataError("dataset '" + spec.name + "': splits need " +
                        std::to_string(n_train + n_val + n_test) + " rows, table has " +
                        std::to_string(n));
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(spec.shuffle_seed, streams::data);
    rng.shuffle(order);

    PreparedDataset ds;
    ds.name = spec.name;
    ds.batch_size = spec.batch_size;
    ds.rows_train.assign(order.begin(), order.begin() + n_train);
    ds.rows_val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    ds.rows_test.assign(order.begin() + n_train + n_val, order.begin() + n_train + n_val + n_test);

    const Tensor xtr = gather_rows(table.features, ds.rows_train);
    const Tensor ytr = gather_rows(table.targets, ds.rows_train);
    ds.x_scaler = MinMaxScaler::fit(xtr);
    ds.y_scaler = MinMaxScaler::fit(ytr);
    for (Index c = 0; c < ytr.cols(); ++c) {
        if (!(ds.y_scaler.max(c) > ds.y_scaler.min(c))) {
            throw DataError("dataset '" + spec.name + "': target column \"" +
                            table.target_names[static_cast<std::size_t>(c)] +
                            "\" is constant on the train split");
        }
    }
    ds.x_train = ds.x_scaler.transform(xtr);
    ds.y_train = ds.y_scaler.transform(ytr);
    ds.x_val = ds.x_scaler.transform(gather_rows(table.features, ds.rows_val));
    ds.y_val = ds.y_scaler.transform(gather_rows(table.targets, ds.rows_val));
    ds.x_test = ds.x_scaler.transform(gather_rows(table.features, ds.rows_test));
    ds.y_test = ds.y_scaler.transform(gather_rows(table.targets, ds.rows_test));
    return ds;
}

std::vector<std::vector<Index>> batch_indices(Index n, Index batch_size, Rng& rng, bool shuffle) {
    if (batch_size < 1) throw std::invalid_argument("batch_indices: batch_size must be >= 1");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    if (shuffle) rng.shuffle(order);
    std::vector<std::vector<Index>> out;
    for (Index start = 0; start < n; start += batch_size) {
        const Index stop = std::min(n, start + batch_size);
        out.emplace_back(order.begin() + start, order.begin() + stop);
    }
    return out;
}

std::vector<Batch> batches(const PreparedDataset& ds, Split split, Rng& rng, bool shuffle,
                           Index batch_size) {
    const Tensor& x = ds.x(split);
    const Tensor& y = ds.y(split);
    if (x.rows() == 0) throw DataError("batches: split is empty");
    const Index bs = batch_size > 0 ? batch_size : ds.batch_size;
    std::vector<Batch> out;
    for (const auto& idx : batch_indices(x.rows(), bs, rng, shuffle)) {
        out.push_back({gather_rows(x, idx), gather_rows(y, idx)});
    }
    return out;
}

SynthKind parse_synth_kind(const std::string& name) {
    if (name == "piecewise") return SynthKind::piecewise;
    if (name == "sinusoid") return SynthKind::sinusoid;
    if (name == "two-blob-2d" || name == "two_blob_2d") return SynthKind::two_blob_2d;
    throw std::invalid_argument("unknown synthetic dataset '" + name +
                                "' (expected piecewise, sinusoid or two-blob-2d)");
}

std::string to_string(SynthKind kind) {
    switch (kind) {
        case SynthKind::piecewise: return "piecewise";
        case SynthKind::sinusoid: return "sinusoid";
        case SynthKind::two_blob_2d: return "two-blob-2d";
    }
    return "?";
}

Tensor two_blob_centers() {
    Tensor c(2, 2);
    c << 0.25, 0.25, 0.75, 0.75;
    return c;
}

PreparedDataset synth_dataset(SynthKind kind, Index n, double noise, Rng& rng) {
    if (n < 100) throw std::invalid_argument("synth_dataset: n must be >= 100");
    if (noise < 0.0) throw std::invalid_argument("synth_dataset: noise must be >= 0");
    Table table;
    const Index m = kind == SynthKind::two_blob_2d ? 2 : 1;
    const Index d = kind == SynthKind::two_blob_2d ? 4 : 2;
    table.features.resize(n, d);
    table.targets.resize(n, m);
    const Tensor centers = two_blob_centers();
    for (Index i = 0; i < n; ++i) {
        switch (kind) {
            case SynthKind::sinusoid: {
                const double u1 = rng.uniform(), u2 = rng.uniform();
                table.features.row(i) << u1, u2;
                table.targets(i, 0) =
                    std::sin(2.0 * std::numbers::pi * u1) + 0.5 * u2 + noise * rng.normal();
                break;
            }
            case SynthKind::piecewise: {
                const double u1 = rng.uniform(), u2 = rng.uniform();
                table.features.row(i) << u1, u2;
                table.targets(i, 0) = std::floor(4.0 * u1) / 4.0 + 0.25 * u2 + noise * rng.normal();
                break;
            }
            case SynthKind::two_blob_2d: {
                const Index c = rng.uniform() < 0.5 ? 0 : 1;
                const double u1 = rng.uniform(), u2 = rng.uniform();
                table.features.row(i) << static_cast<double>(c) + 0.1 * rng.normal(),
                    static_cast<double>(1 - c) + 0.1 * rng.normal(), u1 + 0.1 * rng.normal(),
                    u2 + 0.1 * rng.normal();
                const double e1 = rng.normal(), e2 = rng.normal();
                table.targets.row(i) << centers(c, 0) + noise * e1, centers(c, 1) + noise * e2;
                break;
            }
        }
    }
    for (Index j = 0; j < d; ++j) table.feature_names.push_back("x" + std::to_string(j + 1));
    for (Index j = 0; j < m; ++j) table.target_names.push_back("y" + std::to_string(j + 1));

    DatasetSpec spec;
    spec.name = to_string(kind);
    spec.target_columns = table.target_names;
    const Index n_val = n / 10;
    spec.split_counts = {n - 2 * n_val, n_val, n_val};
    spec.batch_size = 64;
    spec.shuffle_seed = rng.next_u64();
    return prepare(spec, table);
}

}  // namespace simplexreg
