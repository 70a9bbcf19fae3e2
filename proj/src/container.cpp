#include "simplexreg/container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace simplexreg {

namespace {

constexpr char kMagic[8] = {'S', 'I', 'M', 'P', 'L', 'X', 'R', 'G'};
constexpr std::uint32_t kVersion = 1;

template <typename U>
void put_le(std::ostream& out, U v) {
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
    unsigned char buf[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) {
        throw DataError("container: unexpected end of file");
    }
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
    return v;
}

void put_string(std::ostream& out, const std::string& s) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const auto n = get_le<std::uint32_t>(in);
    if (n > (1u << 24)) throw DataError("container: string length out of range");
    std::string s(n, '\0');
    if (n > 0 && !in.read(s.data(), n)) throw DataError("container: unexpected end of file");
    return s;
}

std::string join_dims(const std::vector<Index>& dims) {
    std::string s;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(dims[i]);
    }
    return s;
}

std::vector<Index> parse_dims(const std::string& s) {
    std::vector<Index> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stol(item));
    }
    return out;
}

}  // namespace

const Tensor& Container::array(const std::string& name) const {
    for (const auto& [n, t] : arrays) {
        if (n == name) return t;
    }
    throw DataError("container: no array named '" + name + "'");
}

bool Container::has_array(const std::string& name) const {
    for (const auto& [n, t] : arrays) {
        if (n == name) return true;
    }
    return false;
}

const std::string& Container::meta_at(const std::string& key) const {
    const auto it = meta.find(key);
    if (it == meta.end()) throw DataError("container: missing metadata key '" + key + "'");
    return it->second;
}

void write_container(std::ostream& out, const Container& c) {
    out.write(kMagic, sizeof kMagic);
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.meta.size()));
    for (const auto& [k, v] : c.meta) {
        put_string(out, k);
        put_string(out, v);
    }
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.arrays.size()));
    for (const auto& [name, t] : c.arrays) {
        put_string(out, name);
        put_le<std::uint32_t>(out, 2);
        put_le<std::uint64_t>(out, static_cast<std::uint64_t>(t.rows()));
        put_le<std::uint64_t>(out, static_cast<std::uint64_t>(t.cols()));
        for (Index i = 0; i < t.size(); ++i) put_le(out, std::bit_cast<std::uint64_t>(t.data()[i]));
    }
    if (!out) throw DataError("container: write failed");
}

Container read_container(std::istream& in) {
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw DataError("container: bad magic (not a simplexreg container)");
    }
    const auto version = get_le<std::uint32_t>(in);
    if (version != kVersion) {
        throw DataError("container: unsupported version " + std::to_string(version));
    }
    Container c;
    const auto n_meta = get_le<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < n_meta; ++i) {
        std::string k = get_string(in);
        c.meta[k] = get_string(in);
    }
    const auto n_arrays = get_le<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < n_arrays; ++i) {
        std::string name = get_string(in);
        const auto rank = get_le<std::uint32_t>(in);
        if (rank < 1 || rank > 2) throw DataError("container: array '" + name + "' has rank " + std::to_string(rank));
        std::uint64_t dims[2] = {1, 1};
        for (std::uint32_t r = 0; r < rank; ++r) dims[r] = get_le<std::uint64_t>(in);
        if (rank == 1) std::swap(dims[0], dims[1]);  // vectors load as [1, n]
        if (dims[0] * dims[1] > (std::uint64_t{1} << 34)) throw DataError("container: array too large");
        Tensor t(static_cast<Index>(dims[0]), static_cast<Index>(dims[1]));
        for (Index j = 0; j < t.size(); ++j) t.data()[j] = std::bit_cast<double>(get_le<std::uint64_t>(in));
        c.arrays.emplace_back(std::move(name), std::move(t));
    }
    return c;
}

void save_container(const std::filesystem::path& path, const Container& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_container(out, c);
}

Container load_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return read_container(in);
}

void put_mlp(Container& c, const MlpModel& model, const std::string& prefix) {
    const MlpSpec& s = model.spec;
    c.meta[prefix + "input_dim"] = std::to_string(s.input_dim);
    c.meta[prefix + "hidden_dims"] = join_dims(s.hidden_dims);
    c.meta[prefix + "output_dim"] = std::to_string(s.output_dim);
    std::ostringstream rate;
    rate.precision(17);
    rate << s.dropout_rate;
    c.meta[prefix + "dropout_rate"] = rate.str();
    for (std::size_t l = 0; l < s.layer_count(); ++l) {
        c.put(prefix + "W" + std::to_string(l), model.params[2 * l]);
        c.put(prefix + "b" + std::to_string(l), model.params[2 * l + 1]);
    }
}

MlpModel get_mlp(const Container& c, const std::string& prefix) {
    MlpModel model;
    try {
        model.spec.input_dim = std::stol(c.meta_at(prefix + "input_dim"));
        model.spec.hidden_dims = parse_dims(c.meta_at(prefix + "hidden_dims"));
        model.spec.output_dim = std::stol(c.meta_at(prefix + "output_dim"));
        model.spec.dropout_rate = std::stod(c.meta_at(prefix + "dropout_rate"));
    } catch (const std::logic_error&) {
        throw DataError("container: malformed MLP metadata");
    }
    model.spec.validate();
    Index fan_in = model.spec.input_dim;
    for (std::size_t l = 0; l < model.spec.layer_count(); ++l) {
        const Index fan_out = l < model.spec.hidden_dims.size() ? model.spec.hidden_dims[l]
                                                                : model.spec.output_dim;
        const Tensor& w = c.array(prefix + "W" + std::to_string(l));
        const Tensor& b = c.array(prefix + "b" + std::to_string(l));
        if (w.rows() != fan_in || w.cols() != fan_out || b.rows() != 1 || b.cols() != fan_out) {
            throw DataError("container: layer " + std::to_string(l) + " shape disagrees with spec");
        }
        model.params.push_back(w);
        model.params.push_back(b);
        fan_in = fan_out;
    }
    return model;
}

void put_codec(Container& c, const TargetCodec& codec, const std::string& prefix) {
    c.meta[prefix + "k"] = std::to_string(codec.k());
    c.meta[prefix + "m"] = std::to_string(codec.m());
    c.put(prefix + "w_lin", codec.w_lin);
    c.put(prefix + "w_bias", codec.w_bias);
    c.put(prefix + "mu", codec.mu);
}

TargetCodec get_codec(const Container& c, const std::string& prefix) {
    TargetCodec codec{c.array(prefix + "w_lin"), c.array(prefix + "w_bias"), c.array(prefix + "mu")};
    try {
        codec.validate();
    } catch (const ShapeError& e) {
        throw DataError(std::string("container: ") + e.what());
    }
    return codec;
}

void save_mlp(const std::filesystem::path& path, const MlpModel& model) {
    Container c;
    c.meta["kind"] = "mlp";
    put_mlp(c, model);
    save_container(path, c);
}

MlpModel load_mlp(const std::filesystem::path& path) {
    return get_mlp(load_container(path));
}

void save_codec(const std::filesystem::path& path, const TargetCodec& codec) {
    Container c;
    c.meta["kind"] = "codec";
    put_codec(c, codec);
    save_container(path, c);
}

TargetCodec load_codec(const std::filesystem::path& path) {
    return get_codec(load_container(path));
}

void save_predictor(const std::filesystem::path& path, const Predictor& p) {
    Container c;
    c.meta["kind"] = "model";
    c.meta["method"] = to_string(p.method);
    put_mlp(c, p.mlp);
    if (is_classification(p.method)) put_codec(c, p.codec);
    save_container(path, c);
}

Predictor load_predictor(const std::filesystem::path& path) {
    const Container c = load_container(path);
    if (c.meta_at("kind") != "model") {
        throw DataError(path.string() + ": not a model file (kind = " + c.meta_at("kind") + ")");
    }
    Predictor p;
    try {
        p.method = parse_method(c.meta_at("method"));
    } catch (const std::invalid_argument& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    p.mlp = get_mlp(c);
    if (is_classification(p.method)) p.codec = get_codec(c);
    return p;
}

namespace {

Tensor index_column(const std::vector<Index>& rows) {
    Tensor t(static_cast<Index>(rows.size()), 1);
    for (std::size_t i = 0; i < rows.size(); ++i) t(static_cast<Index>(i), 0) = static_cast<double>(rows[i]);
    return t;
}

std::vector<Index> index_list(const Tensor& t) {
    std::vector<Index> rows(static_cast<std::size_t>(t.size()));
    for (Index i = 0; i < t.size(); ++i) rows[static_cast<std::size_t>(i)] = static_cast<Index>(t(i));
    return rows;
}

}  // namespace

void save_prepared(const std::filesystem::path& path, const PreparedDataset& ds) {
    Container c;
    c.meta["kind"] = "prepared";
    c.meta["name"] = ds.name;
    c.meta["batch_size"] = std::to_string(ds.batch_size);
    c.put("x_train", ds.x_train);
    c.put("y_train", ds.y_train);
    c.put("x_val", ds.x_val);
    c.put("y_val", ds.y_val);
    c.put("x_test", ds.x_test);
    c.put("y_test", ds.y_test);
    c.put("x_min", ds.x_scaler.min);
    c.put("x_max", ds.x_scaler.max);
    c.put("y_min", ds.y_scaler.min);
    c.put("y_max", ds.y_scaler.max);
    c.put("rows_train", index_column(ds.rows_train));
    c.put("rows_val", index_column(ds.rows_val));
    c.put("rows_test", index_column(ds.rows_test));
    save_container(path, c);
}

PreparedDataset load_prepared(const std::filesystem::path& path) {
    const Container c = load_container(path);
    if (c.meta_at("kind") != "prepared") {
        throw DataError(path.string() + ": not a prepared dataset (kind = " + c.meta_at("kind") + ")");
    }
    PreparedDataset ds;
    ds.name = c.meta_at("name");
    ds.batch_size = std::stoi(c.meta_at("batch_size"));
    ds.x_train = c.array("x_train");
    ds.y_train = c.array("y_train");
    ds.x_val = c.array("x_val");
    ds.y_val = c.array("y_val");
    ds.x_test = c.array("x_test");
    ds.y_test = c.array("y_test");
    ds.x_scaler.min = c.array("x_min");
    ds.x_scaler.max = c.array("x_max");
    ds.y_scaler.min = c.array("y_min");
    ds.y_scaler.max = c.array("y_max");
    ds.rows_train = index_list(c.array("rows_train"));
    ds.rows_val = index_list(c.array("rows_val"));
    ds.rows_test = index_list(c.array("rows_test"));
    return ds;
}

}  // namespace simplexreg
