#pragma once

#include "simplexreg/codec.hpp"
#include "simplexreg/nn.hpp"
#include "simplexreg/pipeline.hpp"
#include "simplexreg/tensor.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace simplexreg {

/// Named float64 arrays plus string metadata, stored as
///
///   magic      8 bytes   "SIMPLXRG"
///   version    u32       1
///   n_meta     u32       then n_meta x { u32 len, key bytes, u32 len, value bytes }
///   n_arrays   u32       then n_arrays x { u32 len, name bytes, u32 rank,
///                                          u64 dims[rank], f64 data[prod(dims)] }
///
/// All integers and floats little-endian, data row-major. Round trips are
/// bit-exact.
struct Container {
    std::map<std::string, std::string> meta;
    std::vector<std::pair<std::string, Tensor>> arrays;

    void put(std::string name, Tensor value) { arrays.emplace_back(std::move(name), std::move(value)); }
    const Tensor& array(const std::string& name) const;
    bool has_array(const std::string& name) const;
    const std::string& meta_at(const std::string& key) const;
};

void write_container(std::ostream& out, const Container& c);
Container read_container(std::istream& in);
void save_container(const std::filesystem::path& path, const Container& c);
Container load_container(const std::filesystem::path& path);

// Prefix-scoped (de)serialization of the model pieces, e.g. "mlp." / "codec.".
void put_mlp(Container& c, const MlpModel& model, const std::string& prefix = "mlp.");
MlpModel get_mlp(const Container& c, const std::string& prefix = "mlp.");
void put_codec(Container& c, const TargetCodec& codec, const std::string& prefix = "codec.");
TargetCodec get_codec(const Container& c, const std::string& prefix = "codec.");

void save_mlp(const std::filesystem::path& path, const MlpModel& model);
MlpModel load_mlp(const std::filesystem::path& path);
void save_codec(const std::filesystem::path& path, const TargetCodec& codec);
TargetCodec load_codec(const std::filesystem::path& path);

/// A trained bundle: meta "kind" = "model", "method", then mlp.* and codec.*.
void save_predictor(const std::filesystem::path& path, const Predictor& p);
Predictor load_predictor(const std::filesystem::path& path);

/// Split tensors, scaler bounds, split row indices, name and batch size.
void save_prepared(const std::filesystem::path& path, const PreparedDataset& ds);
PreparedDataset load_prepared(const std::filesystem::path& path);

}  // namespace simplexreg
