#pragma once

#include "simplexreg/rng.hpp"
#include "simplexreg/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace simplexreg {

/// Describes one CSV dataset and how to split it.
///
/// Spec files are plain text, one `key = value` per line, `#` starts a
/// comment. Keys:
///   name          short dataset tag (e.g. WN)
///   source        CSV path; relative paths resolve against the spec file's directory
///   targets       comma-separated target column names (m = count)
///   features      comma-separated feature columns; omitted = every other column
///   split         n_train, n_val, n_test
///   batch_size    training batch size
///   shuffle_seed  seed of the row shuffle that precedes splitting
struct DatasetSpec {
    std::string name;
    std::filesystem::path source_path;
    std::vector<std::string> feature_columns;
    std::vector<std::string> target_columns;
    std::array<Index, 3> split_counts{0, 0, 0};
    int batch_size = 256;
    std::uint64_t shuffle_seed = 0;

    void validate() const;
};

DatasetSpec load_dataset_spec(const std::filesystem::path& path);
DatasetSpec parse_dataset_spec(const std::string& text, const std::filesystem::path& base_dir = {});

/// Parsed numeric columns. Features first, then targets, in spec order.
struct Table {
    std::vector<std::string> feature_names;
    std::vector<std::string> target_names;
    Tensor features;  // [rows, n_features]
    Tensor targets;   // [rows, m]
};

/// Reads the CSV named by spec.source_path. Only the columns the spec uses
/// are parsed; a non-numeric, NaN or infinite cell in one of them throws
/// DataError naming the 1-based data row and the column.
Table load_csv(const DatasetSpec& spec);
Table parse_csv(std::istream& in, const DatasetSpec& spec, const std::string& source_name);

/// Per-column affine map onto [0, 1] fitted on one split. Constant columns
/// map to 0.
struct MinMaxScaler {
    RowVector<double> min;
    RowVector<double> max;

    static MinMaxScaler fit(const Eigen::Ref<const Tensor>& values);
    Tensor transform(const Eigen::Ref<const Tensor>& values) const;
    Tensor inverse(const Eigen::Ref<const Tensor>& scaled) const;
};

enum class Split { train, val, test };

struct PreparedDataset {
    std::string name;
    Tensor x_train, y_train;
    Tensor x_val, y_val;
    Tensor x_test, y_test;
    MinMaxScaler x_scaler;
    MinMaxScaler y_scaler;
    int batch_size = 256;
    // Original table row of every example, per split.
    std::vector<Index> rows_train, rows_val, rows_test;

    Index input_dim() const { return x_train.cols(); }
    Index target_dim() const { return y_train.cols(); }
    const Tensor& x(Split s) const;
    const Tensor& y(Split s) const;
};

/// Seeded shuffle, split by spec counts, then min-max scalers fitted on the
/// train split and applied to all three. Throws DataError for too few rows or
/// a constant target column.
PreparedDataset prepare(const DatasetSpec& spec, const Table& table);

/// Row indices of consecutive batches covering [0, n) once; the last batch
/// may be short. Shuffled from rng when `shuffle`.
std::vector<std::vector<Index>> batch_indices(Index n, Index batch_size, Rng& rng, bool shuffle);

/// Gathers rows `idx` of `m`.
Tensor gather_rows(const Eigen::Ref<const Tensor>& m, const std::vector<Index>& idx);

struct Batch {
    Tensor x;
    Tensor y;
};

std::vector<Batch> batches(const PreparedDataset& ds, Split split, Rng& rng, bool shuffle,
                           Index batch_size = 0);

enum class SynthKind { piecewise, sinusoid, two_blob_2d };

SynthKind parse_synth_kind(const std::string& name);
std::string to_string(SynthKind kind);

/// Synthetic regression problems, split 80/10/10 with batch size 64, features
/// and targets min-max scaled on train. With u ~ U[0,1]^d and e ~ N(0,1):
///   sinusoid:    d = 2,  y = sin(2 pi u1) + 0.5 u2          + noise * e
///   piecewise:   d = 2,  y = floor(4 u1) / 4 + 0.25 u2       + noise * e
///   two_blob_2d: label c ~ Bernoulli(1/2), x = (c, 1-c, u1, u2) + 0.1 * N(0, I),
///                y = center_c + noise * N(0, I2) with centers (0.25, 0.25) and
///                (0.75, 0.75); m = 2. Targets are min-max scaled per dimension.
PreparedDataset synth_dataset(SynthKind kind, Index n, double noise, Rng& rng);

/// The unscaled blob centers of two_blob_2d, one per row.
Tensor two_blob_centers();

}  // namespace simplexreg
