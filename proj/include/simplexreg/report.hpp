#pragma once

#include "simplexreg/pipeline.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

namespace simplexreg {

/// {dataset, method, label, k, seed, val_rmse, test_rmse, normalized,
///  best_epoch, hparams, runtime, failed[, error]}
nlohmann::json to_json(const ExperimentResult& r);
nlohmann::json to_json(const SummaryRow& row);
/// {"cells": [...], "summary": [...]}
nlohmann::json to_json(const BenchmarkTable& table);
/// {"best": index, "best_hparams": {...}, "points": [{hparams, val_rmse, test_rmse, failed, runs}]}
nlohmann::json to_json(const SweepResult& result);

/// One row per (dataset, label): mean/std test RMSE, mean val RMSE, one column
/// per seed, failures. Doubles are written with 17 significant digits.
void write_table_csv(std::ostream& out, const BenchmarkTable& table);
/// dataset,label,method,k,normalized for bar plots; least squares reads 1.
void write_normalized_csv(std::ostream& out, const BenchmarkTable& table);
/// epoch,train_loss,val_rmse
void write_curve_csv(std::ostream& out, const TrainTrace& trace);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Drops the runtime field, for comparing reruns.
nlohmann::json without_runtime(nlohmann::json j);

}  // namespace simplexreg
