#pragma once

#include "simplexreg/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace simplexreg {

enum class Schedule { constant, cosine };

struct TrainConfig {
    double max_lr = 1e-3;
    int epochs = 200;
    int batch_size = 0;  // 0: use the dataset's batch size
    double weight_decay_mlp = 1e-4;
    double weight_decay_codec = 1e-4;
    double grad_clip = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    Schedule schedule = Schedule::cosine;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Global L2 norm over every entry of every tensor.
double global_norm(std::span<const Tensor> grads);

/// Rescales all gradients by max_norm / norm when the global norm exceeds
/// max_norm. Returns the norm before clipping.
double clip_grad_norm(std::span<Tensor> grads, double max_norm);

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long t = 0;
};

AdamState make_adam_state(std::span<const Tensor> params);

/// One bias-corrected Adam step with coupled L2 decay (g += wd * theta before
/// the moment updates). `weight_decay` holds one coefficient per parameter
/// tensor. Throws TrainingError naming the parameter index on a non-finite
/// gradient.
void adam_step(AdamState& state, std::span<Tensor> params, std::span<const Tensor> grads,
               std::span<const double> weight_decay, double lr, const TrainConfig& cfg);

/// Learning rate at `step` of `total_steps`: constant, or cosine decay
/// max_lr * (1 + cos(pi * step / total)) / 2 without warmup.
double lr_at(const TrainConfig& cfg, long step, long total_steps);

}  // namespace simplexreg
