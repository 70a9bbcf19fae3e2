#pragma once

#include "simplexreg/autodiff.hpp"
#include "simplexreg/rng.hpp"
#include "simplexreg/tensor.hpp"

#include <span>
#include <vector>

namespace simplexreg {

/// Fully connected rectifier network: (affine -> relu -> dropout) per hidden
/// layer, then a final affine layer with no nonlinearity.
struct MlpSpec {
    Index input_dim = 1;
    std::vector<Index> hidden_dims{128, 128};
    Index output_dim = 1;
    double dropout_rate = 0.3;

    void validate() const;
    std::size_t parameter_count() const;
    std::size_t layer_count() const { return hidden_dims.size() + 1; }
};

/// Parameters are stored as [W0, b0, W1, b1, ...] with W_l of shape
/// [fan_in, fan_out] (inputs multiply from the left) and b_l of shape [1, fan_out].
struct MlpModel {
    MlpSpec spec;
    std::vector<Tensor> params;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
MlpModel init_mlp(const MlpSpec& spec, Rng& rng);

/// Tape forward pass over leaves created from MlpModel::params (same order).
Var mlp_forward(const MlpSpec& spec, std::span<const Var> params, Var x, Mode mode, Rng& rng);

/// Eval-mode forward pass without a tape.
Tensor mlp_predict(const MlpModel& model, const Eigen::Ref<const Tensor>& x);

}  // namespace simplexreg
