#include "simplexreg/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace simplexreg {

void MlpSpec::validate() const {
    if (input_dim <= 0 || output_dim <= 0) {
        throw std::invalid_argument("MlpSpec: input and output dims must be positive");
    }
    for (Index h : hidden_dims) {
        if (h <= 0) throw std::invalid_argument("MlpSpec: hidden dims must be positive");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw std::invalid_argument("MlpSpec: dropout_rate must lie in [0, 1)");
    }
}

std::size_t MlpSpec::parameter_count() const {
    std::size_t n = 0;
    Index fan_in = input_dim;
    for (Index h : hidden_dims) {
        n += static_cast<std::size_t>(fan_in * h + h);
        fan_in = h;
    }
    n += static_cast<std::size_t>(fan_in * output_dim + output_dim);
    return n;
}

MlpModel init_mlp(const MlpSpec& spec, Rng& rng) {
    spec.validate();
    MlpModel model{spec, {}};
    Index fan_in = spec.input_dim;
    auto add_layer = [&](Index fan_out) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Tensor w(fan_in, fan_out);
        for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
        model.params.push_back(std::move(w));
        model.params.push_back(Tensor::Zero(1, fan_out));
        fan_in = fan_out;
    };
    for (Index h : spec.hidden_dims) add_layer(h);
    add_layer(spec.output_dim);
    return model;
}

Var mlp_forward(const MlpSpec& spec, std::span<const Var> params, Var x, Mode mode, Rng& rng) {
    if (params.size() != 2 * spec.layer_count()) {
        throw ShapeError("mlp_forward: expected " + std::to_string(2 * spec.layer_count()) +
                         " parameter tensors, got " + std::to_string(params.size()));
    }
    if (x.cols() != spec.input_dim) {
        throw ShapeError("mlp_forward: input has " + std::to_string(x.cols()) +
                         " columns, model expects " + std::to_string(spec.input_dim));
    }
    Var h = x;
    const std::size_t hidden = spec.hidden_dims.size();
    for (std::size_t l = 0; l < hidden; ++l) {
        h = relu(add(matmul(h, params[2 * l]), params[2 * l + 1]));
        h = dropout(h, spec.dropout_rate, mode, rng);
    }
    return add(matmul(h, params[2 * hidden]), params[2 * hidden + 1]);
}

Tensor mlp_predict(const MlpModel& model, const Eigen::Ref<const Tensor>& x) {
    const MlpSpec& spec = model.spec;
    if (x.cols() != spec.input_dim) {
        throw ShapeError("mlp_predict: input has " + std::to_string(x.cols()) +
                         " columns, model expects " + std::to_string(spec.input_dim));
    }
    Tensor h = x;
    const std::size_t hidden = spec.hidden_dims.size();
    for (std::size_t l = 0; l < hidden; ++l) {
        Tensor z = h * model.params[2 * l];
        z.rowwise() += model.params[2 * l + 1].row(0);
        h = z.cwiseMax(0.0);
    }
    Tensor out = h * model.params[2 * hidden];
    out.rowwise() += model.params[2 * hidden + 1].row(0);
    return out;
}

}  // namespace simplexreg
