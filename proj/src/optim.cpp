#include "simplexreg/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace simplexreg {

void TrainConfig::validate() const {
    if (!(max_lr > 0.0)) throw std::invalid_argument("TrainConfig: max_lr must be positive");
    if (epochs <= 0) throw std::invalid_argument("TrainConfig: epochs must be positive");
    if (batch_size < 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 0");
    if (!(grad_clip > 0.0)) throw std::invalid_argument("TrainConfig: grad_clip must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("TrainConfig: Adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("TrainConfig: eps must be positive");
    if (weight_decay_mlp < 0.0 || weight_decay_codec < 0.0) {
        throw std::invalid_argument("TrainConfig: weight decay must be >= 0");
    }
}

double global_norm(std::span<const Tensor> grads) {
    double sq = 0.0;
    for (const Tensor& g : grads) sq += g.squaredNorm();
    return std::sqrt(sq);
}

double clip_grad_norm(std::span<Tensor> grads, double max_norm) {
    if (!(max_norm > 0.0)) throw std::invalid_argument("clip_grad_norm: max_norm must be positive");
    const double norm = global_norm(grads);
    if (norm > max_norm) {
        const double s = max_norm / norm;
        for (Tensor& g : grads) g *= s;
    }
    return norm;
}

AdamState make_adam_state(std::span<const Tensor> params) {
    AdamState st;
    for (const Tensor& p : params) {
        st.m.push_back(Tensor::Zero(p.rows(), p.cols()));
        st.v.push_back(Tensor::Zero(p.rows(), p.cols()));
    }
    return st;
}

void adam_step(AdamState& state, std::span<Tensor> params, std::span<const Tensor> grads,
               std::span<const double> weight_decay, double lr, const TrainConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size() ||
        params.size() != weight_decay.size()) {
        throw ShapeError("adam_step: parameter, gradient, state and decay counts differ");
    }
    if (!(lr >= 0.0)) throw std::invalid_argument("adam_step: lr must be >= 0");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols()) {
            throw ShapeError("adam_step: gradient " + std::to_string(i) + " has shape " +
                             shape_str(grads[i]) + ", parameter " + shape_str(params[i]));
        }
        if (!grads[i].allFinite()) {
            throw TrainingError("adam_step: non-finite gradient in parameter " +
                                std::to_string(i));
        }
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto g = (grads[i] + weight_decay[i] * params[i]).array();
        state.m[i] = (cfg.beta1 * state.m[i].array() + (1.0 - cfg.beta1) * g).matrix();
        state.v[i] = (cfg.beta2 * state.v[i].array() + (1.0 - cfg.beta2) * g.square()).matrix();
        const auto m_hat = state.m[i].array() / bc1;
        const auto v_hat = state.v[i].array() / bc2;
        params[i].array() -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

double lr_at(const TrainConfig& cfg, long step, long total_steps) {
    if (step < 0 || step >= total_steps) {
        throw std::out_of_range("lr_at: step " + std::to_string(step) + " outside [0, " +
                                std::to_string(total_steps) + ")");
    }
    switch (cfg.schedule) {
        case Schedule::constant:
            return cfg.max_lr;
        case Schedule::cosine:
            return cfg.max_lr * 0.5 *
                   (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) /
                                   static_cast<double>(total_steps)));
    }
    return cfg.max_lr;
}

}  // namespace simplexreg
