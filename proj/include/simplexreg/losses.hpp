#pragma once

#include "simplexreg/autodiff.hpp"

namespace simplexreg {

// All losses reduce by the mean over the batch (rows), so the weights below
// do not depend on batch size.

/// mean_b ||y_b - z_b||^2
Var squared_error(Var y, Var z);

/// mean_b sum_i p_i (log p_i - log q_i), with 0 log 0 = 0. Takes log-probabilities
/// for q. Throws std::invalid_argument if a row of p is outside the simplex
/// (negative entry or sum off by more than 1e-6).
Var kl_div(Var p, Var log_q);

/// mean_b -sum_i p_i log q_i
Var cross_entropy(Var p, Var log_q);

/// mean_b -sum_i p_i log p_i
Var entropy(Var p);

struct LossWeights {
    double lambda_auto = 1.0;
    double lambda_kl = 1.0;
    double lambda_pred = 1.0;
    /// Entropy coefficient inside the autoencoding term. Positive values
    /// penalize high-entropy encodings; a negative value gives the opposite sign.
    double alpha = 1e-6;

    void validate() const;
};

/// squared_error(y, psi * mu) + alpha * entropy(psi)
Var autoencoding_objective(Var y, Var psi, Var mu, double alpha);

/// lambda_auto * [squared_error(y, psi mu) + alpha H(psi)]
///   + lambda_kl * kl_div(psi, log_pi) + lambda_pred * squared_error(y, pi mu).
/// Terms with zero weight are not built, so their operands may be left
/// invalid (default-constructed Var).
Var composite_objective(const LossWeights& w, Var y, Var psi, Var log_pi, Var mu, Var pi);

}  // namespace simplexreg
