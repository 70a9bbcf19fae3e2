#include "simplexreg/losses.hpp"

#include <stdexcept>
#include <string>

namespace simplexreg {

namespace {

void check_simplex(Var p, const char* op) {
    const Tensor& v = p.value();
    for (Index r = 0; r < v.rows(); ++r) {
        if ((v.row(r).array() < 0.0).any()) {
            throw std::invalid_argument(std::string(op) + ": negative probability in row " +
                                        std::to_string(r));
        }
        if (std::abs(v.row(r).sum() - 1.0) > 1e-6) {
            throw std::invalid_argument(std::string(op) + ": row " + std::to_string(r) +
                                        " sums to " + std::to_string(v.row(r).sum()));
        }
    }
}

double inv_batch(Var v) {
    if (v.rows() == 0) throw ShapeError("loss on an empty batch");
    return 1.0 / static_cast<double>(v.rows());
}

}  // namespace

Var squared_error(Var y, Var z) {
    return scale(sum(square(sub(y, z))), inv_batch(y));
}

Var kl_div(Var p, Var log_q) {
    check_simplex(p, "kl_div");
    return scale(sub(sum(xlogx(p)), sum(mul(p, log_q))), inv_batch(p));
}

Var cross_entropy(Var p, Var log_q) {
    check_simplex(p, "cross_entropy");
    return scale(sum(mul(p, log_q)), -inv_batch(p));
}

Var entropy(Var p) {
    check_simplex(p, "entropy");
    return scale(sum(xlogx(p)), -inv_batch(p));
}

void LossWeights::validate() const {
    if (lambda_auto < 0.0 || lambda_kl < 0.0 || lambda_pred < 0.0) {
        throw std::invalid_argument("LossWeights: lambda values must be >= 0");
    }
    if (lambda_auto == 0.0 && lambda_kl == 0.0 && lambda_pred == 0.0) {
        throw std::invalid_argument("LossWeights: at least one lambda must be positive");
    }
}

Var autoencoding_objective(Var y, Var psi, Var mu, double alpha) {
    Var loss = squared_error(y, matmul(psi, mu));
    if (alpha != 0.0) loss = add(loss, scale(entropy(psi), alpha));
    return loss;
}

Var composite_objective(const LossWeights& w, Var y, Var psi, Var log_pi, Var mu, Var pi) {
    w.validate();
    Var total;
    auto accumulate = [&total](Var term, double weight) {
        Var weighted = scale(term, weight);
        total = total.valid() ? add(total, weighted) : weighted;
    };
    if (w.lambda_auto > 0.0) accumulate(autoencoding_objective(y, psi, mu, w.alpha), w.lambda_auto);
    if (w.lambda_kl > 0.0) accumulate(kl_div(psi, log_pi), w.lambda_kl);
    if (w.lambda_pred > 0.0) accumulate(squared_error(y, matmul(pi, mu)), w.lambda_pred);
    return total;
}

}  // namespace simplexreg
