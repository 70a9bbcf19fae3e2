#pragma once

#include "simplexreg/autodiff.hpp"
#include "simplexreg/optim.hpp"
#include "simplexreg/rng.hpp"
#include "simplexreg/tensor.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace simplexreg {

/// Nearest-center one-hot encoder over k centers in R^m.
struct HardBinner {
    Tensor centers;  // [k, m]

    Index k() const { return centers.rows(); }
    Index m() const { return centers.cols(); }
    void validate() const;
};

enum class BinStyle { equal_width, quantile };

/// One-dimensional binner over [lo, hi]. equal_width puts centers at the
/// midpoints of k equal intervals; quantile uses midpoints of the intervals
/// between empirical k-quantiles of `values`.
HardBinner make_binner_1d(const Eigen::Ref<const Tensor>& values, Index k, BinStyle style,
                          double lo, double hi);

/// Row b becomes e_i with i = argmin ||y_b - c_i||^2, ties to the lowest index.
template <typename Derived>
Matrix<double> encode_hard(const HardBinner& binner, const Eigen::MatrixBase<Derived>& y) {
    if (y.cols() != binner.m()) {
        throw ShapeError("encode_hard: targets " + shape_str(y) + " vs centers " +
                         shape_str(binner.centers));
    }
    Matrix<double> out = Matrix<double>::Zero(y.rows(), binner.k());
    for (Index b = 0; b < y.rows(); ++b) {
        Index best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < binner.k(); ++i) {
            const double d = (binner.centers.row(i) - y.row(b)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        out(b, best) = 1.0;
    }
    return out;
}

/// Affine-logit encoder psi(y) = softmax(y * w_lin + w_bias) together with a
/// linear decoder z = pi * mu. Shapes: w_lin [m, k], w_bias [1, k], mu [k, m].
struct TargetCodec {
    Tensor w_lin;
    Tensor w_bias;
    Tensor mu;

    Index k() const { return mu.rows(); }
    Index m() const { return mu.cols(); }
    void validate() const;
};

struct AffineEncoder {
    Tensor w_lin;   // [m, k], column i = c_i / sigma^2
    Tensor w_bias;  // [1, k], entry i = -||c_i||^2 / (2 sigma^2)
};

/// Rewrites the isotropic Gaussian soft-binning encoder with centers c_i and
/// bandwidth sigma as an affine-logit encoder. The two differ only by the
/// per-row shift ||y||^2 / (2 sigma^2), which softmax ignores.
template <typename Derived>
AffineEncoder gaussian_to_affine(const Eigen::MatrixBase<Derived>& centers, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("gaussian_to_affine: sigma must be positive, got " +
                                    std::to_string(sigma));
    }
    const double inv_var = 1.0 / (sigma * sigma);
    AffineEncoder enc;
    enc.w_lin = centers.transpose() * inv_var;
    enc.w_bias = (-0.5 * inv_var) * centers.rowwise().squaredNorm().transpose();
    return enc;
}

/// Encoder logits y * w_lin + w_bias.
template <typename Derived>
Matrix<double> encoder_logits(const TargetCodec& codec, const Eigen::MatrixBase<Derived>& y) {
    if (y.cols() != codec.w_lin.rows()) {
        throw ShapeError("encode_soft: targets " + shape_str(y) + " vs w_lin " +
                         shape_str(codec.w_lin));
    }
    Matrix<double> logits = y * codec.w_lin;
    logits.rowwise() += codec.w_bias.row(0);
    return logits;
}

template <typename Derived>
Matrix<double> encode_soft(const TargetCodec& codec, const Eigen::MatrixBase<Derived>& y) {
    return softmax_rows(encoder_logits(codec, y));
}

/// Tape version; differentiable wrt all three operands.
Var encode_soft(Var y, Var w_lin, Var w_bias);

/// z_b = mu^T pi_b. Rows of pi must lie in the simplex within 1e-6.
template <typename DerivedMu, typename DerivedPi>
Matrix<double> decode(const Eigen::MatrixBase<DerivedMu>& mu,
                      const Eigen::MatrixBase<DerivedPi>& pi) {
    if (pi.cols() != mu.rows()) {
        throw ShapeError("decode: pi " + shape_str(pi) + " vs mu " + shape_str(mu));
    }
    if (!rows_in_simplex(pi, 1e-6)) {
        throw std::invalid_argument("decode: pi has a row outside the probability simplex");
    }
    return pi * mu;
}

/// True when every coordinate of z lies within the per-column [min, max] of
/// mu's rows (the decoder's convex hull bounding box), up to tol.
template <typename DerivedMu, typename DerivedZ>
bool within_decoder_hull(const Eigen::MatrixBase<DerivedMu>& mu,
                         const Eigen::MatrixBase<DerivedZ>& z, double tol = 1e-12) {
    const auto lo = mu.colwise().minCoeff();
    const auto hi = mu.colwise().maxCoeff();
    for (Index b = 0; b < z.rows(); ++b) {
        for (Index d = 0; d < z.cols(); ++d) {
            if (z(b, d) < lo(d) - tol || z(b, d) > hi(d) + tol) return false;
        }
    }
    return true;
}

struct CodecInitConfig {
    Index k = 25;
    Index m = 1;
    double lambda_sigma = 1.0;
    std::vector<double> range_min{0.0};
    std::vector<double> range_max{1.0};
    int kmeans_iters = 50;
    double alpha = 1e-6;

    void validate() const;
};

/// Decoder rows on a uniform grid over [range_min, range_max] with spacing
/// delta = (max - min) / (k - 1); encoder from gaussian_to_affine(mu,
/// lambda_sigma * delta). Requires m == 1 and k >= 2.
TargetCodec init_uniform_1d(const CodecInitConfig& cfg);

struct KMeansResult {
    Tensor centers;             // [k, m]
    std::vector<Index> labels;  // per point
    double sse = 0.0;           // within-cluster sum of squared distances
    int iterations = 0;
    double mean_intra_distance = 0.0;  // mean Euclidean distance to own center
};

/// k-means++ seeding followed by at most `max_iters` Lloyd iterations, stopping
/// early when assignments stop changing. Empty clusters are reseeded at the
/// point farthest from its current center. Throws DataError when the points
/// have fewer than k distinct rows.
KMeansResult kmeans(const Eigen::Ref<const Tensor>& points, Index k, int max_iters, Rng& rng);

/// Decoder from k-means centers; delta is the mean distance of targets to
/// their own center (half the closest center gap if that is zero); encoder
/// from gaussian_to_affine(mu, lambda_sigma * delta).
TargetCodec init_kmeanspp(const CodecInitConfig& cfg, const Eigen::Ref<const Tensor>& targets,
                          Rng& rng);

/// Spacing scale used by the initializers for a given codec config/data.
double uniform_spacing(const CodecInitConfig& cfg);

double autoencoding_rmse(const TargetCodec& codec, const Eigen::Ref<const Tensor>& y);
/// Mean over rows of H(psi(y_b)).
double mean_encoding_entropy(const TargetCodec& codec, const Eigen::Ref<const Tensor>& y);

struct PretrainResult {
    TargetCodec codec;
    double initial_rmse = 0.0;
    double final_rmse = 0.0;
    std::vector<double> step_losses;
};

/// Minimizes mean ||y - mu^T psi(y)||^2 + alpha * H(psi(y)) over (w_lin,
/// w_bias, mu) with Adam on minibatches of `targets`. The returned codec is the
/// end-of-epoch snapshot with the lowest autoencoding RMSE on `targets`,
/// including the starting point. Throws TrainingError on a non-finite loss.
PretrainResult pretrain_codec(const TargetCodec& codec, const Eigen::Ref<const Tensor>& targets,
                              double alpha, const TrainConfig& cfg);

}  // namespace simplexreg
