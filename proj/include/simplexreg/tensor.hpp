#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace simplexreg {

// Row-major so that a row is one example and softmax runs along contiguous
// memory. Everything in this library is rank <= 2: batches are [batch, dim],
// bias vectors are [1, dim] and scalars are [1, 1].
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Tensor = Matrix<double>;
using Index = Eigen::Index;

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string shape_str(Index rows, Index cols) {
    return "[" + std::to_string(rows) + ", " + std::to_string(cols) + "]";
}

template <typename Derived>
std::string shape_str(const Eigen::MatrixBase<Derived>& m) {
    return shape_str(m.rows(), m.cols());
}

template <typename Derived>
std::array<Index, 2> shape(const Eigen::MatrixBase<Derived>& m) {
    return {m.rows(), m.cols()};
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    return m.allFinite();
}

inline Tensor scalar_tensor(double v) {
    Tensor t(1, 1);
    t(0, 0) = v;
    return t;
}

// Numerically stable row-wise softmax (max-shifted).
template <typename Derived>
Matrix<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
    using S = typename Derived::Scalar;
    Matrix<S> out = logits;
    for (Index r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        row.array() -= row.maxCoeff();
        row = row.array().exp().matrix();
        row /= row.sum();
    }
    return out;
}

template <typename Derived>
Matrix<typename Derived::Scalar> log_softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
    using S = typename Derived::Scalar;
    Matrix<S> out = logits;
    for (Index r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        const S mx = row.maxCoeff();
        const S lse = mx + std::log((row.array() - mx).exp().sum());
        row.array() -= lse;
    }
    return out;
}

// Rows nonnegative and summing to one within tol.
template <typename Derived>
bool rows_in_simplex(const Eigen::MatrixBase<Derived>& p, double tol) {
    for (Index r = 0; r < p.rows(); ++r) {
        if ((p.row(r).array() < 0).any()) return false;
        if (std::abs(p.row(r).sum() - 1.0) > tol) return false;
    }
    return true;
}

}  // namespace simplexreg
