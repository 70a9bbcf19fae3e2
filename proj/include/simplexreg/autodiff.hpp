#pragma once

#include "simplexreg/rng.hpp"
#include "simplexreg/tensor.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace simplexreg {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }
    double scalar() const;
    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

enum class Mode { train, eval };

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
/// so every node's operands precede it and a single reverse sweep suffices.
/// A tape is confined to one thread; build a fresh one per batch.
class Tape {
public:
    using Backward =
        std::function<void(Tape&, const Tensor& out_value, const Tensor& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf that receives a gradient (a trainable parameter or an input
    /// differentiated against).
    Var variable(Tensor value);
    /// Leaf with no gradient.
    Var constant(Tensor value);
    std::vector<Var> variables(std::span<const Tensor> values);

    /// Records an op result. `backward` may be empty when no operand needs a
    /// gradient.
    Var record(Tensor value, std::vector<std::size_t> operands, Backward backward);

    /// Reverse sweep from a [1, 1] root. Gradients from a previous call are
    /// discarded.
    void backward(Var root);

    /// Gradient of the last backward root wrt v; zeros if v was unreachable.
    Tensor grad(Var v) const;
    std::vector<Tensor> grads(std::span<const Var> vars) const;

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    /// Adds `g` into the gradient slot of node `id` (no-op for constants).
    template <typename Derived>
    void accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g) {
        Node& n = nodes_[id];
        if (!n.requires_grad) return;
        if (n.grad.size() == 0) {
            n.grad = g;
        } else {
            n.grad += g;
        }
    }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<std::size_t> operands;
        Backward backward;
        bool requires_grad = false;
    };

    Var push(Node node);
    std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Primitives. All operands must live on the same tape. Shape violations throw
// ShapeError with both shapes in the message.

Var matmul(Var a, Var b);
/// Elementwise sum of equal shapes, or a [1, n] row broadcast over b's rows
/// when `b` is [1, n] and `a` is [batch, n].
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var square(Var a);
/// Natural log; operand entries must be > 0.
Var log(Var a);
Var relu(Var a);
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
/// Inverted dropout. Eval mode is the identity; train mode zeroes each entry
/// with probability `rate` and scales survivors by 1/(1-rate). Throws for
/// rate outside [0, 1).
Var dropout(Var a, double rate, Mode mode, Rng& rng);
Var sum(Var a);
Var mean(Var a);
/// p * log(max(p, floor)) elementwise; the derivative uses log(max(p, floor)) + 1.
Var xlogx(Var p, double floor = 1e-12);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

// ---------------------------------------------------------------------------

/// Builds a scalar objective on the given tape from leaves created for the
/// parameters (in order).
using TapeObjective = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_param = 0;
    Index worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t coordinates = 0;
    bool passed = false;

    std::string describe() const;
};

/// Compares reverse-mode gradients against central differences for every
/// coordinate of every parameter. Relative error per coordinate uses the
/// denominator max(|analytic|, |numeric|, 1e-8). Throws std::logic_error when
/// `f` is not deterministic (e.g. train-mode dropout drawing a fresh mask per
/// call) since finite differences are meaningless then.
GradCheckReport grad_check(const TapeObjective& f, std::span<const Tensor> params,
                           double h = 1e-5, double tol = 1e-5);

}  // namespace simplexreg
