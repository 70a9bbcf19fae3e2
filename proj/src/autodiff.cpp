#include "simplexreg/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace simplexreg {

const Tensor& Var::value() const {
    return tape_->value(id_);
}

double Var::scalar() const {
    const Tensor& v = value();
    if (v.rows() != 1 || v.cols() != 1) {
        throw ShapeError("scalar() on non-scalar tensor of shape " + shape_str(v));
    }
    return v(0, 0);
}

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = true;
    return push(std::move(n));
}

Var Tape::constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

std::vector<Var> Tape::variables(std::span<const Tensor> values) {
    std::vector<Var> out;
    out.reserve(values.size());
    for (const Tensor& v : values) out.push_back(variable(v));
    return out;
}

Var Tape::record(Tensor value, std::vector<std::size_t> operands, Backward backward) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = std::any_of(operands.begin(), operands.end(),
                                  [this](std::size_t id) { return nodes_[id].requires_grad; });
    n.operands = std::move(operands);
    if (n.requires_grad) n.backward = std::move(backward);
    return push(std::move(n));
}

void Tape::backward(Var root) {
    if (root.tape() != this) throw std::invalid_argument("backward: root belongs to another tape");
    const Tensor& rv = nodes_[root.id()].value;
    if (rv.rows() != 1 || rv.cols() != 1) {
        throw ShapeError("backward: root must be a scalar, got shape " + shape_str(rv));
    }
    for (Node& n : nodes_) n.grad.resize(0, 0);
    if (!nodes_[root.id()].requires_grad) return;
    nodes_[root.id()].grad = Tensor::Ones(1, 1);
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.size() == 0 || !n.backward) continue;
        // Operands have lower ids, so n.grad is final and is not touched by
        // the callback.
        n.backward(*this, n.value, n.grad);
    }
}

Tensor Tape::grad(Var v) const {
    const Node& n = nodes_[v.id()];
    if (n.grad.size() == 0) return Tensor::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

std::vector<Tensor> Tape::grads(std::span<const Var> vars) const {
    std::vector<Tensor> out;
    out.reserve(vars.size());
    for (Var v : vars) out.push_back(grad(v));
    return out;
}

namespace {

void same_tape(Var a, Var b, const char* op) {
    if (!a.valid() || a.tape() != b.tape()) {
        throw std::invalid_argument(std::string(op) + ": operands on different tapes");
    }
}

void same_shape(Var a, Var b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " +
                         shape_str(b.value()));
    }
}

bool is_row_broadcast(Var a, Var b) {
    return b.rows() == 1 && a.rows() != 1 && a.cols() == b.cols();
}

}  // namespace

Var matmul(Var a, Var b) {
    same_tape(a, b, "matmul");
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ " + shape_str(a.value()) + " x " +
                         shape_str(b.value()));
    }
    Tensor out = a.value() * b.value();
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record(std::move(out), {ia, ib},
                            [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
                                if (t.requires_grad(ia)) {
                                    t.accumulate(ia, g * t.value(ib).transpose());
                                }
                                if (t.requires_grad(ib)) {
                                    t.accumulate(ib, t.value(ia).transpose() * g);
                                }
                            });
}

Var add(Var a, Var b) {
    same_tape(a, b, "add");
    const std::size_t ia = a.id(), ib = b.id();
    if (is_row_broadcast(a, b)) {
        Tensor out = a.value().rowwise() + b.value().row(0);
        return a.tape()->record(std::move(out), {ia, ib},
                                [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
                                    t.accumulate(ia, g);
                                    if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum());
                                });
    }
    same_shape(a, b, "add");
    Tensor out = a.value() + b.value();
    return a.tape()->record(std::move(out), {ia, ib},
                            [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
                                t.accumulate(ia, g);
                                t.accumulate(ib, g);
                            });
}

Var sub(Var a, Var b) {
    same_tape(a, b, "sub");
    same_shape(a, b, "sub");
    Tensor out = a.value() - b.value();
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record(std::move(out), {ia, ib},
                            [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
                                t.accumulate(ia, g);
                                t.accumulate(ib, -g);
                            });
}

Var mul(Var a, Var b) {
    same_tape(a, b, "mul");
    same_shape(a, b, "mul");
    Tensor out = a.value().cwiseProduct(b.value());
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record(std::move(out), {ia, ib},
                            [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
                                if (t.requires_grad(ia)) {
                                    t.accumulate(ia, g.cwiseProduct(t.value(ib)));
                                }
                                if (t.requires_grad(ib)) {
                                    t.accumulate(ib, g.cwiseProduct(t.value(ia)));
                                }
                            });
}

Var scale(Var a, double s) {
    Tensor out = a.value() * s;
    const std::size_t ia = a.id();
    return a.tape()->record(std::move(out), {ia},
                            [ia, s](Tape& t, const Tensor&, const Tensor& g) {
                                t.accumulate(ia, g * s);
                            });
}

Var square(Var a) {
    Tensor out = a.value().array().square().matrix();
    const std::size_t ia = a.id();
    return a.tape()->record(std::move(out), {ia}, [ia](Tape& t, const Tensor&, const Tensor& g) {
        t.accumulate(ia, 2.0 * g.cwiseProduct(t.value(ia)));
    });
}

Var log(Var a) {
    if ((a.value().array() <= 0.0).any()) {
        throw std::domain_error("log: operand has non-positive entries");
    }
    Tensor out = a.value().array().log().matrix();
    const std::size_t ia = a.id();
    return a.tape()->record(std::move(out), {ia}, [ia](Tape& t, const Tensor&, const Tensor& g) {
        t.accumulate(ia, g.cwiseQuotient(t.value(ia)));
    });
}

Var relu(Var a) {
    Tensor out = a.value().cwiseMax(0.0);
    const std::size_t ia = a.id();
    return a.tape()->record(std::move(out), {ia}, [ia](Tape& t, const Tensor&, const Tensor& g) {
        t.accumulate(ia, (t.value(ia).array() > 0.0).select(g, 0.0));
    });
}

Var softmax_rows(Var a) {
    Tensor out = simplexreg::softmax_rows(a.value());
    const std::size_t ia = a.id();
    return a.tape()->record(std::move(out), {ia}, [ia](Tape& t, const Tensor& s, const Tensor& g) {
        // d/da = s * (g - <g, s>) row by row.
        const Eigen::VectorXd dots = g.cwiseProduct(s).rowwise().sum();
        Tensor da = s.cwiseProduct(g);
        da -= s.cwiseProduct(dots.replicate(1, s.cols()));
        t.accumulate(ia, da);
    });
}

Var log_softmax_rows(Var a) {
    Tensor out = simplexreg::log_softmax_rows(a.value());
    const std::size_t ia = a.id();
    return a.tape()->record(std::move(out), {ia},
                            [ia](Tape& t, const Tensor& ls, const Tensor& g) {
                                // d/da = g - softmax * rowsum(g)
                                const Eigen::VectorXd gs = g.rowwise().sum();
                                Tensor da = g;
                                da -= ls.array().exp().matrix().cwiseProduct(
                                    gs.replicate(1, ls.cols()));
                                t.accumulate(ia, da);
                            });
}

Var dropout(Var a, double rate, Mode mode, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw std::invalid_argument("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
    }
    if (mode == Mode::eval || rate == 0.0) return a;
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor mask(a.rows(), a.cols());
    for (Index i = 0; i < mask.size(); ++i) {
        mask.data()[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    }
    Tensor out = a.value().cwiseProduct(mask);
    const std::size_t ia = a.id();
    return a.tape()->record(std::move(out), {ia},
                            [ia, mask = std::move(mask)](Tape& t, const Tensor&, const Tensor& g) {
                                t.accumulate(ia, g.cwiseProduct(mask));
                            });
}

Var sum(Var a) {
    Tensor out = scalar_tensor(a.value().sum());
    const std::size_t ia = a.id();
    const Index r = a.rows(), c = a.cols();
    return a.tape()->record(std::move(out), {ia},
                            [ia, r, c](Tape& t, const Tensor&, const Tensor& g) {
                                t.accumulate(ia, Tensor::Constant(r, c, g(0, 0)));
                            });
}

Var mean(Var a) {
    const double n = static_cast<double>(a.value().size());
    if (n == 0) throw ShapeError("mean: empty tensor");
    return scale(sum(a), 1.0 / n);
}

Var xlogx(Var p, double floor) {
    const Tensor& v = p.value();
    Tensor logp = v.cwiseMax(floor).array().log().matrix();
    Tensor out = v.cwiseProduct(logp);
    const std::size_t ip = p.id();
    return p.tape()->record(std::move(out), {ip},
                            [ip, logp = std::move(logp)](Tape& t, const Tensor&, const Tensor& g) {
                                t.accumulate(ip, g.cwiseProduct((logp.array() + 1.0).matrix()));
                            });
}

// ---------------------------------------------------------------------------

std::string GradCheckReport::describe() const {
    std::ostringstream os;
    os << "max relative error " << max_rel_error << " over " << coordinates
       << " coordinates (worst: param " << worst_param << " index " << worst_index
       << ", analytic " << worst_analytic << ", numeric " << worst_numeric << ")";
    return os.str();
}

namespace {

double evaluate(const TapeObjective& f, std::span<const Tensor> params) {
    Tape tape;
    const std::vector<Var> leaves = tape.variables(params);
    return f(tape, leaves).scalar();
}

}  // namespace

GradCheckReport grad_check(const TapeObjective& f, std::span<const Tensor> params, double h,
                           double tol) {
    if (!(h > 0.0)) throw std::invalid_argument("grad_check: step h must be positive");

    std::vector<Tensor> analytic;
    double base = 0.0;
    {
        Tape tape;
        const std::vector<Var> leaves = tape.variables(params);
        Var root = f(tape, leaves);
        base = root.scalar();
        tape.backward(root);
        analytic = tape.grads(leaves);
    }
    const double again = evaluate(f, params);
    if (again != base && !(std::isnan(again) && std::isnan(base))) {
        throw std::logic_error(
            "grad_check: objective is not deterministic (repeat evaluation differs); fix the "
            "dropout mask, e.g. by seeding a fresh Rng inside the objective or using eval mode");
    }

    GradCheckReport report;
    std::vector<Tensor> work(params.begin(), params.end());
    for (std::size_t p = 0; p < work.size(); ++p) {
        for (Index i = 0; i < work[p].size(); ++i) {
            double& x = work[p].data()[i];
            const double x0 = x;
            x = x0 + h;
            const double fp = evaluate(f, work);
            x = x0 - h;
            const double fm = evaluate(f, work);
            x = x0;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[p].data()[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            const double rel = std::abs(a - numeric) / denom;
            ++report.coordinates;
            if (rel > report.max_rel_error || std::isnan(rel)) {
                report.max_rel_error = rel;
                report.worst_param = p;
                report.worst_index = i;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    report.passed = report.max_rel_error < tol;
    return report;
}

}  // namespace simplexreg
