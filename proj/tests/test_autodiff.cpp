#include "simplexreg/autodiff.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace simplexreg;
using simplexreg::test_util::random_tensor;
using simplexreg::test_util::row;

TEST(Softmax, UniformOnEqualLogits) {
    const Tensor p = softmax_rows(row({0, 0, 0}));
    for (Index i = 0; i < 3; ++i) EXPECT_NEAR(p(0, i), 1.0 / 3.0, 1e-15);
}

TEST(Softmax, ShiftInvariant) {
    const Tensor a = softmax_rows(row({0, 0.5, 0}));
    const Tensor b = softmax_rows(row({-0.5, 0, -0.5}));
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
    // mpmath: softmax(0, 0.5, 0)
    EXPECT_NEAR(a(0, 1), 0.45186276187760604, 1e-15);
    EXPECT_NEAR(a(0, 0), 0.27406861906119698, 1e-15);
}

TEST(Softmax, LargeLogitsStayFinite) {
    const Tensor p = softmax_rows(row({1000, 0, -1000}));
    EXPECT_TRUE(all_finite(p));
    EXPECT_NEAR(p(0, 0), 1.0, 1e-15);
    const Tensor lp = log_softmax_rows(row({1000, 0, -1000}));
    EXPECT_TRUE(all_finite(lp));
    EXPECT_NEAR(lp(0, 2), -2000.0, 1e-9);
}

TEST(Softmax, RowsInSimplexAndExpOfLogSoftmax) {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Tensor x = random_tensor(4, 7, rng, -20, 20);
        const Tensor p = softmax_rows(x);
        EXPECT_GE(p.minCoeff(), 0.0);
        for (Index r = 0; r < p.rows(); ++r) EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-9);
        const Tensor e = log_softmax_rows(x).array().exp().matrix();
        EXPECT_LE((e - p).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Tape, ReluForward) {
    Tape t;
    const Var r = relu(t.constant(row({-1, 0, 2})));
    EXPECT_EQ(r.value(), row({0, 0, 2}));
}

TEST(Tape, SumOfSquaresGradient) {
    Tape t;
    const Var x = t.variable(row({1, 2}));
    t.backward(sum(square(x)));
    EXPECT_EQ(t.grad(x), row({2, 4}));
}

TEST(Tape, ConstantRootGivesZeroGradients) {
    Tape t;
    const Var x = t.variable(row({1, 2}));
    const Var c = t.constant(scalar_tensor(3.0));
    t.backward(c);
    EXPECT_EQ(t.grad(x), Tensor::Zero(1, 2));
}

TEST(Tape, UnreachableParameterGetsZeros) {
    Tape t;
    const Var x = t.variable(row({1, 2}));
    const Var y = t.variable(row({5, 6, 7}));
    t.backward(sum(x));
    EXPECT_EQ(t.grad(y), Tensor::Zero(1, 3));
}

TEST(Tape, NonScalarRootThrows) {
    Tape t;
    const Var x = t.variable(row({1, 2}));
    EXPECT_THROW(t.backward(x), ShapeError);
}

TEST(Tape, ShapeMismatchNamesShapes) {
    Tape t;
    const Var a = t.variable(Tensor::Zero(2, 3));
    const Var b = t.variable(Tensor::Zero(2, 3));
    try {
        matmul(a, b);
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        EXPECT_NE(std::string(e.what()).find("[2, 3]"), std::string::npos) << e.what();
    }
    EXPECT_THROW(add(a, t.variable(Tensor::Zero(3, 3))), ShapeError);
}

TEST(Tape, GradientAccumulatesOverReuse) {
    Tape t;
    const Var x = t.variable(row({3}));
    t.backward(sum(mul(x, x) + x));
    EXPECT_DOUBLE_EQ(t.grad(x)(0, 0), 7.0);
}

TEST(Tape, LogRejectsNonPositive) {
    Tape t;
    EXPECT_THROW(log(t.variable(row({1, 0}))), std::domain_error);
}

TEST(Dropout, EvalIsIdentityAndRateValidated) {
    Rng rng(3);
    Tape t;
    const Tensor v = random_tensor(5, 5, rng);
    EXPECT_EQ(dropout(t.constant(v), 0.5, Mode::eval, rng).value(), v);
    EXPECT_EQ(dropout(t.constant(v), 0.0, Mode::train, rng).value(), v);
    EXPECT_THROW(dropout(t.constant(v), 1.0, Mode::train, rng), std::invalid_argument);
    EXPECT_THROW(dropout(t.constant(v), -0.1, Mode::train, rng), std::invalid_argument);
}

TEST(Dropout, TrainZeroesOrRescales) {
    Rng rng(4);
    Tape t;
    const Tensor ones = Tensor::Ones(100, 100);
    const Tensor out = dropout(t.constant(ones), 0.3, Mode::train, rng).value();
    Index zeros = 0;
    for (Index i = 0; i < out.size(); ++i) {
        const double v = out.data()[i];
        if (v == 0.0) {
            ++zeros;
        } else {
            EXPECT_NEAR(v, 1.0 / 0.7, 1e-15);
        }
    }
    // 10^4 Bernoulli(0.3): sd ~ 46.
    EXPECT_NEAR(static_cast<double>(zeros), 3000.0, 250.0);
}

// Gradient of every primitive against central differences on random inputs up
// to 16x16.
class PrimitiveGrad : public ::testing::TestWithParam<int> {};

TEST_P(PrimitiveGrad, MatchesFiniteDifferences) {
    const int size = GetParam();
    Rng rng(100 + size);
    const Index r = size, c = size == 1 ? 1 : size - 1;
    const Tensor a = random_tensor(r, c, rng);
    const Tensor b = random_tensor(r, c, rng);
    const Tensor w = random_tensor(c, size, rng);
    const Tensor bias = random_tensor(1, c, rng);
    const Tensor pos = random_tensor(r, c, rng, 0.2, 2.0);
    const Tensor weights = random_tensor(r, c, rng);
    const Tensor weights_k = random_tensor(r, size, rng);

    auto check = [&](const char* name, const TapeObjective& f, std::vector<Tensor> params) {
        const GradCheckReport rep = grad_check(f, params);
        EXPECT_TRUE(rep.passed) << name << ": " << rep.describe();
        EXPECT_LT(rep.max_rel_error, 1e-5) << name;
    };
    // Random weighted sums keep the root scalar without symmetric cancellations.
    auto wsum = [](Tape& t, Var v, const Tensor& wt) { return sum(mul(v, t.constant(wt))); };

    check("matmul", [&](Tape& t, std::span<const Var> p) { return wsum(t, matmul(p[0], p[1]), weights_k); },
          {a, w});
    check("add", [&](Tape& t, std::span<const Var> p) { return wsum(t, add(p[0], p[1]), weights); }, {a, b});
    check("add_broadcast",
          [&](Tape& t, std::span<const Var> p) { return wsum(t, add(p[0], p[1]), weights); }, {a, bias});
    check("sub", [&](Tape& t, std::span<const Var> p) { return wsum(t, sub(p[0], p[1]), weights); }, {a, b});
    check("mul", [&](Tape& t, std::span<const Var> p) { return wsum(t, mul(p[0], p[1]), weights); }, {a, b});
    check("scale", [&](Tape& t, std::span<const Var> p) { return wsum(t, scale(p[0], -2.5), weights); }, {a});
    check("square", [&](Tape& t, std::span<const Var> p) { return wsum(t, square(p[0]), weights); }, {a});
    check("log", [&](Tape& t, std::span<const Var> p) { return wsum(t, log(p[0]), weights); }, {pos});
    check("relu", [&](Tape& t, std::span<const Var> p) { return wsum(t, relu(p[0]), weights); }, {a});
    check("softmax", [&](Tape& t, std::span<const Var> p) { return wsum(t, softmax_rows(p[0]), weights); },
          {a});
    check("log_softmax",
          [&](Tape& t, std::span<const Var> p) { return wsum(t, log_softmax_rows(p[0]), weights); }, {a});
    check("mean", [&](Tape&, std::span<const Var> p) { return mean(square(p[0])); }, {a});
    check("xlogx", [&](Tape& t, std::span<const Var> p) { return wsum(t, xlogx(p[0]), weights); }, {pos});
    check("dropout_eval", [&](Tape& t, std::span<const Var> p) {
        Rng local(1);
        return wsum(t, dropout(p[0], 0.3, Mode::eval, local), weights);
    }, {a});
    check("dropout_fixed_mask", [&](Tape& t, std::span<const Var> p) {
        Rng local(1);  // same mask on every evaluation
        return wsum(t, dropout(p[0], 0.3, Mode::train, local), weights);
    }, {a});
}

INSTANTIATE_TEST_SUITE_P(Sizes, PrimitiveGrad, ::testing::Values(1, 2, 5, 16));

TEST(GradCheck, QuadraticIsTight) {
    const GradCheckReport rep = grad_check(
        [](Tape&, std::span<const Var> p) { return sum(square(p[0])); }, std::vector<Tensor>{row({1.0})});
    EXPECT_LT(rep.max_rel_error, 1e-9);
    EXPECT_EQ(rep.coordinates, 1u);
}

TEST(GradCheck, DetectsWrongGradient) {
    // relu at a kink with h straddling 0: finite differences see slope 1/2.
    const GradCheckReport rep = grad_check(
        [](Tape&, std::span<const Var> p) { return sum(relu(p[0])); }, std::vector<Tensor>{row({0.0})});
    EXPECT_FALSE(rep.passed);
}

TEST(GradCheck, RejectsFreshDropoutMasks) {
    Rng shared(9);
    EXPECT_THROW(grad_check(
                     [&](Tape&, std::span<const Var> p) {
                         return sum(dropout(p[0], 0.5, Mode::train, shared));
                     },
                     std::vector<Tensor>{Tensor::Ones(4, 4)}),
                 std::logic_error);
}

TEST(Rng, ReproducibleStreams) {
    Rng a(42, 1), b(42, 1), c(42, 2);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        differs |= x != c.next_u64();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, KnownFirstWordsAndRanges) {
    // mt19937_64's raw output is fixed by the standard; 10000th word of the
    // default-seeded engine is 9981545732273789042.
    std::mt19937_64 ref;
    ref.discard(9999);
    EXPECT_EQ(ref(), 9981545732273789042ULL);
    Rng rng(5);
    double lo = 1, hi = 0, s = 0;
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        s += u;
        EXPECT_LT(rng.below(7), 7u);
    }
    EXPECT_GE(lo, 0.0);
    EXPECT_LT(hi, 1.0);
    EXPECT_NEAR(s / 20000, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
    Rng rng(8);
    double s = 0, s2 = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
}
