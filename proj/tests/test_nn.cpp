#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "selgan/nn/adam.hpp"
#include "selgan/nn/checkpoint.hpp"
#include "selgan/nn/dense.hpp"
#include "support/gradcheck.hpp"

using namespace selgan;
using namespace selgan::nn;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
    Index i = 0;
    for (const auto& r : rows) {
        Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

Matrix random_matrix(Index r, Index c, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Matrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

} // namespace

TEST(DenseForward, IdentityWeightsPassThrough) {
    DenseLayer l{Parameter("w", Matrix::Identity(2, 2)), Parameter("b", Matrix::Zero(1, 2)), Activation::identity};
    Matrix out = dense_forward(l, mat({{3, 4}}));
    EXPECT_EQ(out, mat({{3, 4}}));
}

TEST(DenseForward, ZeroInputGivesBias) {
    Rng rng(3);
    DenseLayer l = make_dense("l", 3, 4, Activation::identity, rng);
    l.bias.value = mat({{0.5, -1, 2, 7}});
    EXPECT_EQ(dense_forward(l, Matrix::Zero(1, 3)), l.bias.value);
}

TEST(DenseForward, HandMultiply) {
    DenseLayer l{Parameter("w", mat({{1, 2}, {3, 4}})), Parameter("b", mat({{1, 1}})), Activation::identity};
    EXPECT_EQ(dense_forward(l, mat({{1, 1}})), mat({{5, 7}}));
}

TEST(DenseForward, DimensionMismatchThrows) {
    Rng rng(1);
    DenseLayer l = make_dense("l", 3, 2, Activation::relu, rng);
    EXPECT_THROW(dense_forward(l, Matrix::Zero(2, 4)), ShapeError);
    Tape tape;
    EXPECT_THROW(dense_forward(tape, l, tape.constant(Matrix::Zero(2, 4))), ShapeError);
}

TEST(DenseForward, TapeAndPureForwardAgree) {
    Rng rng(11);
    Mlp net("n", {5, 7, 3}, Activation::tanh, Activation::sigmoid, rng);
    Matrix x = random_matrix(4, 5, rng);
    Tape tape;
    EXPECT_EQ(net.forward(tape, tape.constant(x)).value(), net.infer(x));
    EXPECT_EQ(net.infer(x), net.infer(x));
}

TEST(DenseInit, GlorotBounds) {
    Rng rng(5);
    DenseLayer l = make_dense("l", 30, 10, Activation::relu, rng);
    const double limit = std::sqrt(6.0 / 40.0);
    EXPECT_LE(l.weight.value.cwiseAbs().maxCoeff(), limit);
    EXPECT_TRUE(l.bias.value.isZero());
}

TEST(Backward, LinearCase) {
    Parameter w("w", mat({{0.7}}));
    Tape tape;
    Var loss = ops::matmul(tape.param(w), tape.constant(mat({{2.0}})));
    tape.backward(loss);
    EXPECT_DOUBLE_EQ(w.grad(0, 0), 2.0);
}

TEST(Backward, DisconnectedParameterGetsZero) {
    Parameter w("w", mat({{0.7}}));
    Parameter unused("u", mat({{1.0, 2.0}}));
    Tape tape;
    tape.param(unused);
    Var loss = ops::sum(tape.constant(mat({{3.0}})));
    Var wv = tape.param(w);
    Var total = ops::add(loss, ops::scale(wv, 0.0));
    tape.backward(total);
    EXPECT_DOUBLE_EQ(w.grad(0, 0), 0.0);
    EXPECT_TRUE(unused.grad.isZero());
}

TEST(Backward, RejectsNonScalarLoss) {
    Tape tape;
    Parameter w("w", Matrix::Ones(2, 2));
    EXPECT_THROW(tape.backward(tape.param(w)), ShapeError);
}

TEST(Backward, GradientsAccumulateAcrossCalls) {
    Parameter w("w", mat({{1.5}}));
    for (int i = 0; i < 2; ++i) {
        Tape tape;
        tape.backward(ops::square(tape.param(w)));
    }
    EXPECT_DOUBLE_EQ(w.grad(0, 0), 6.0);
}

class MlpGradCheck : public ::testing::TestWithParam<Activation> {};

TEST_P(MlpGradCheck, MatchesFiniteDifferences) {
    Rng rng(42);
    Mlp net("n", {6, 9, 4}, GetParam(), Activation::identity, rng);
    for (auto* p : net.parameters()) p->value = random_matrix(p->value.rows(), p->value.cols(), rng, 0.5);
    const Matrix x = random_matrix(5, 6, rng);
    auto build = [&](Tape& t) { return ops::mean(ops::square(net.forward(t, t.constant(x)))); };
    auto res = test_support::grad_check(build, net.parameters(), 120, 7);
    EXPECT_EQ(res.failures, 0) << "worst relative error " << res.worst_relative_error;
    EXPECT_GE(res.probes, 100);
}

INSTANTIATE_TEST_SUITE_P(Activations, MlpGradCheck,
                         ::testing::Values(Activation::identity, Activation::relu, Activation::leaky_relu,
                                           Activation::tanh, Activation::sigmoid));

TEST(GradCheck, InputGradientPenaltyIsDifferentiable) {
    for (Activation act : {Activation::leaky_relu, Activation::tanh, Activation::sigmoid}) {
        Rng rng(9);
        Mlp critic("c", {4, 8, 8, 1}, act, Activation::identity, rng);
        const Matrix x = random_matrix(6, 4, rng);
        auto build = [&](Tape& t) {
            Var g = critic.input_gradient(t, t.constant(x));
            Var norm = ops::sqrt(ops::add_scalar(ops::row_sum(ops::square(g)), 1e-12));
            return ops::mean(ops::square(ops::add_scalar(norm, -1.0)));
        };
        auto res = test_support::grad_check(build, critic.parameters(), 120, 3);
        EXPECT_EQ(res.failures, 0) << to_string(act) << " worst " << res.worst_relative_error;
    }
}

TEST(GradCheck, InputGradientMatchesFiniteDifferencesOnInputs) {
    Rng rng(21);
    Mlp critic("c", {3, 5, 1}, Activation::tanh, Activation::identity, rng);
    Parameter x("x", random_matrix(4, 3, rng));
    Tape tape;
    Matrix analytic = critic.input_gradient(tape, tape.constant(x.value)).value();
    auto build = [&](Tape& t) { return ops::sum(critic.forward(t, t.param(x))); };
    x.zero_grad();
    {
        Tape t;
        t.backward(build(t));
    }
    EXPECT_LT((analytic - x.grad).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GradCheck, StructuralOps) {
    Rng rng(17);
    Parameter a("a", random_matrix(3, 8, rng));
    Parameter r("r", random_matrix(1, 8, rng));
    Parameter c("c", random_matrix(3, 1, rng).cwiseAbs().array() + 0.5);
    auto build = [&](Tape& t) {
        Var av = t.param(a);
        Var left = ops::softmax_rows(ops::slice_cols(av, 0, 4));
        Var right = ops::log_softmax_rows(ops::slice_cols(av, 4, 4));
        Var joined = ops::concat_cols({left, right});
        Var m = ops::mul_row(joined, t.param(r));
        Var cs = ops::cumsum_cols(ops::softplus(m));
        Var d = ops::div_col(cs, t.param(c));
        Var e = ops::mul_col(ops::group_sum(d, 2), t.param(c));
        Var f = ops::log1p(ops::softplus(e));
        Var g = ops::matmul_nt(f, ops::tanh(ops::slice_cols(t.param(a), 0, 4)));
        return ops::add(ops::mean(g), ops::sum(ops::sqrt(ops::add_scalar(ops::square(f), 1.0))));
    };
    auto res = test_support::grad_check(build, {&a, &r, &c}, 150, 5);
    EXPECT_EQ(res.failures, 0) << "worst " << res.worst_relative_error;
}

TEST(Adam, ZeroGradientIsFixedPoint) {
    Rng rng(1);
    Mlp net("n", {3, 4, 2}, Activation::relu, Activation::identity, rng);
    auto params = net.parameters();
    AdamState state(params, kEstimatorAdam);
    std::vector<Matrix> before;
    for (auto* p : params) before.push_back(p->value);
    zero_grad(params);
    for (int i = 0; i < 3; ++i) adam_step(params, state);
    for (std::size_t i = 0; i < params.size(); ++i) {
        EXPECT_EQ(params[i]->value, before[i]);
        EXPECT_TRUE(state.first_moment[i].isZero());
        EXPECT_TRUE(state.second_moment[i].isZero());
    }
    EXPECT_EQ(state.step_count, 3);
}

TEST(Adam, FirstStepMovesByLearningRateTimesSign) {
    Parameter w("w", mat({{1.0, -2.0}}));
    w.grad = mat({{0.5, -3.0}});
    std::vector<Parameter*> params{&w};
    AdamState state(params, AdamConfig{0.1, 0.9, 0.999, 1e-8});
    adam_step(params, state);
    // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
    EXPECT_NEAR(w.value(0, 0), 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
    EXPECT_NEAR(w.value(0, 1), -2.0 + 0.1 * 3.0 / (3.0 + 1e-8), 1e-15);
}

TEST(Adam, TwoStepsReduceQuadratic) {
    Parameter w("w", mat({{0.0}}));
    std::vector<Parameter*> params{&w};
    AdamState state(params, AdamConfig{0.5, 0.9, 0.999, 1e-8});
    auto loss = [&] { return (w.value(0, 0) - 3.0) * (w.value(0, 0) - 3.0); };
    double prev = loss();
    for (int i = 0; i < 2; ++i) {
        w.zero_grad();
        Tape t;
        t.backward(ops::square(ops::add_scalar(t.param(w), -3.0)));
        adam_step(params, state);
        EXPECT_LT(loss(), prev);
        prev = loss();
    }
}

TEST(Adam, NonFiniteGradientRejected) {
    Parameter w("w", mat({{1.0, 2.0}}));
    Parameter v("v", mat({{4.0}}));
    w.grad = mat({{0.1, std::numeric_limits<double>::quiet_NaN()}});
    v.grad = mat({{1.0}});
    std::vector<Parameter*> params{&v, &w};
    AdamState state(params, kGanAdam);
    EXPECT_THROW(adam_step(params, state), NumericError);
    EXPECT_EQ(v.value, mat({{4.0}}));
    EXPECT_EQ(state.step_count, 0);
}

TEST(Checkpoint, MlpRoundTripIsExact) {
    Rng rng(8);
    Mlp net("gen", {4, 6, 3}, Activation::relu, Activation::tanh, rng);
    json blob = json::parse(save_mlp(net).dump());
    Mlp back = load_mlp(blob, "gen");
    const Matrix x = random_matrix(5, 4, rng);
    EXPECT_EQ(back.infer(x), net.infer(x));
    ASSERT_EQ(back.layers().size(), 2u);
    EXPECT_EQ(back.layers()[1].activation, Activation::tanh);
}

TEST(Checkpoint, ShapeMismatchRejected) {
    Rng rng(8);
    Mlp a("n", {4, 6, 3}, Activation::relu, Activation::tanh, rng);
    Mlp b("n", {4, 5, 3}, Activation::relu, Activation::tanh, rng);
    EXPECT_THROW(load_parameters(save_parameters(a.parameters()), b.parameters()), FormatError);
}
