#include <gtest/gtest.h>

#include <cmath>

#include "selgan/estimator/train.hpp"
#include "support/gradcheck.hpp"

using namespace selgan;
using namespace selgan::estimator;
using nn::ops::sum;

namespace {

EstimatorConfig tiny_config(std::uint64_t seed = 1) {
    EstimatorConfig c;
    c.partitions = 3;
    c.latent = 2;
    c.hidden = 8;
    c.embedding = 3;
    c.seed = seed;
    return c;
}

Matrix gaussian_rows(Index n, Index d, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> g;
    Matrix m(n, d);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

std::vector<double> row_of(const Matrix& m, Index r) {
    return std::vector<double>(m.data() + r * m.cols(), m.data() + (r + 1) * m.cols());
}

} // namespace

TEST(Interpolate, HandExample) {
    const std::vector<double> tau{0, 2, 4, 6}, p{0, 10, 10, 40};
    EXPECT_DOUBLE_EQ(interpolate(tau, p, 5.0).value, 25.0);
    EXPECT_FALSE(interpolate(tau, p, 5.0).clamped);
}

TEST(Interpolate, KnotsAndMidpoints) {
    const std::vector<double> tau{0, 1.5, 2, 7}, p{1, 3, 8, 9};
    for (std::size_t i = 0; i < tau.size(); ++i) EXPECT_EQ(interpolate(tau, p, tau[i]).value, p[i]);
    for (std::size_t i = 1; i < tau.size(); ++i) {
        EXPECT_DOUBLE_EQ(interpolate(tau, p, 0.5 * (tau[i - 1] + tau[i])).value, 0.5 * (p[i - 1] + p[i]));
    }
}

TEST(Interpolate, ClampsOutsideRange) {
    const std::vector<double> tau{0, 2, 4, 6}, p{1, 10, 10, 40};
    auto lo = interpolate(tau, p, -1.0);
    auto hi = interpolate(tau, p, 9.0);
    EXPECT_TRUE(lo.clamped);
    EXPECT_EQ(lo.value, 1.0);
    EXPECT_TRUE(hi.clamped);
    EXPECT_EQ(hi.value, 40.0);
}

TEST(Interpolate, ContinuousAcrossKnots) {
    const std::vector<double> tau{0, 1, 3, 3.5, 9}, p{0, 2, 2, 50, 51};
    for (std::size_t i = 1; i + 1 < tau.size(); ++i) {
        const double a = interpolate(tau, p, tau[i] - 1e-9).value;
        const double b = interpolate(tau, p, tau[i] + 1e-9).value;
        EXPECT_NEAR(a, b, 1e-6);
    }
}

TEST(Interpolate, TapeGradientMatchesFiniteDifferences) {
    nn::Parameter tau("tau", Matrix(2, 4)), p("p", Matrix(2, 4));
    tau.value << 0, 1, 2.5, 4, 0, 0.5, 3, 6;
    p.value << 1, 3, 4, 9, 0, 2, 2, 7;
    const std::vector<double> t{1.7, 4.1};
    auto build = [&](nn::Tape& tape) { return sum(interpolate(tape.param(tau), tape.param(p), t)); };
    auto res = test_support::grad_check(build, {&tau, &p}, 100, 3);
    EXPECT_EQ(res.failures, 0) << res.worst_relative_error;
}

TEST(Estimator, HandSetHeadsWithThreePartitions) {
    EstimatorConfig cfg = tiny_config();
    cfg.embedding = 2;
    SelEstimator m(2, 10.0, 2.0, cfg);
    // Zeroed output weights make the heads emit their biases for any input.
    auto& tau_out = m.tau_head().layers().back();
    tau_out.weight.value.setZero();
    tau_out.bias.value << 0.5, -1, 2, 0;
    auto& p_out = m.p_head().layers().back();
    p_out.weight.value.setZero();
    p_out.bias.value << 1, 2, 0.5, -1, 3, 0, -2, 1, 1, 1;
    m.k_weight().value << 1, 1, 2, 1, 0.5, 0.5, 1, 1, -1, 0.5;
    m.k_bias().value << 0, 0.5, -1, 0.2, 0.1;

    const double r[4] = {0.5, -1, 2, 0};
    double c[4];
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) c[i] = (acc += std::log1p(std::exp(r[i])) + 1e-6);
    const double big_t = 10.0 * 1.001;
    const std::vector<double> tau{0, big_t * c[0] / c[3], big_t * c[1] / c[3], big_t * c[2] / c[3], big_t};
    const std::vector<double> p{6, 7, 8, 8, 8};

    nn::Tape tape;
    nn::Var x = tape.constant(gaussian_rows(3, 2, 4));
    AeOutput ae = m.ae_forward(tape, x);
    ControlPoints cp = m.predict_tau_p(tape, x, ae.z);
    for (Index row = 0; row < 3; ++row) {
        for (Index i = 0; i < 5; ++i) {
            EXPECT_NEAR(cp.tau.value()(row, i), tau[static_cast<std::size_t>(i)], 1e-12);
            EXPECT_NEAR(cp.p.value()(row, i), p[static_cast<std::size_t>(i)], 1e-12);
        }
    }
}

TEST(Estimator, StructuralGuarantees) {
    SelEstimator m(5, 3.0, 10.0, tiny_config(4));
    nn::Tape tape;
    nn::Var x = tape.constant(gaussian_rows(200, 5, 2) * 3.0);
    AeOutput ae = m.ae_forward(tape, x);
    ControlPoints cp = m.predict_tau_p(tape, x, ae.z);
    const Matrix& tau = cp.tau.value();
    const Matrix& p = cp.p.value();
    for (Index r = 0; r < tau.rows(); ++r) {
        EXPECT_EQ(tau(r, 0), 0.0);
        EXPECT_EQ(tau(r, tau.cols() - 1), m.tau_end());
        EXPECT_GE(p(r, 0), 0.0);
        for (Index i = 1; i < tau.cols(); ++i) {
            EXPECT_GT(tau(r, i), tau(r, i - 1));
            EXPECT_GE(p(r, i), p(r, i - 1));
        }
    }
    EXPECT_EQ(ae.z.cols(), 2);
}

TEST(Estimator, UntrainedZeroInputIsFinite) {
    SelEstimator m(4, 1.0, 1.0, tiny_config());
    nn::Tape tape;
    Estimate e = m.estimate(tape, tape.constant(Matrix::Zero(3, 4)), {0.0, 0.5, 1.0});
    EXPECT_TRUE(e.y_hat.value().allFinite());
    EXPECT_TRUE(e.recon.value().allFinite());
}

TEST(Estimator, WidthMismatchIsShapeError) {
    SelEstimator m(4, 1.0, 1.0, tiny_config());
    nn::Tape tape;
    EXPECT_THROW(m.ae_forward(tape, tape.constant(Matrix::Zero(1, 3))), ShapeError);
}

TEST(Estimator, MonotoneInThresholdProperty) {
    SelEstimator m(3, 2.0, 5.0, tiny_config(7));
    Rng rng(5);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    const Matrix x = gaussian_rows(500, 3, 6);
    std::vector<double> t1(500), t2(500), zero(500, 0.0);
    for (std::size_t i = 0; i < 500; ++i) {
        t1[i] = u(rng);
        t2[i] = u(rng);
        if (t1[i] > t2[i]) std::swap(t1[i], t2[i]);
    }
    const auto y1 = m.predict(x, t1), y2 = m.predict(x, t2), y0 = m.predict(x, zero);
    nn::Tape tape;
    nn::Var xv = tape.constant(x);
    ControlPoints cp = m.predict_tau_p(tape, xv, m.ae_forward(tape, xv).z);
    for (std::size_t i = 0; i < 500; ++i) {
        EXPECT_LE(y1[i], y2[i]);
        EXPECT_EQ(y0[i], cp.p.value()(static_cast<Index>(i), 0));
    }
}

TEST(EstimatorLoss, PerfectIsZeroAndLambdaOff) {
    nn::Tape tape;
    Matrix yh(2, 1);
    yh << 3, 7;
    nn::Var x = tape.constant(Matrix::Ones(2, 2));
    auto perfect = combined_loss(tape.constant(yh), {3, 7}, x, x, 0.1);
    EXPECT_EQ(perfect.total.scalar(), 0.0);
    auto off = combined_loss(tape.constant(yh), {2, 9}, tape.constant(Matrix::Zero(2, 2)), x, 0.0);
    EXPECT_EQ(off.total.scalar(), off.est.scalar());
}

TEST(EstimatorLoss, SingleQueryByHand) {
    nn::Tape tape;
    Matrix x(1, 2), recon(1, 2);
    x << 1, 2;
    recon << 1, 3;
    auto parts = combined_loss(tape.constant(Matrix::Constant(1, 1, 9.0)), {4.0}, tape.constant(recon),
                               tape.constant(x), 1.0);
    const double ln2 = std::log(2.0);
    EXPECT_NEAR(parts.est.scalar(), ln2 * ln2, 1e-15);
    EXPECT_NEAR(parts.ae.scalar(), 0.5, 1e-15);
    EXPECT_NEAR(parts.total.scalar(), ln2 * ln2 + 0.5, 1e-15);
}

TEST(EstimatorLoss, GradientMatchesFiniteDifferences) {
    SelEstimator m(3, 2.0, 4.0, tiny_config(9));
    const Matrix x = gaussian_rows(6, 3, 8);
    const std::vector<double> t{0.3, 0.9, 1.2, 1.8, 0.05, 1.0}, y{1, 2, 4, 5, 1, 3};
    auto build = [&](nn::Tape& tape) { return estimator_loss(tape, m, x, t, y, 0.1).total; };
    auto res = test_support::grad_check(build, m.parameters(), 150, 11);
    EXPECT_EQ(res.failures, 0) << res.worst_relative_error;
}

TEST(SelectivityMse, IdentityOffsetAndHand) {
    EXPECT_EQ(selectivity_mse({1, 5, 9}, {1, 5, 9}), 0.0);
    EXPECT_DOUBLE_EQ(selectivity_mse({1, 5, 9}, {3, 7, 11}), 4.0);
    const std::vector<double> tau{0, 2, 4, 6}, p{0, 10, 10, 40};
    std::vector<double> pred;
    for (double t : {1.0, 3.0, 5.0}) pred.push_back(interpolate(tau, p, t).value);
    EXPECT_DOUBLE_EQ(selectivity_mse({4, 12, 25}, pred), 5.0 / 3.0);
    EXPECT_THROW(selectivity_mse({}, {}), ArgumentError);
}

TEST(TrainEstimator, EmptyWorkloadIsArgumentError) {
    oracle::Workload w;
    w.t_max = 1.0;
    EXPECT_THROW(train_estimator(w, tiny_config()), ArgumentError);
}

TEST(TrainEstimator, ConstantLabelsAreFit) {
    const Matrix data = gaussian_rows(200, 3, 1);
    Rng rng(2);
    oracle::Workload w = oracle::build_train_workload(data, 2, 2.0, rng);
    std::fill(w.labels.begin(), w.labels.end(), 50.0);
    EstimatorConfig cfg = tiny_config(3);
    cfg.hidden = 32;
    cfg.ae_epochs = 5;
    cfg.epochs = 400;
    cfg.batch = 64;
    SelEstimator m = train_estimator(w, cfg);
    const auto pred = m.predict(w.objects, w.thresholds);
    for (double v : pred) EXPECT_NEAR(v, 50.0, 5.0);
}

TEST(TrainEstimator, LossDropsAndIsDeterministic) {
    const Matrix data = gaussian_rows(150, 3, 4);
    Rng rng(2);
    const double t_max = oracle::estimate_t_max(data, rng);
    const oracle::Workload w = oracle::build_train_workload(data, 2, t_max, rng);
    EstimatorConfig cfg = tiny_config(5);
    cfg.hidden = 32;
    cfg.ae_epochs = 20;
    cfg.epochs = 40;
    cfg.batch = 64;
    EstimatorHistory h1, h2;
    SelEstimator a = train_estimator(w, cfg, &h1);
    SelEstimator b = train_estimator(w, cfg, &h2);
    EXPECT_LT(h1.final_est, h1.initial_est);
    EXPECT_LT(h1.final_recon, h1.initial_recon);
    EXPECT_EQ(h1.epoch_est, h2.epoch_est);
    EXPECT_EQ(a.predict(w.objects, w.thresholds), b.predict(w.objects, w.thresholds));
}

TEST(EstimatorCheckpoint, RoundTripAndWidthCheck) {
    SelEstimator m(3, 2.5, 7.0, tiny_config(2));
    const json j = save_estimator(m);
    SelEstimator r = load_estimator(json::parse(j.dump()), 3);
    const Matrix x = gaussian_rows(20, 3, 1);
    const std::vector<double> t(20, 1.1);
    EXPECT_EQ(m.predict(x, t), r.predict(x, t));
    EXPECT_EQ(r.t_max(), 2.5);
    EXPECT_THROW(load_estimator(j, 4), ConfigError);
    (void)row_of;
}
