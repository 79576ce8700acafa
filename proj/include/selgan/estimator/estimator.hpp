#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "selgan/estimator/interpolate.hpp"
#include "selgan/nn/adam.hpp"
#include "selgan/nn/checkpoint.hpp"
#include "selgan/nn/dense.hpp"
#include "selgan/oracle/selectivity.hpp"

namespace selgan::estimator {

using json = nlohmann::json;
using nn::Activation;
using nn::Mlp;
using nn::Parameter;

struct EstimatorConfig {
    Index partitions = 16; // L
    Index latent = 32;
    Index hidden = 128;
    Index embedding = 16;
    double lambda = 0.1;
    double epsilon_ratio = 1e-3; // epsilon = ratio * t_max
    int ae_epochs = 100;
    int epochs = 120;
    Index batch = 512;
    std::size_t thresholds_per_object = 4;
    nn::AdamConfig adam = nn::kEstimatorAdam;
    std::uint64_t seed = 0;
};

inline json config_to_json(const EstimatorConfig& c) {
    return {{"partitions", c.partitions}, {"latent", c.latent},     {"hidden", c.hidden},
            {"embedding", c.embedding},   {"lambda", c.lambda},     {"epsilon_ratio", c.epsilon_ratio},
            {"ae_epochs", c.ae_epochs},   {"epochs", c.epochs},     {"batch", c.batch},
            {"thresholds_per_object", c.thresholds_per_object},
            {"lr", c.adam.lr},            {"beta1", c.adam.beta1},  {"beta2", c.adam.beta2},
            {"seed", c.seed}};
}

inline EstimatorConfig config_from_json(const json& j) {
    EstimatorConfig c;
    c.partitions = j.value("partitions", c.partitions);
    c.latent = j.value("latent", c.latent);
    c.hidden = j.value("hidden", c.hidden);
    c.embedding = j.value("embedding", c.embedding);
    c.lambda = j.value("lambda", c.lambda);
    c.epsilon_ratio = j.value("epsilon_ratio", c.epsilon_ratio);
    c.ae_epochs = j.value("ae_epochs", c.ae_epochs);
    c.epochs = j.value("epochs", c.epochs);
    c.batch = j.value("batch", c.batch);
    c.thresholds_per_object = j.value("thresholds_per_object", c.thresholds_per_object);
    c.adam.lr = j.value("lr", c.adam.lr);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.seed = j.value("seed", c.seed);
    return c;
}

struct AeOutput {
    Var z;
    Var recon;
};

struct ControlPoints {
    Var tau; // B x (L+2)
    Var p;   // B x (L+2)
};

struct Estimate {
    Var y_hat; // B x 1, raw counts
    Var recon; // B x d
    std::vector<char> clamped;
};

/// Autoencoder plus the tau and p heads. `count_scale` multiplies the
/// cumulative p so a unit-sized k covers a share of the data.
class SelEstimator {
public:
    SelEstimator() = default;

    SelEstimator(Index input_dim, double t_max, double count_scale, const EstimatorConfig& cfg)
        : config_(cfg), input_dim_(input_dim), t_max_(t_max), count_scale_(count_scale) {
        if (input_dim <= 0) throw ArgumentError("estimator input width must be positive");
        if (!(t_max > 0.0)) throw ArgumentError("t_max must be positive");
        if (cfg.partitions < 1) throw ArgumentError("partition count L must be >= 1");
        Rng rng(derive_seed(cfg.seed, "estimator.init"));
        const Index h = cfg.hidden;
        const Index joint = input_dim + cfg.latent;
        const Index knots = cfg.partitions + 2;
        encoder_ = Mlp("ae.encoder", {input_dim, h, cfg.latent}, Activation::relu, Activation::identity, rng);
        decoder_ = Mlp("ae.decoder", {cfg.latent, h, input_dim}, Activation::relu, Activation::identity, rng);
        tau_head_ = Mlp("tau_head", {joint, h, h, knots - 1}, Activation::relu, Activation::identity, rng);
        p_head_ = Mlp("p_head", {joint, h, h, knots * cfg.embedding}, Activation::relu, Activation::identity, rng);
        const double limit = std::sqrt(6.0 / static_cast<double>(cfg.embedding + 1));
        std::uniform_real_distribution<double> u(-limit, limit);
        Matrix w(1, knots * cfg.embedding);
        for (Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
        k_weight_ = Parameter("p_head.k_weight", std::move(w));
        k_bias_ = Parameter("p_head.k_bias", Matrix::Zero(1, knots));
    }

    const EstimatorConfig& config() const { return config_; }
    Index input_dim() const { return input_dim_; }
    Index knots() const { return config_.partitions + 2; }
    double t_max() const { return t_max_; }
    double epsilon() const { return config_.epsilon_ratio * t_max_; }
    double tau_end() const { return t_max_ + epsilon(); }
    double count_scale() const { return count_scale_; }

    Mlp& encoder() { return encoder_; }
    Mlp& decoder() { return decoder_; }
    Mlp& tau_head() { return tau_head_; }
    Mlp& p_head() { return p_head_; }
    Parameter& k_weight() { return k_weight_; }
    Parameter& k_bias() { return k_bias_; }

    void check_width(Index w) const {
        if (w != input_dim_) {
            throw ShapeError("estimator expects rows of width " + std::to_string(input_dim_) + ", got " +
                             std::to_string(w));
        }
    }

    /// With `frozen`, weights enter the tape as constants and only the input
    /// receives gradients.
    AeOutput ae_forward(Tape& tape, Var x, bool frozen = false) {
        check_width(x.cols());
        Var z = run(encoder_, tape, x, frozen);
        Var recon = run(decoder_, tape, z, frozen);
        return {z, recon};
    }

    ControlPoints predict_tau_p(Tape& tape, Var x, Var z, bool frozen = false) {
        check_width(x.cols());
        Var xz = nn::ops::concat_cols({x, z});
        const Index b = x.rows();

        // tau: positive gaps, running sum, rescaled so the last knot is tau_end.
        Var gaps = nn::ops::add_scalar(nn::ops::softplus(run(tau_head_, tape, xz, frozen)), 1e-6);
        Var cum = nn::ops::cumsum_cols(gaps);
        Var last = nn::ops::slice_cols(cum, cum.cols() - 1, 1);
        Var inner = nn::ops::scale(nn::ops::div_col(cum, last), tau_end());
        Var tau = nn::ops::concat_cols({tape.constant(Matrix::Zero(b, 1)), inner});

        // p: per-knot embeddings h_i, k_i = relu(w_i . h_i + b_i), cumulative sum.
        Var h = run(p_head_, tape, xz, frozen);
        Var w = frozen ? tape.constant(k_weight_.value) : tape.param(k_weight_);
        Var bias = frozen ? tape.constant(k_bias_.value) : tape.param(k_bias_);
        Var k = nn::ops::relu(nn::ops::add_row(nn::ops::group_sum(nn::ops::mul_row(h, w), config_.embedding), bias));
        Var p = nn::ops::scale(nn::ops::cumsum_cols(k), count_scale_);
        return {tau, p};
    }

    Estimate estimate(Tape& tape, Var x, const std::vector<double>& thresholds, bool frozen = false) {
        AeOutput ae = ae_forward(tape, x, frozen);
        ControlPoints cp = predict_tau_p(tape, x, ae.z, frozen);
        Estimate e;
        e.y_hat = interpolate(cp.tau, cp.p, thresholds, &e.clamped);
        e.recon = ae.recon;
        return e;
    }

    /// Raw-count estimates for many queries, in chunks.
    std::vector<double> predict(const Matrix& objects, const std::vector<double>& thresholds,
                                std::size_t* clamped_count = nullptr) {
        check_width(objects.cols());
        if (static_cast<std::size_t>(objects.rows()) != thresholds.size()) {
            throw ShapeError("predict: object and threshold counts differ");
        }
        std::vector<double> out(thresholds.size());
        std::size_t clamped = 0;
        constexpr Index kChunk = 1024;
        for (Index b = 0; b < objects.rows(); b += kChunk) {
            const Index n = std::min(kChunk, objects.rows() - b);
            Tape tape;
            std::vector<double> t(thresholds.begin() + b, thresholds.begin() + b + n);
            Estimate e = estimate(tape, tape.constant(objects.middleRows(b, n)), t, true);
            for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(b + i)] = e.y_hat.value()(i, 0);
            for (char c : e.clamped) clamped += c ? 1 : 0;
        }
        if (clamped_count) *clamped_count = clamped;
        return out;
    }

    std::vector<Parameter*> ae_parameters() {
        std::vector<Parameter*> out = encoder_.parameters();
        for (Parameter* p : decoder_.parameters()) out.push_back(p);
        return out;
    }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> out = ae_parameters();
        for (Parameter* p : tau_head_.parameters()) out.push_back(p);
        for (Parameter* p : p_head_.parameters()) out.push_back(p);
        out.push_back(&k_weight_);
        out.push_back(&k_bias_);
        return out;
    }

private:
    static Var run(Mlp& net, Tape& tape, Var x, bool frozen) {
        return frozen ? net.forward_frozen(tape, x) : net.forward(tape, x);
    }

    EstimatorConfig config_;
    Index input_dim_ = 0;
    double t_max_ = 1.0;
    double count_scale_ = 1.0;
    Mlp encoder_, decoder_, tau_head_, p_head_;
    Parameter k_weight_, k_bias_;
};

struct LossParts {
    Var total;
    Var est;
    Var ae;
};

/// J = J_est + lambda * J_AE. J_est is the mean squared error of log1p
/// counts; J_AE is the mean squared reconstruction error.
inline LossParts combined_loss(Var y_hat, const std::vector<double>& labels, Var recon, Var x, double lambda) {
    if (static_cast<Index>(labels.size()) != y_hat.rows()) throw ShapeError("label and estimate counts differ");
    Tape& tape = y_hat.tape();
    Matrix y(static_cast<Index>(labels.size()), 1);
    for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Index>(i), 0) = std::log1p(labels[i]);
    Var est = nn::ops::mean(nn::ops::square(nn::ops::sub(nn::ops::log1p(y_hat), tape.constant(y))));
    Var ae = nn::ops::mean(nn::ops::square(nn::ops::sub(recon, x)));
    Var total = lambda == 0.0 ? est : nn::ops::add(est, nn::ops::scale(ae, lambda));
    return {total, est, ae};
}

inline LossParts estimator_loss(Tape& tape, SelEstimator& model, const Matrix& objects,
                                const std::vector<double>& thresholds, const std::vector<double>& labels,
                                double lambda) {
    if (labels.size() != thresholds.size()) throw ShapeError("label and threshold counts differ");
    Var x = tape.constant(objects);
    Estimate e = model.estimate(tape, x, thresholds);
    return combined_loss(e.y_hat, labels, e.recon, x, lambda);
}

inline constexpr int kEstimatorVersion = 1;

inline json save_estimator(SelEstimator& m) {
    return {{"format", "selgan-estimator"},
            {"version", kEstimatorVersion},
            {"input_dim", m.input_dim()},
            {"t_max", m.t_max()},
            {"epsilon", m.epsilon()},
            {"count_scale", m.count_scale()},
            {"distance", oracle::kDistanceName},
            {"config", config_to_json(m.config())},
            {"weights", nn::save_parameters(m.parameters())}};
}

/// Rebuilds an estimator. A nonzero `expected_width` must equal the stored
/// input width.
inline SelEstimator load_estimator(const json& j, Index expected_width = 0) {
    if (j.value("format", "") != "selgan-estimator") throw FormatError("not an estimator checkpoint");
    if (j.value("version", 0) != kEstimatorVersion) throw FormatError("unsupported estimator checkpoint version");
    if (j.value("distance", "") != oracle::kDistanceName) throw FormatError("unsupported distance in checkpoint");
    const Index width = j.at("input_dim").get<Index>();
    if (expected_width != 0 && width != expected_width) {
        throw ConfigError("estimator checkpoint has input width " + std::to_string(width) + ", data has " +
                          std::to_string(expected_width));
    }
    SelEstimator m(width, j.at("t_max").get<double>(), j.at("count_scale").get<double>(),
                   config_from_json(j.at("config")));
    nn::load_parameters(j.at("weights"), m.parameters());
    return m;
}

} // namespace selgan::estimator
