#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "selgan/estimator/estimator.hpp"

namespace selgan::estimator {

/// Raw-count mean squared error.
inline double selectivity_mse(const std::vector<double>& labels, const std::vector<double>& predictions) {
    if (labels.empty()) throw ArgumentError("selectivity_mse of an empty batch");
    if (labels.size() != predictions.size()) throw ShapeError("label and prediction counts differ");
    double s = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) s += (labels[i] - predictions[i]) * (labels[i] - predictions[i]);
    return s / static_cast<double>(labels.size());
}

inline double selectivity_mse(SelEstimator& model, const oracle::Workload& w) {
    if (w.size() == 0) throw ArgumentError("selectivity_mse of an empty batch");
    if (!w.labeled()) throw ArgumentError("selectivity_mse needs a labeled workload");
    return selectivity_mse(w.labels, model.predict(w.objects, w.thresholds));
}

/// J_est over a whole workload (log1p scale), no gradients.
inline double log_mse(SelEstimator& model, const oracle::Workload& w) {
    const std::vector<double> pred = model.predict(w.objects, w.thresholds);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = std::log1p(pred[i]) - std::log1p(w.labels[i]);
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

struct EstimatorHistory {
    std::vector<double> ae_loss;   // per pretraining epoch, batch mean
    std::vector<double> epoch_est; // per training epoch, batch mean of J_est
    double initial_est = 0.0;      // whole workload, before the first training epoch
    double final_est = 0.0;        // whole workload, after the last epoch
    double initial_recon = 0.0;
    double final_recon = 0.0;
};

inline double reconstruction_mse(SelEstimator& model, const Matrix& x) {
    Tape tape;
    Var v = tape.constant(x);
    AeOutput ae = model.ae_forward(tape, v, true);
    return (ae.recon.value() - x).squaredNorm() / static_cast<double>(x.size());
}

namespace detail {

/// Workload objects with consecutive repeats collapsed.
inline Matrix distinct_consecutive(const Matrix& objects) {
    std::vector<Index> keep;
    for (Index r = 0; r < objects.rows(); ++r) {
        if (keep.empty() || objects.row(r) != objects.row(keep.back())) keep.push_back(r);
    }
    Matrix out(static_cast<Index>(keep.size()), objects.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) out.row(static_cast<Index>(i)) = objects.row(keep[i]);
    return out;
}

inline Matrix gather_rows(const Matrix& m, const std::vector<Index>& idx, std::size_t b, std::size_t e) {
    Matrix out(static_cast<Index>(e - b), m.cols());
    for (std::size_t i = b; i < e; ++i) out.row(static_cast<Index>(i - b)) = m.row(idx[i]);
    return out;
}

} // namespace detail

/// Pretrains the autoencoder alone, then trains every part on J. Batches
/// are reshuffled each epoch from a seeded stream, so each epoch consumes
/// every query exactly once.
inline SelEstimator train_estimator(const oracle::Workload& w, const EstimatorConfig& cfg,
                                    EstimatorHistory* history = nullptr) {
    if (w.size() == 0) throw ArgumentError("cannot train an estimator on an empty workload");
    if (!w.labeled()) throw ArgumentError("estimator training needs a labeled workload");
    if (cfg.batch <= 0) throw ArgumentError("batch size must be positive");
    const double top = std::max(1.0, *std::max_element(w.labels.begin(), w.labels.end()));
    SelEstimator model(w.objects.cols(), w.t_max, top / static_cast<double>(cfg.partitions + 1), cfg);
    EstimatorHistory hist;
    Rng rng(derive_seed(cfg.seed, "estimator.shuffle"));

    const Matrix ae_rows = detail::distinct_consecutive(w.objects);
    hist.initial_recon = reconstruction_mse(model, ae_rows);
    {
        nn::Adam opt(model.ae_parameters(), cfg.adam);
        std::vector<Index> order(static_cast<std::size_t>(ae_rows.rows()));
        std::iota(order.begin(), order.end(), Index{0});
        for (int epoch = 0; epoch < cfg.ae_epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            double total = 0.0;
            std::size_t batches = 0;
            for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch)) {
                const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch));
                Tape tape;
                Var x = tape.constant(detail::gather_rows(ae_rows, order, b, e));
                AeOutput ae = model.ae_forward(tape, x);
                Var loss = nn::ops::mean(nn::ops::square(nn::ops::sub(ae.recon, x)));
                opt.zero_grad();
                tape.backward(loss);
                opt.step();
                total += loss.scalar();
                ++batches;
            }
            hist.ae_loss.push_back(total / static_cast<double>(batches));
        }
    }
    hist.final_recon = reconstruction_mse(model, ae_rows);

    hist.initial_est = log_mse(model, w);
    nn::Adam opt(model.parameters(), cfg.adam);
    std::vector<Index> order(w.size());
    std::iota(order.begin(), order.end(), Index{0});
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch));
            std::vector<double> t, y;
            for (std::size_t i = b; i < e; ++i) {
                t.push_back(w.thresholds[static_cast<std::size_t>(order[i])]);
                y.push_back(w.labels[static_cast<std::size_t>(order[i])]);
            }
            Tape tape;
            LossParts loss = estimator_loss(tape, model, detail::gather_rows(w.objects, order, b, e), t, y, cfg.lambda);
            opt.zero_grad();
            tape.backward(loss.total);
            opt.step();
            total += loss.est.scalar();
            ++batches;
        }
        hist.epoch_est.push_back(total / static_cast<double>(batches));
    }
    hist.final_est = log_mse(model, w);
    if (history) *history = std::move(hist);
    return model;
}

} // namespace selgan::estimator
