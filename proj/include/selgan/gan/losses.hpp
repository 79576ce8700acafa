#pragma once

#include <cmath>
#include <vector>

#include "selgan/estimator/estimator.hpp"
#include "selgan/gan/model.hpp"
#include "selgan/oracle/selectivity.hpp"

namespace selgan::gan {

struct CriticLossParts {
    Var total;
    Var wasserstein; // -mean C(real) + mean C(fake)
    Var penalty;     // mean (||grad C(x_hat)|| - 1)^2, unweighted
};

/// WGAN-GP critic loss. Inputs are full critic inputs (rows with their cond
/// columns); x_hat = eps_i * real_i + (1 - eps_i) * fake_i.
inline CriticLossParts critic_loss(Tape& tape, Mlp& critic, const Matrix& real, const Matrix& fake,
                                   const std::vector<double>& eps, double gp_weight) {
    if (real.cols() != fake.cols()) {
        throw ShapeError("critic_loss: real width " + std::to_string(real.cols()) + ", fake width " +
                         std::to_string(fake.cols()));
    }
    if (real.rows() != fake.rows() || static_cast<Index>(eps.size()) != real.rows()) {
        throw ShapeError("critic_loss: batch sizes differ");
    }
    using namespace nn::ops;
    Var w = sub(mean(critic.forward(tape, tape.constant(fake))), mean(critic.forward(tape, tape.constant(real))));
    Matrix mixed(real.rows(), real.cols());
    for (Index r = 0; r < real.rows(); ++r) {
        const double e = eps[static_cast<std::size_t>(r)];
        mixed.row(r) = e * real.row(r) + (1.0 - e) * fake.row(r);
    }
    Var g = critic.input_gradient(tape, tape.constant(mixed));
    Var norm = sqrt(add_scalar(row_sum(square(g)), 1e-12));
    Var penalty = mean(square(add_scalar(norm, -1.0)));
    Var total = add(w, scale(penalty, gp_weight));
    return {total, w, penalty};
}

inline Matrix with_cond(const Matrix& rows, const Matrix& cond) {
    if (cond.cols() == 0) return rows;
    Matrix out(rows.rows(), rows.cols() + cond.cols());
    out << rows, cond;
    return out;
}

struct SelTerm {
    Var loss;
    std::vector<double> labels;
    std::vector<double> estimates;
};

/// L_Sel for rows already in the estimator's encoding: labels from the exact
/// oracle over `data` (no gradient), estimates from the frozen estimator.
inline SelTerm selectivity_loss(Tape& tape, Var x, const std::vector<double>& thresholds, const Matrix& data,
                                estimator::SelEstimator& est, SelLossScale scale) {
    if (x.cols() != est.input_dim() || data.cols() != est.input_dim()) {
        throw ConfigError("estimator expects width " + std::to_string(est.input_dim()) + ", rows have " +
                          std::to_string(x.cols()));
    }
    SelTerm out;
    out.labels = oracle::label_queries(x.value(), thresholds, data);
    Var y_hat = est.estimate(tape, x, thresholds, true).y_hat;
    Matrix y(static_cast<Index>(out.labels.size()), 1);
    for (std::size_t i = 0; i < out.labels.size(); ++i) {
        y(static_cast<Index>(i), 0) = scale == SelLossScale::log1p ? std::log1p(out.labels[i]) : out.labels[i];
    }
    Var pred = scale == SelLossScale::log1p ? nn::ops::log1p(y_hat) : y_hat;
    out.loss = nn::ops::mean(nn::ops::square(nn::ops::sub(pred, tape.constant(y))));
    out.estimates.assign(y_hat.value().data(), y_hat.value().data() + y_hat.value().size());
    return out;
}

/// Everything random about one generator step, drawn up front.
struct GeneratorBatch {
    Matrix noise;
    Matrix cond;                       // B x cond width (may have 0 columns)
    std::vector<Condition> conditions; // empty when unconditional
    std::vector<double> thresholds;    // one per row, used by L_Sel
};

struct SelContext {
    estimator::SelEstimator* estimator = nullptr;
    const Matrix* data = nullptr; // D_origin in the estimator's encoding
};

struct GeneratorLossParts {
    Var total;       // adversarial + cond_weight * cond + alpha * sel
    Var adversarial; // -mean C(fake)
    Var cond;        // cross-entropy on conditioned columns (0 when unconditional)
    Var sel;         // L_Sel (0 without an estimator)
    Var fake;        // generated rows, GAN space
    bool has_sel = false;
};

/// L*_G = L_G + alpha * L_Sel with L_G = -mean C(fake) + cond_weight * CE.
/// The critic and estimator are frozen; gradients reach only the generator.
inline GeneratorLossParts generator_loss_augmented(Tape& tape, GanModel& m, const GeneratorBatch& batch,
                                                   const SelContext* sel, double alpha) {
    using namespace nn::ops;
    const Index b = batch.noise.rows();
    Var cond = tape.constant(batch.cond);
    Var input = batch.cond.cols() > 0 ? concat_cols({tape.constant(batch.noise), cond}) : tape.constant(batch.noise);
    GeneratorOutput g = m.generate_rows(tape, input);
    GeneratorLossParts out;
    out.fake = g.rows;
    out.adversarial = scale(mean(m.critic_score(tape, g.rows, cond, true)), -1.0);

    out.cond = tape.constant_scalar(0.0);
    if (!batch.conditions.empty()) {
        std::vector<Var> terms;
        for (std::size_t s = 0; s < g.nominal_logits.size(); ++s) {
            const Index w = g.nominal_logits[s].cols();
            Matrix mask = Matrix::Zero(b, w);
            bool any = false;
            for (Index r = 0; r < b; ++r) {
                const Condition& c = batch.conditions[static_cast<std::size_t>(r)];
                if (c.slot == s) {
                    mask(r, static_cast<Index>(c.category)) = 1.0;
                    any = true;
                }
            }
            if (any) terms.push_back(sum(hadamard(log_softmax_rows(g.nominal_logits[s]), tape.constant(mask))));
        }
        for (const Var& t : terms) out.cond = add(out.cond, t);
        out.cond = scale(out.cond, -1.0 / static_cast<double>(b));
    }
    out.total = add(out.adversarial, scale(out.cond, m.config().cond_weight));

    out.sel = tape.constant_scalar(0.0);
    if (sel && sel->estimator) {
        Var x = m.space().to_transformed(g.rows);
        out.sel = selectivity_loss(tape, x, batch.thresholds, *sel->data, *sel->estimator, m.config().sel_scale).loss;
        out.total = add(out.total, scale(out.sel, alpha));
        out.has_sel = true;
    }
    return out;
}

} // namespace selgan::gan
