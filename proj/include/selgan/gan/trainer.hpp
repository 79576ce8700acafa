#pragma once

#include <functional>
#include <random>
#include <vector>

#include "selgan/gan/losses.hpp"
#include "selgan/table.hpp"

namespace selgan::gan {

struct GanHistory {
    std::vector<double> critic_loss;    // last critic step of each epoch
    std::vector<double> generator_loss; // L*_G per epoch
    std::vector<double> sel_loss;       // L_Sel per epoch (0 without an estimator)
};

/// Called after every generator update with the 1-based epoch number.
using EpochObserver = std::function<void(int epoch, GanModel&)>;

namespace detail {

class BatchSampler {
public:
    BatchSampler(const GanModel& m, const encoding::TransformedMatrix& data) : cond_(m.cond_layout()) {
        rows_ = data.rows.rows();
        if (cond_.empty()) return;
        for (const CondColumn& cc : cond_.columns) {
            std::vector<std::vector<Index>> by_cat(static_cast<std::size_t>(cc.width));
            for (Index r = 0; r < data.rows.rows(); ++r) {
                by_cat[static_cast<std::size_t>(encoding::argmax(data.rows, r, cc.offset, cc.width))].push_back(r);
            }
            by_category_.push_back(std::move(by_cat));
        }
    }

    /// Conditions, cond rows and matching real-row indices for one batch.
    void conditions(Index b, const CategoryFrequencies& freq, Rng& rng, Matrix& cond,
                    std::vector<Condition>& conds, std::vector<Index>& real) const {
        cond = Matrix::Zero(b, cond_.width);
        conds.clear();
        real.resize(static_cast<std::size_t>(b));
        if (cond_.empty()) {
            std::uniform_int_distribution<Index> u(0, rows_ - 1);
            for (Index& r : real) r = u(rng);
            return;
        }
        for (Index i = 0; i < b; ++i) {
            const Condition c = sample_condition(cond_, freq, rng);
            cond(i, cond_.columns[c.slot].offset + static_cast<Index>(c.category)) = 1.0;
            const auto& pool = by_category_[c.slot][c.category];
            std::uniform_int_distribution<std::size_t> u(0, pool.size() - 1);
            real[static_cast<std::size_t>(i)] = pool[u(rng)];
            conds.push_back(c);
        }
    }

private:
    CondLayout cond_;
    Index rows_ = 0;
    std::vector<std::vector<std::vector<Index>>> by_category_;
};

inline Matrix normal_matrix(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> n;
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

inline Matrix gather(const Matrix& m, const std::vector<Index>& idx) {
    Matrix out(static_cast<Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = m.row(idx[i]);
    return out;
}

} // namespace detail

/// One epoch = k_critic critic updates followed by one generator update on
/// L*_G. The selectivity term draws thresholds from its own stream, so the
/// adversarial part sees the same random numbers whatever alpha is.
inline GanModel train_gan(const encoding::TransformedMatrix& data, const TableSchema& schema,
                          estimator::SelEstimator* est, const GanConfig& cfg, GanHistory* history = nullptr,
                          const EpochObserver& observer = {}) {
    validate(cfg);
    if (data.rows.rows() == 0) throw DataError("cannot train on an empty table");
    const CondLayout all_nominal = build_cond_layout(schema);
    GanModel m(schema, category_frequencies(data, all_nominal), cfg);
    if (data.rows.cols() != m.row_width()) {
        throw ConfigError("data width " + std::to_string(data.rows.cols()) + " does not match schema width " +
                          std::to_string(m.row_width()));
    }
    if (est && est->input_dim() != m.row_width()) {
        throw ConfigError("estimator width " + std::to_string(est->input_dim()) + " does not match data width " +
                          std::to_string(m.row_width()));
    }

    const Matrix real_gan = m.space().to_gan(data.rows);
    detail::BatchSampler sampler(m, data);
    Rng rng(derive_seed(cfg.seed, "gan.train"));
    Rng sel_rng(derive_seed(cfg.seed, "gan.selectivity"));
    nn::Adam critic_opt(m.critic().parameters(), cfg.adam);
    nn::Adam gen_opt(m.generator().parameters(), cfg.adam);
    const SelContext sel{est, &data.rows};
    GanHistory hist;
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Matrix cond;
    std::vector<Condition> conds;
    std::vector<Index> real_idx;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double critic_value = 0.0;
        for (int k = 0; k < cfg.k_critic; ++k) {
            sampler.conditions(cfg.batch, m.frequencies(), rng, cond, conds, real_idx);
            const Matrix noise = detail::normal_matrix(cfg.batch, cfg.noise_dim, rng);
            std::vector<double> eps(static_cast<std::size_t>(cfg.batch));
            for (double& e : eps) e = unit(rng);
            Matrix fake;
            {
                Tape t;
                fake = m.generate_rows(t, t.constant(with_cond(noise, cond)), true).rows.value();
            }
            Tape tape;
            CriticLossParts lc = critic_loss(tape, m.critic(), with_cond(detail::gather(real_gan, real_idx), cond),
                                             with_cond(fake, cond), eps, cfg.gp_weight);
            critic_opt.zero_grad();
            tape.backward(lc.total);
            critic_opt.step();
            critic_value = lc.total.scalar();
        }

        GeneratorBatch batch;
        sampler.conditions(cfg.batch, m.frequencies(), rng, batch.cond, batch.conditions, real_idx);
        batch.noise = detail::normal_matrix(cfg.batch, cfg.noise_dim, rng);
        if (est) {
            batch.thresholds.resize(static_cast<std::size_t>(cfg.batch));
            for (double& t : batch.thresholds) t = oracle::sample_threshold(est->t_max(), sel_rng);
        }
        Tape tape;
        GeneratorLossParts lg = generator_loss_augmented(tape, m, batch, &sel, cfg.alpha);
        gen_opt.zero_grad();
        tape.backward(lg.total);
        gen_opt.step();

        hist.critic_loss.push_back(critic_value);
        hist.generator_loss.push_back(lg.total.scalar());
        hist.sel_loss.push_back(lg.sel.scalar());
        if (observer) observer(epoch, m);
    }
    if (history) *history = std::move(hist);
    return m;
}

/// Generated rows in the estimator/oracle encoding, with beta and nominal
/// segments hardened to one-hot.
inline Matrix generate_encoded(GanModel& m, std::size_t n, Rng& rng) {
    const auto width = m.row_width();
    Matrix out(static_cast<Index>(n), width);
    const Index chunk = std::max<Index>(1, m.config().batch);
    const CondLayout& cl = m.cond_layout();
    for (Index b = 0; b < static_cast<Index>(n); b += chunk) {
        const Index rows = std::min(chunk, static_cast<Index>(n) - b);
        Matrix cond = Matrix::Zero(rows, cl.width);
        if (!cl.empty()) {
            for (Index i = 0; i < rows; ++i) {
                const Condition c = sample_condition_empirical(cl, m.frequencies(), rng);
                cond(i, cl.columns[c.slot].offset + static_cast<Index>(c.category)) = 1.0;
            }
        }
        const Matrix noise = detail::normal_matrix(rows, m.config().noise_dim, rng);
        Tape t;
        Matrix g = m.generate_rows(t, t.constant(with_cond(noise, cond)), true).rows.value();
        for (const encoding::Segment& seg : m.layout().segments) {
            if (seg.kind != encoding::SegmentKind::beta && seg.kind != encoding::SegmentKind::nominal) continue;
            for (Index r = 0; r < rows; ++r) {
                const Index k = encoding::argmax(g, r, seg.offset, seg.width);
                g.block(r, seg.offset, 1, seg.width).setZero();
                g(r, seg.offset + k) = 1.0;
            }
        }
        out.middleRows(b, rows) = m.space().to_transformed(g);
    }
    return out;
}

inline Table generate(GanModel& m, std::size_t n, Rng& rng) {
    return encoding::inverse_transform(generate_encoded(m, n, rng), m.schema());
}

} // namespace selgan::gan
