#pragma once

#include <functional>
#include <vector>

#include "selgan/eval/report.hpp"
#include "selgan/stages.hpp"

namespace selgan::eval {

struct AblationArm {
    double alpha = 0.0;
    double sel_mse = 0.0;
    std::optional<MlUtilityReport> ml;
};

struct AblationSeedResult {
    std::uint64_t seed = 0;
    AblationArm without_sel; // alpha = 0
    AblationArm with_sel;
};

struct AblationReport {
    std::vector<AblationSeedResult> seeds;

    double mean_sel_mse(bool with_sel) const {
        double s = 0.0;
        for (const auto& r : seeds) s += with_sel ? r.with_sel.sel_mse : r.without_sel.sel_mse;
        return seeds.empty() ? 0.0 : s / static_cast<double>(seeds.size());
    }
    /// Mean over seeds of (with - without) / without.
    double mean_relative_change() const {
        double s = 0.0;
        for (const auto& r : seeds) s += (r.with_sel.sel_mse - r.without_sel.sel_mse) / r.without_sel.sel_mse;
        return seeds.empty() ? 0.0 : s / static_cast<double>(seeds.size());
    }
    int wins() const {
        int w = 0;
        for (const auto& r : seeds) w += r.with_sel.sel_mse < r.without_sel.sel_mse;
        return w;
    }
};

struct AblationOptions {
    estimator::EstimatorConfig estimator;
    oracle::TmaxOptions t_max;
    gan::GanConfig gan; // gan.alpha is the with-Sel arm's weight
    EvalOptions eval;
    std::size_t synth_rows = 0; // 0: as many as the original table
};

using AblationProgress = std::function<void(const AblationSeedResult&)>;

/// For each root seed: one estimator, then two GAN arms sharing every seed
/// and differing only in alpha. The schema is fitted once, outside.
inline AblationReport ablation_compare(const Table& origin, const TableSchema& schema,
                                       const std::vector<std::uint64_t>& seeds, const AblationOptions& opt,
                                       const AblationProgress& progress = {}) {
    const encoding::TransformedMatrix data = encoding::transform(origin, schema);
    const std::size_t n = opt.synth_rows ? opt.synth_rows : origin.num_rows();
    AblationReport report;
    for (std::uint64_t root : seeds) {
        const StageSeeds ss = StageSeeds::from_root(root);
        estimator::SelEstimator est = train_estimator_stage(data.rows, opt.estimator, ss, nullptr, opt.t_max);
        AblationSeedResult res;
        res.seed = root;
        for (int arm = 0; arm < 2; ++arm) {
            gan::GanConfig gc = opt.gan;
            gc.alpha = arm == 0 ? 0.0 : opt.gan.alpha;
            gan::GanModel m = train_gan_stage(data, schema, &est, gc, ss);
            const Table synth = generate_stage(m, n, ss);
            EvalOptions eo = opt.eval;
            eo.seed = ss.evaluate;
            AblationArm& a = arm == 0 ? res.without_sel : res.with_sel;
            a.alpha = gc.alpha;
            SelEvalOptions so = eo.sel;
            so.seed = derive_seed(eo.seed, "selectivity");
            a.sel_mse = selectivity_mse_eval(synth, data.rows, schema, est, so).mean;
            if (eo.task) a.ml = ml_utility(origin, synth, schema, *eo.task, derive_seed(eo.seed, "ml"));
        }
        if (progress) progress(res);
        report.seeds.push_back(std::move(res));
    }
    return report;
}

inline nlohmann::json to_json(const AblationReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : r.seeds) {
        for (const AblationArm* a : {&s.without_sel, &s.with_sel}) {
            rows.push_back({{"seed", s.seed},
                            {"alpha", a->alpha},
                            {"sel_mse", a->sel_mse},
                            {"ml_utility", a->ml ? to_json(*a->ml) : nlohmann::json(nullptr)}});
        }
    }
    return {{"format", "selgan-ablation"},
            {"version", 1},
            {"rows", rows},
            {"summary",
             {{"mean_sel_mse_without", r.mean_sel_mse(false)},
              {"mean_sel_mse_with", r.mean_sel_mse(true)},
              {"mean_relative_change", r.mean_relative_change()},
              {"seeds_improved", r.wins()}}}};
}

} // namespace selgan::eval
