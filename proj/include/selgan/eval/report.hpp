#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selgan/eval/metrics.hpp"
#include "selgan/eval/ml_utility.hpp"
#include "selgan/eval/selectivity_eval.hpp"

namespace selgan::eval {

struct EvalOptions {
    SelEvalOptions sel;
    std::optional<TaskSpec> task;
    std::uint64_t seed = 0; // ML split and selectivity repeats derive from it
};

/// Evaluation results. Timings are kept out so equal inputs give equal bytes.
struct EvalReport {
    double repeated_rate = 0.0;
    double corr_diff = 0.0;
    std::vector<std::string> corr_warnings;
    SelEvalResult sel;
    std::optional<MlUtilityReport> ml;
    nlohmann::json seeds = nlohmann::json::object();
    nlohmann::json config = nlohmann::json::object();
};

inline EvalReport evaluate(const Table& origin, const Table& synth, const TableSchema& schema,
                           const nn::Matrix& origin_rows, estimator::SelEstimator& est, const EvalOptions& opt) {
    EvalReport r;
    r.repeated_rate = repeated_row_rate(synth);
    r.corr_diff = pairwise_correlation_difference(origin, synth, schema, &r.corr_warnings);
    SelEvalOptions so = opt.sel;
    so.seed = derive_seed(opt.seed, "selectivity");
    r.sel = selectivity_mse_eval(synth, origin_rows, schema, est, so);
    if (opt.task) r.ml = ml_utility(origin, synth, schema, *opt.task, derive_seed(opt.seed, "ml"));
    r.seeds = {{"evaluate", opt.seed}, {"selectivity", so.seed}};
    return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json j{{"format", "selgan-eval"},
                     {"version", 1},
                     {"repeated_rate", r.repeated_rate},
                     {"corr_diff", r.corr_diff},
                     {"corr_warnings", r.corr_warnings},
                     {"sel_mse", r.sel.mean},
                     {"sel_mse_repeats", r.sel.per_repeat},
                     {"seeds", r.seeds},
                     {"config", r.config}};
    j["ml_utility"] = r.ml ? to_json(*r.ml) : nlohmann::json(nullptr);
    return j;
}

/// One row per learner and training source, for spreadsheet use.
inline std::string ml_scores_csv(const MlUtilityReport& r) {
    std::string out = "learner,trained_on,accuracy,f1,mse,r2\n";
    for (const LearnerResult& l : r.learners) {
        for (int s = 0; s < 2; ++s) {
            const Scores& sc = s == 0 ? l.origin : l.synth;
            out += l.learner + (s == 0 ? ",origin," : ",synth,") + format_double(sc.accuracy) + "," +
                   format_double(sc.f1) + "," + format_double(sc.mse) + "," + format_double(sc.r2) + "\n";
        }
    }
    return out;
}

} // namespace selgan::eval
