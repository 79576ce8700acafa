#pragma once

#include <cstdint>

#include <json.hpp>

#include "selgan/estimator/train.hpp"
#include "selgan/gan/trainer.hpp"
#include "selgan/oracle/selectivity.hpp"
#include "selgan/transform/transformer.hpp"

namespace selgan {

/// Per-stage seeds derived from one root seed.
struct StageSeeds {
    std::uint64_t root = 0;
    std::uint64_t schema = 0;
    std::uint64_t workload = 0;
    std::uint64_t estimator = 0;
    std::uint64_t gan = 0;
    std::uint64_t generate = 0;
    std::uint64_t evaluate = 0;

    static StageSeeds from_root(std::uint64_t root) {
        return {root,
                derive_seed(root, "schema"),
                derive_seed(root, "workload"),
                derive_seed(root, "estimator"),
                derive_seed(root, "gan"),
                derive_seed(root, "generate"),
                derive_seed(root, "evaluate")};
    }

    nlohmann::json to_json() const {
        return {{"root", root},         {"schema", schema},     {"workload", workload}, {"estimator", estimator},
                {"gan", gan},           {"generate", generate}, {"evaluate", evaluate}};
    }
};

inline encoding::TableSchema fit_schema_stage(const Table& table, const encoding::TableSchema& declared,
                                              std::uint64_t seed) {
    encoding::SchemaFitOptions opt;
    opt.modes.seed = seed;
    return encoding::fit_schema(table, declared, opt);
}

/// t_max from sampled pairs, a labeled training workload over every row,
/// then estimator training.
inline estimator::SelEstimator train_estimator_stage(const nn::Matrix& data, estimator::EstimatorConfig cfg,
                                                     const StageSeeds& seeds,
                                                     estimator::EstimatorHistory* history = nullptr,
                                                     const oracle::TmaxOptions& tmax = {}) {
    Rng rng(seeds.workload);
    const double t_max = oracle::estimate_t_max(data, rng, tmax);
    const oracle::Workload w = oracle::build_train_workload(data, cfg.thresholds_per_object, t_max, rng);
    cfg.seed = seeds.estimator;
    return estimator::train_estimator(w, cfg, history);
}

inline gan::GanModel train_gan_stage(const encoding::TransformedMatrix& data, const encoding::TableSchema& schema,
                                     estimator::SelEstimator* est, gan::GanConfig cfg, const StageSeeds& seeds,
                                     gan::GanHistory* history = nullptr) {
    cfg.seed = seeds.gan;
    return gan::train_gan(data, schema, est, cfg, history);
}

inline Table generate_stage(gan::GanModel& m, std::size_t rows, const StageSeeds& seeds) {
    Rng rng(seeds.generate);
    return gan::generate(m, rows, rng);
}

} // namespace selgan
