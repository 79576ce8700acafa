#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selgan/estimator/estimator.hpp"
#include "selgan/eval/ml_utility.hpp"
#include "selgan/gan/model.hpp"
#include "selgan/nn/checkpoint.hpp"
#include "selgan/oracle/selectivity.hpp"

namespace selgan::app {

using json = nlohmann::json;

inline constexpr int kConfigVersion = 1;

struct EvalSection {
    std::size_t num_queries = 1000;
    int repeats = 10;
    std::optional<eval::TaskSpec> task;
    std::vector<std::string> cdf_columns; // empty: every continuous column
};

struct PipelineConfig {
    std::string dataset;
    std::string schema;
    std::string output_dir = "run";
    std::uint64_t seed = 1;
    std::size_t synth_rows = 0; // 0: as many rows as the dataset
    estimator::EstimatorConfig estimator;
    oracle::TmaxOptions t_max;
    gan::GanConfig gan;
    EvalSection eval;
    std::vector<std::uint64_t> ablation_seeds{1, 2, 3, 4, 5};
};

namespace detail {
inline json without_seed(json j) {
    j.erase("seed");
    return j;
}
} // namespace detail

namespace detail {
inline json estimator_json(const PipelineConfig& c) {
    json j = without_seed(estimator::config_to_json(c.estimator));
    j["t_max"] = {{"pairs", c.t_max.pairs}, {"percentile", c.t_max.percentile}};
    return j;
}
} // namespace detail

inline json config_to_json(const PipelineConfig& c) {
    json task = nullptr;
    if (c.eval.task) task = {{"label", c.eval.task->label}, {"kind", eval::to_string(c.eval.task->kind)}};
    return {{"format", "selgan-config"},
            {"version", kConfigVersion},
            {"dataset", c.dataset},
            {"schema", c.schema},
            {"output_dir", c.output_dir},
            {"seed", c.seed},
            {"synth_rows", c.synth_rows},
            {"estimator", detail::estimator_json(c)},
            {"gan", detail::without_seed(gan::config_to_json(c.gan))},
            {"eval",
             {{"num_queries", c.eval.num_queries},
              {"repeats", c.eval.repeats},
              {"task", task},
              {"cdf_columns", c.eval.cdf_columns}}},
            {"ablation", {{"seeds", c.ablation_seeds}}}};
}

inline void validate(const PipelineConfig& c) {
    if (c.dataset.empty() || c.schema.empty()) throw ConfigError("config must name a dataset and a schema");
    const auto& e = c.estimator;
    if (e.partitions <= 0 || e.latent <= 0 || e.hidden <= 0 || e.embedding <= 0 || e.batch <= 0 ||
        e.thresholds_per_object == 0 || e.ae_epochs < 0 || e.epochs < 0) {
        throw ConfigError("estimator sizes and counts must be positive");
    }
    if (e.lambda < 0.0 || !(e.epsilon_ratio > 0.0)) throw ConfigError("estimator lambda/epsilon out of range");
    if (c.t_max.pairs == 0 || !(c.t_max.percentile > 0.0 && c.t_max.percentile <= 1.0)) {
        throw ConfigError("t_max needs a positive pair count and a percentile in (0, 1]");
    }
    gan::validate(c.gan);
    if (c.eval.num_queries == 0 || c.eval.repeats <= 0) throw ConfigError("eval counts must be positive");
    if (c.ablation_seeds.empty()) throw ConfigError("ablation needs at least one seed");
}

/// Relative dataset/schema/output paths resolve against `base`.
inline PipelineConfig config_from_json(const json& j, const std::filesystem::path& base = {}) {
    if (j.value("version", kConfigVersion) != kConfigVersion) {
        throw ConfigError("unsupported config version " + j.at("version").dump());
    }
    PipelineConfig c;
    try {
        const auto resolve = [&](const std::string& p) {
            if (p.empty() || base.empty()) return p;
            const std::filesystem::path fp(p);
            return fp.is_absolute() ? p : (base / fp).lexically_normal().string();
        };
        c.dataset = resolve(j.value("dataset", std::string{}));
        c.schema = resolve(j.value("schema", std::string{}));
        c.output_dir = resolve(j.value("output_dir", c.output_dir));
        c.seed = j.value("seed", c.seed);
        c.synth_rows = j.value("synth_rows", c.synth_rows);
        if (j.contains("estimator")) {
            c.estimator = estimator::config_from_json(j.at("estimator"));
            if (j.at("estimator").contains("t_max")) {
                const json& t = j.at("estimator").at("t_max");
                c.t_max.pairs = t.value("pairs", c.t_max.pairs);
                c.t_max.percentile = t.value("percentile", c.t_max.percentile);
            }
        }
        if (j.contains("gan")) c.gan = gan::config_from_json(j.at("gan"));
        if (j.contains("eval")) {
            const json& e = j.at("eval");
            c.eval.num_queries = e.value("num_queries", c.eval.num_queries);
            c.eval.repeats = e.value("repeats", c.eval.repeats);
            if (e.contains("task") && !e.at("task").is_null()) {
                c.eval.task = eval::TaskSpec{e.at("task").at("label").get<std::string>(),
                                             eval::task_kind_from_string(e.at("task").at("kind").get<std::string>())};
            }
            c.eval.cdf_columns = e.value("cdf_columns", c.eval.cdf_columns);
        }
        if (j.contains("ablation")) c.ablation_seeds = j.at("ablation").value("seeds", c.ablation_seeds);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    validate(c);
    return c;
}

inline PipelineConfig load_config(const std::string& path) {
    return config_from_json(nn::read_json_file(path), std::filesystem::path(path).parent_path());
}

} // namespace selgan::app
