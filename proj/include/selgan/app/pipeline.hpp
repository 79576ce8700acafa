#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "selgan/app/config.hpp"
#include "selgan/app/dataset.hpp"
#include "selgan/app/manifest.hpp"
#include "selgan/eval/ablation.hpp"
#include "selgan/eval/report.hpp"
#include "selgan/oracle/workload_io.hpp"
#include "selgan/stages.hpp"

namespace selgan::app {

namespace fs = std::filesystem;

enum class Stage { fit_schema, train_sel, train_gan, generate, evaluate, ablate };

inline constexpr Stage kPipelineStages[] = {Stage::fit_schema, Stage::train_sel, Stage::train_gan, Stage::generate,
                                            Stage::evaluate};

inline std::string to_string(Stage s) {
    switch (s) {
    case Stage::fit_schema: return "fit-schema";
    case Stage::train_sel: return "train-sel";
    case Stage::train_gan: return "train-gan";
    case Stage::generate: return "generate";
    case Stage::evaluate: return "evaluate";
    case Stage::ablate: return "ablate";
    }
    return "?";
}

/// Process exit code for a failure inside `s`.
inline int exit_code(Stage s) { return 10 + static_cast<int>(s); }

/// A failure tagged with the stage it happened in.
class StageError : public Error {
public:
    StageError(Stage s, const std::string& what) : Error("stage", "[" + to_string(s) + "] " + what), stage_(s) {}
    Stage stage() const { return stage_; }

private:
    Stage stage_;
};

namespace files {
inline constexpr const char* manifest = "manifest.json";
inline constexpr const char* timings = "timings.json";
inline constexpr const char* schema = "schema.json";
inline constexpr const char* workload = "train_workload.csv";
inline constexpr const char* estimator = "estimator.json";
inline constexpr const char* gan = "gan.json";
inline constexpr const char* synthetic = "synthetic.csv";
inline constexpr const char* report = "eval_report.json";
inline constexpr const char* ml_scores = "ml_scores.csv";
inline constexpr const char* ablation = "ablation.json";
} // namespace files

using Logger = std::function<void(const std::string&)>;

struct StageOutcome {
    Stage stage;
    bool skipped = false;
    double seconds = 0.0;
};

class Pipeline {
public:
    explicit Pipeline(PipelineConfig cfg, Logger log = {})
        : cfg_(std::move(cfg)), seeds_(StageSeeds::from_root(cfg_.seed)), log_(std::move(log)),
          dir_(cfg_.output_dir) {
        validate(cfg_);
        fs::create_directories(dir_);
        if (fs::exists(path(files::manifest))) {
            manifest_ = Manifest::from_json(nn::read_json_file(path(files::manifest)));
        }
        manifest_.config = config_to_json(cfg_);
        manifest_.seeds = seeds_.to_json();
        if (fs::exists(path(files::timings))) timings_ = nn::read_json_file(path(files::timings));
    }

    const PipelineConfig& config() const { return cfg_; }
    const StageSeeds& seeds() const { return seeds_; }
    const Manifest& manifest() const { return manifest_; }
    std::string path(const std::string& file) const { return (dir_ / file).string(); }

    /// Runs `s` unless its recorded inputs and outputs are unchanged (or
    /// `force`). Every earlier artifact it needs must already exist.
    StageOutcome run(Stage s, bool force = false) {
        try {
            const std::string key = stage_key(s);
            if (!force && up_to_date(s, key)) {
                say(to_string(s) + ": up to date, skipped");
                return {s, true, 0.0};
            }
            say(to_string(s) + ": running");
            const auto t0 = std::chrono::steady_clock::now();
            const std::vector<std::string> outputs = execute(s);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            StageRecord rec{key, {}};
            for (const auto& f : outputs) rec.outputs[f] = file_sha256(path(f));
            manifest_.stages[to_string(s)] = std::move(rec);
            save_manifest();
            timings_[to_string(s)] = secs;
            nn::write_json_file(path(files::timings), timings_);
            say(to_string(s) + ": done in " + std::to_string(secs) + " s");
            return {s, false, secs};
        } catch (const StageError&) {
            throw;
        } catch (const Error& e) {
            throw StageError(s, e.kind() + " error: " + e.what());
        } catch (const std::exception& e) {
            throw StageError(s, e.what());
        }
    }

    std::vector<StageOutcome> run_all(bool force = false) {
        std::vector<StageOutcome> out;
        for (Stage s : kPipelineStages) out.push_back(run(s, force));
        return out;
    }

private:
    void say(const std::string& msg) const {
        if (log_) log_(msg);
    }

    void save_manifest() const { write_file(path(files::manifest), manifest_.to_json().dump(1) + "\n"); }

    std::string output_hash(Stage s, const std::string& file) const {
        const auto it = manifest_.stages.find(to_string(s));
        if (it == manifest_.stages.end() || !it->second.outputs.count(file)) {
            throw ConfigError("stage " + to_string(s) + " has not produced " + file + " yet");
        }
        return it->second.outputs.at(file);
    }

    /// Hash of everything a stage's result depends on.
    std::string stage_key(Stage s) const {
        const json cfg = config_to_json(cfg_);
        json in{{"stage", to_string(s)}};
        switch (s) {
        case Stage::fit_schema:
            in["dataset"] = file_sha256(cfg_.dataset);
            in["schema"] = file_sha256(cfg_.schema);
            in["seed"] = seeds_.schema;
            break;
        case Stage::train_sel:
            in["schema"] = output_hash(Stage::fit_schema, files::schema);
            in["dataset"] = file_sha256(cfg_.dataset);
            in["estimator"] = cfg.at("estimator");
            in["seeds"] = {seeds_.workload, seeds_.estimator};
            break;
        case Stage::train_gan:
            in["schema"] = output_hash(Stage::fit_schema, files::schema);
            in["dataset"] = file_sha256(cfg_.dataset);
            in["estimator"] = output_hash(Stage::train_sel, files::estimator);
            in["gan"] = cfg.at("gan");
            in["seed"] = seeds_.gan;
            break;
        case Stage::generate:
            in["gan"] = output_hash(Stage::train_gan, files::gan);
            in["rows"] = cfg_.synth_rows;
            in["seed"] = seeds_.generate;
            break;
        case Stage::evaluate:
            in["schema"] = output_hash(Stage::fit_schema, files::schema);
            in["dataset"] = file_sha256(cfg_.dataset);
            in["estimator"] = output_hash(Stage::train_sel, files::estimator);
            in["synthetic"] = output_hash(Stage::generate, files::synthetic);
            in["eval"] = cfg.at("eval");
            in["config"] = cfg;
            in["seed"] = seeds_.evaluate;
            break;
        case Stage::ablate:
            in["schema"] = output_hash(Stage::fit_schema, files::schema);
            in["dataset"] = file_sha256(cfg_.dataset);
            in["config"] = cfg;
            break;
        }
        return sha256_hex(in.dump());
    }

    bool up_to_date(Stage s, const std::string& key) const {
        const auto it = manifest_.stages.find(to_string(s));
        if (it == manifest_.stages.end() || it->second.key != key) return false;
        for (const auto& [file, hash] : it->second.outputs) {
            if (!fs::exists(path(file)) || file_sha256(path(file)) != hash) return false;
        }
        return true;
    }

    TableSchema fitted_schema() const {
        return encoding::schema_from_json(nn::read_json_file(path(files::schema)));
    }

    Table origin_table(TableSchema& schema) const {
        const io::CsvDocument doc = io::read_csv(cfg_.dataset);
        return table_from_csv(doc, schema);
    }

    estimator::SelEstimator load_est(const TableSchema& schema) const {
        return estimator::load_estimator(nn::read_json_file(path(files::estimator)),
                                         encoding::build_layout(schema).width);
    }

    std::vector<std::string> execute(Stage s) {
        switch (s) {
        case Stage::fit_schema: {
            Dataset ds = load_dataset(cfg_.dataset, cfg_.schema);
            const TableSchema fitted = fit_schema_stage(ds.table, ds.schema, seeds_.schema);
            nn::write_json_file(path(files::schema), encoding::schema_to_json(fitted));
            return {files::schema};
        }
        case Stage::train_sel: {
            TableSchema schema = fitted_schema();
            const encoding::TransformedMatrix data = encoding::transform(origin_table(schema), schema);
            Rng rng(seeds_.workload);
            const double t_max = oracle::estimate_t_max(data.rows, rng, cfg_.t_max);
            const oracle::Workload w =
                oracle::build_train_workload(data.rows, cfg_.estimator.thresholds_per_object, t_max, rng);
            oracle::save_workload(path(files::workload), w);
            estimator::EstimatorConfig ec = cfg_.estimator;
            ec.seed = seeds_.estimator;
            estimator::EstimatorHistory hist;
            estimator::SelEstimator est = estimator::train_estimator(w, ec, &hist);
            say("train-sel: J_est " + std::to_string(hist.initial_est) + " -> " + std::to_string(hist.final_est));
            nn::write_json_file(path(files::estimator), estimator::save_estimator(est));
            return {files::workload, files::estimator};
        }
        case Stage::train_gan: {
            TableSchema schema = fitted_schema();
            const encoding::TransformedMatrix data = encoding::transform(origin_table(schema), schema);
            estimator::SelEstimator est = load_est(schema);
            gan::GanHistory hist;
            const int every = std::max(1, cfg_.gan.epochs / 10);
            gan::GanConfig gc = cfg_.gan;
            gc.seed = seeds_.gan;
            gan::GanModel m = gan::train_gan(data, schema, &est, gc, &hist, [&](int epoch, gan::GanModel&) {
                if (epoch % every == 0 || epoch == gc.epochs) {
                    say("train-gan: epoch " + std::to_string(epoch) + "/" + std::to_string(gc.epochs));
                }
            });
            if (!hist.generator_loss.empty()) {
                say("train-gan: final critic loss " + std::to_string(hist.critic_loss.back()) + ", L*_G " +
                    std::to_string(hist.generator_loss.back()) + ", L_Sel " + std::to_string(hist.sel_loss.back()));
            }
            nn::write_json_file(path(files::gan), gan::save_gan(m));
            return {files::gan};
        }
        case Stage::generate: {
            gan::GanModel m = gan::load_gan(nn::read_json_file(path(files::gan)));
            TableSchema schema = fitted_schema();
            const std::size_t n = cfg_.synth_rows ? cfg_.synth_rows : origin_table(schema).num_rows();
            const Table synth = generate_stage(m, n, seeds_);
            io::write_csv(path(files::synthetic), table_to_csv(synth));
            return {files::synthetic};
        }
        case Stage::evaluate: return evaluate_stage();
        case Stage::ablate: return ablate_stage();
        }
        return {};
    }

    std::vector<std::string> evaluate_stage() {
        TableSchema schema = fitted_schema();
        const Table origin = origin_table(schema);
        const encoding::TransformedMatrix data = encoding::transform(origin, schema);
        estimator::SelEstimator est = load_est(schema);
        const Table synth = table_from_csv(io::read_csv(path(files::synthetic)), schema);
        if (synth.num_rows() == 0) throw DataError("synthetic table is empty");

        eval::EvalOptions opt;
        opt.sel.num_queries = cfg_.eval.num_queries;
        opt.sel.repeats = cfg_.eval.repeats;
        opt.task = cfg_.eval.task;
        opt.seed = seeds_.evaluate;
        eval::EvalReport report = eval::evaluate(origin, synth, schema, data.rows, est, opt);
        report.config = config_to_json(cfg_);
        report.seeds["root"] = seeds_.root;
        write_file(path(files::report), eval::to_json(report).dump(1) + "\n");
        std::vector<std::string> outputs{files::report};
        if (report.ml) {
            write_file(path(files::ml_scores), eval::ml_scores_csv(*report.ml));
            outputs.push_back(files::ml_scores);
        }
        std::vector<std::string> cols = cfg_.eval.cdf_columns;
        if (cols.empty()) {
            for (const auto& c : schema.columns) {
                if (c.kind == ColumnKind::continuous) cols.push_back(c.name);
            }
        }
        for (const auto& c : cols) {
            const std::string file = "cdf_" + c + ".csv";
            write_file(path(file), eval::cdf_to_csv(eval::cdf_export(origin, synth, c)));
            outputs.push_back(file);
        }
        say("evaluate: repeated " + std::to_string(report.repeated_rate) + "%, corr diff " +
            std::to_string(report.corr_diff) + ", sel MSE " + std::to_string(report.sel.mean));
        return outputs;
    }

    std::vector<std::string> ablate_stage() {
        TableSchema schema = fitted_schema();
        const Table origin = origin_table(schema);
        eval::AblationOptions opt;
        opt.estimator = cfg_.estimator;
        opt.t_max = cfg_.t_max;
        opt.gan = cfg_.gan;
        opt.eval.sel.num_queries = cfg_.eval.num_queries;
        opt.eval.sel.repeats = cfg_.eval.repeats;
        opt.eval.task = cfg_.eval.task;
        opt.synth_rows = cfg_.synth_rows;
        const eval::AblationReport r =
            eval::ablation_compare(origin, schema, cfg_.ablation_seeds, opt, [&](const eval::AblationSeedResult& x) {
                say("ablate: seed " + std::to_string(x.seed) + " sel MSE " + std::to_string(x.without_sel.sel_mse) +
                    " (alpha 0) vs " + std::to_string(x.with_sel.sel_mse) + " (alpha " +
                    std::to_string(x.with_sel.alpha) + ")");
            });
        json j = eval::to_json(r);
        j["config"] = config_to_json(cfg_);
        write_file(path(files::ablation), j.dump(1) + "\n");
        return {files::ablation};
    }

    PipelineConfig cfg_;
    StageSeeds seeds_;
    Logger log_;
    fs::path dir_;
    Manifest manifest_;
    json timings_ = json::object();
};

} // namespace selgan::app
