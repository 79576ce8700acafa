#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "selgan/app/pipeline.hpp"
#include "selgan/parallel.hpp"

using namespace selgan;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> dataset, schema, out;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
    std::optional<int> gan_epochs, est_epochs;
    std::optional<std::size_t> rows;
    std::vector<std::uint64_t> ablation_seeds;
    unsigned threads = 0;
    bool force = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config, "pipeline config file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--dataset", o.dataset, "dataset CSV");
    cmd->add_option("--schema", o.schema, "declared schema file");
    cmd->add_option("-o,--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "root seed");
    cmd->add_option("--alpha", o.alpha, "selectivity loss weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--gan-epochs", o.gan_epochs, "GAN training epochs")->check(CLI::NonNegativeNumber);
    cmd->add_option("--sel-epochs", o.est_epochs, "estimator training epochs")->check(CLI::NonNegativeNumber);
    cmd->add_option("--rows", o.rows, "synthetic rows to generate (0: dataset size)");
    cmd->add_option("--threads", o.threads, "cap on worker threads (0: all cores)");
    cmd->add_flag("--force", o.force, "rerun stages even when their inputs are unchanged");
}

app::PipelineConfig resolve(const Overrides& o) {
    app::PipelineConfig c = app::load_config(o.config);
    if (o.dataset) c.dataset = *o.dataset;
    if (o.schema) c.schema = *o.schema;
    if (o.out) c.output_dir = *o.out;
    if (o.seed) c.seed = *o.seed;
    if (o.alpha) c.gan.alpha = *o.alpha;
    if (o.gan_epochs) c.gan.epochs = *o.gan_epochs;
    if (o.est_epochs) c.estimator.epochs = *o.est_epochs;
    if (o.rows) c.synth_rows = *o.rows;
    if (!o.ablation_seeds.empty()) c.ablation_seeds = o.ablation_seeds;
    app::validate(c);
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Selectivity-constrained tabular data synthesizer"};
    cli.require_subcommand(1);
    Overrides o;
    struct Cmd {
        const char* name;
        const char* help;
        std::optional<app::Stage> stage; // nullopt: whole pipeline
    };
    const Cmd cmds[] = {{"fit-schema", "fit mode models and category sets", app::Stage::fit_schema},
                        {"train-sel", "train the selectivity estimator", app::Stage::train_sel},
                        {"train-gan", "train the generator and critic", app::Stage::train_gan},
                        {"generate", "write the synthetic CSV", app::Stage::generate},
                        {"evaluate", "score the synthetic table", app::Stage::evaluate},
                        {"ablate", "paired runs with and without the selectivity term", app::Stage::ablate},
                        {"pipeline", "fit-schema through evaluate, resuming finished stages", std::nullopt}};
    std::vector<std::pair<CLI::App*, const Cmd*>> subs;
    for (const Cmd& c : cmds) {
        CLI::App* sub = cli.add_subcommand(c.name, c.help);
        add_common(sub, o);
        if (c.stage == app::Stage::ablate) sub->add_option("--seeds", o.ablation_seeds, "root seeds, one per pair");
        subs.push_back({sub, &c});
    }
    CLI11_PARSE(cli, argc, argv);

    spdlog::set_pattern("[%H:%M:%S] %v");
    app::PipelineConfig cfg;
    try {
        cfg = resolve(o);
    } catch (const std::exception& e) {
        spdlog::error("[config] {}", e.what());
        return 2;
    }
    set_max_threads(o.threads);
    try {
        app::Pipeline p(cfg, [](const std::string& m) { spdlog::info("{}", m); });
        for (const auto& [sub, cmd] : subs) {
            if (!sub->parsed()) continue;
            if (cmd->stage) {
                if (*cmd->stage == app::Stage::ablate) p.run(app::Stage::fit_schema);
                p.run(*cmd->stage, o.force);
            } else {
                p.run_all(o.force);
            }
        }
        spdlog::info("artifacts in {}", cfg.output_dir);
    } catch (const app::StageError& e) {
        spdlog::error("{}", e.what());
        return app::exit_code(e.stage());
    } catch (const std::exception& e) {
        spdlog::error("[setup] {}", e.what());
        return 3;
    }
    return 0;
}
