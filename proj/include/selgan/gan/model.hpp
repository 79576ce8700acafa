#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "selgan/gan/cond.hpp"
#include "selgan/nn/adam.hpp"
#include "selgan/nn/checkpoint.hpp"
#include "selgan/nn/dense.hpp"

namespace selgan::gan {

using json = nlohmann::json;
using nn::Activation;
using nn::Mlp;
using nn::Tape;
using nn::Var;

/// Scale on which the selectivity term compares y and ŷ during training.
enum class SelLossScale { log1p, raw };

inline std::string to_string(SelLossScale s) { return s == SelLossScale::log1p ? "log1p" : "raw"; }

inline SelLossScale sel_loss_scale_from_string(const std::string& s) {
    if (s == "log1p") return SelLossScale::log1p;
    if (s == "raw") return SelLossScale::raw;
    throw ConfigError("unknown selectivity loss scale '" + s + "'");
}

struct GanConfig {
    double alpha = 0.01;
    Index batch = 500;
    int epochs = 300;
    int k_critic = 5;
    Index noise_dim = 128;
    std::vector<Index> generator_hidden{256, 256};
    std::vector<Index> critic_hidden{256, 256};
    double gp_weight = 10.0;
    double cond_weight = 1.0;
    bool conditional = true;
    SelLossScale sel_scale = SelLossScale::raw;
    nn::AdamConfig adam = nn::kGanAdam;
    std::uint64_t seed = 0;
};

inline json config_to_json(const GanConfig& c) {
    return {{"alpha", c.alpha},
            {"batch", c.batch},
            {"epochs", c.epochs},
            {"k_critic", c.k_critic},
            {"noise_dim", c.noise_dim},
            {"generator_hidden", c.generator_hidden},
            {"critic_hidden", c.critic_hidden},
            {"gp_weight", c.gp_weight},
            {"cond_weight", c.cond_weight},
            {"conditional", c.conditional},
            {"sel_scale", to_string(c.sel_scale)},
            {"lr", c.adam.lr},
            {"beta1", c.adam.beta1},
            {"beta2", c.adam.beta2},
            {"seed", c.seed}};
}

inline GanConfig config_from_json(const json& j) {
    GanConfig c;
    c.alpha = j.value("alpha", c.alpha);
    c.batch = j.value("batch", c.batch);
    c.epochs = j.value("epochs", c.epochs);
    c.k_critic = j.value("k_critic", c.k_critic);
    c.noise_dim = j.value("noise_dim", c.noise_dim);
    c.generator_hidden = j.value("generator_hidden", c.generator_hidden);
    c.critic_hidden = j.value("critic_hidden", c.critic_hidden);
    c.gp_weight = j.value("gp_weight", c.gp_weight);
    c.cond_weight = j.value("cond_weight", c.cond_weight);
    c.conditional = j.value("conditional", c.conditional);
    c.sel_scale = sel_loss_scale_from_string(j.value("sel_scale", to_string(c.sel_scale)));
    c.adam.lr = j.value("lr", c.adam.lr);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.seed = j.value("seed", c.seed);
    return c;
}

inline void validate(const GanConfig& c) {
    if (!(c.alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (c.batch <= 0 || c.epochs < 0 || c.k_critic <= 0 || c.noise_dim <= 0) {
        throw ConfigError("batch, k_critic and noise_dim must be positive and epochs non-negative");
    }
    if (c.gp_weight < 0.0 || c.cond_weight < 0.0) throw ConfigError("loss weights must be >= 0");
}

struct GeneratorOutput {
    Var rows;                       // activated, GAN space
    std::vector<Var> nominal_logits; // one per cond slot
};

/// Generator, critic and the fixed encodings around them.
class GanModel {
public:
    GanModel() = default;

    GanModel(const TableSchema& schema, CategoryFrequencies freq, const GanConfig& cfg)
        : config_(cfg), schema_(schema), layout_(encoding::build_layout(schema)),
          space_(GanSpace::from_schema(schema, layout_)), frequencies_(std::move(freq)) {
        validate(cfg);
        cond_ = cfg.conditional ? build_cond_layout(schema) : CondLayout{};
        if (frequencies_.size() != build_cond_layout(schema).columns.size()) {
            throw ConfigError("category frequencies do not match the schema's nominal columns");
        }
        Rng rng(derive_seed(cfg.seed, "gan.init"));
        std::vector<Index> g{cfg.noise_dim + cond_.width};
        g.insert(g.end(), cfg.generator_hidden.begin(), cfg.generator_hidden.end());
        g.push_back(layout_.width);
        generator_ = Mlp("generator", g, Activation::relu, Activation::identity, rng);
        std::vector<Index> c{layout_.width + cond_.width};
        c.insert(c.end(), cfg.critic_hidden.begin(), cfg.critic_hidden.end());
        c.push_back(1);
        critic_ = Mlp("critic", c, Activation::leaky_relu, Activation::identity, rng);
    }

    const GanConfig& config() const { return config_; }
    GanConfig& config() { return config_; }
    const TableSchema& schema() const { return schema_; }
    const encoding::Layout& layout() const { return layout_; }
    const CondLayout& cond_layout() const { return cond_; }
    const GanSpace& space() const { return space_; }
    const CategoryFrequencies& frequencies() const { return frequencies_; }
    Index row_width() const { return layout_.width; }
    Mlp& generator() { return generator_; }
    Mlp& critic() { return critic_; }

    /// Input = [noise; cond]. Per-segment heads: tanh for alpha, softmax for
    /// beta and nominal, identity for ordinal.
    GeneratorOutput generate_rows(Tape& tape, Var input, bool frozen = false) {
        Var raw = frozen ? generator_.forward_frozen(tape, input) : generator_.forward(tape, input);
        GeneratorOutput out;
        std::vector<Var> parts;
        for (const encoding::Segment& seg : layout_.segments) {
            Var s = nn::ops::slice_cols(raw, seg.offset, seg.width);
            switch (seg.kind) {
            case encoding::SegmentKind::alpha: parts.push_back(nn::ops::tanh(s)); break;
            case encoding::SegmentKind::ordinal: parts.push_back(s); break;
            case encoding::SegmentKind::beta: parts.push_back(nn::ops::softmax_rows(s)); break;
            case encoding::SegmentKind::nominal:
                parts.push_back(nn::ops::softmax_rows(s));
                if (!cond_.empty()) out.nominal_logits.push_back(s);
                break;
            }
        }
        out.rows = nn::ops::concat_cols(parts);
        return out;
    }

    Var critic_score(Tape& tape, Var rows, Var cond, bool frozen = false) {
        Var in = cond_.width > 0 ? nn::ops::concat_cols({rows, cond}) : rows;
        return frozen ? critic_.forward_frozen(tape, in) : critic_.forward(tape, in);
    }

private:
    GanConfig config_;
    TableSchema schema_;
    encoding::Layout layout_;
    GanSpace space_;
    CondLayout cond_;
    CategoryFrequencies frequencies_;
    Mlp generator_, critic_;
};

inline constexpr int kGanVersion = 1;

inline json save_gan(GanModel& m) {
    return {{"format", "selgan-gan"},
            {"version", kGanVersion},
            {"config", config_to_json(m.config())},
            {"schema", encoding::schema_to_json(m.schema())},
            {"frequencies", m.frequencies()},
            {"generator", nn::save_mlp(m.generator())},
            {"critic", nn::save_mlp(m.critic())}};
}

inline GanModel load_gan(const json& j) {
    if (j.value("format", "") != "selgan-gan") throw FormatError("not a GAN checkpoint");
    if (j.value("version", 0) != kGanVersion) throw FormatError("unsupported GAN checkpoint version");
    GanModel m(encoding::schema_from_json(j.at("schema")), j.at("frequencies").get<CategoryFrequencies>(),
               config_from_json(j.at("config")));
    m.generator() = nn::load_mlp(j.at("generator"), "generator");
    m.critic() = nn::load_mlp(j.at("critic"), "critic");
    if (m.generator().out_dim() != m.row_width()) throw FormatError("generator width does not match schema");
    return m;
}

} // namespace selgan::gan
