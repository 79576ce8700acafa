// Acceptance gate: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>

#include "selgan/app/pipeline.hpp"
#include "selgan/estimator/train.hpp"
#include "selgan/eval/ablation.hpp"
#include "selgan/gan/trainer.hpp"
#include "support/gradcheck.hpp"

using namespace selgan;
using nn::Index;
using nn::Matrix;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

Matrix normal_rows(Index n, Index d, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(n, d);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

// 1 ------------------------------------------------------------------------

Verdict gradients() {
    using test_support::grad_check;
    using test_support::GradCheckResult;
    std::vector<std::pair<std::string, GradCheckResult>> results;
    const Matrix x = normal_rows(8, 6, 1);

    Rng rng(3);
    nn::Mlp gen("g", {6, 16, 16, 5}, nn::Activation::relu, nn::Activation::identity, rng);
    results.push_back({"generator", grad_check([&](nn::Tape& t) {
                                       return nn::ops::mean(nn::ops::square(gen.forward(t, t.constant(x))));
                                   },
                                   gen.parameters(), 120, 11)});

    nn::Mlp critic("c", {6, 16, 16, 1}, nn::Activation::leaky_relu, nn::Activation::identity, rng);
    const Matrix fake = normal_rows(8, 6, 2);
    std::vector<double> eps(8);
    std::uniform_real_distribution<double> u;
    for (double& e : eps) e = u(rng);
    results.push_back({"critic", grad_check([&](nn::Tape& t) {
                                    return gan::critic_loss(t, critic, x, fake, eps, 10.0).total;
                                },
                                critic.parameters(), 120, 12)});

    estimator::EstimatorConfig ec;
    ec.partitions = 6;
    ec.hidden = 16;
    ec.latent = 4;
    ec.embedding = 4;
    ec.seed = 5;
    estimator::SelEstimator est(6, 3.0, 2.0, ec);
    std::vector<double> thr, lab;
    for (Index i = 0; i < 8; ++i) {
        thr.push_back(0.2 + 0.3 * static_cast<double>(i));
        lab.push_back(1.0 + static_cast<double>(i % 4));
    }
    results.push_back({"estimator", grad_check([&](nn::Tape& t) {
                                       return estimator::estimator_loss(t, est, x, thr, lab, 0.1).total;
                                   },
                                   est.parameters(), 150, 13)});

    Verdict v{true, ""};
    for (const auto& [name, r] : results) {
        v.pass = v.pass && r.failures == 0 && r.probes >= 100;
        v.detail += name + " " + std::to_string(r.probes - r.failures) + "/" + std::to_string(r.probes) +
                    " (worst " + fmt(r.worst_relative_error) + ") ";
    }
    return v;
}

// 2 ------------------------------------------------------------------------

Verdict round_trip() {
    Rng rng(21);
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> pick(0, 3);
    std::bernoulli_distribution coin(0.5);
    const char* grades[] = {"low", "mid", "high", "top"};
    const char* colors[] = {"red", "green", "blue", "grey"};
    Table t;
    t.columns = {"bimodal", "skewed", "grade", "color"};
    for (int i = 0; i < 1000; ++i) {
        t.rows.push_back({(coin(rng) ? 50.0 : -20.0) + 3.0 * g(rng), std::exp(g(rng)),
                          std::string(grades[pick(rng)]), std::string(colors[pick(rng)])});
    }
    encoding::TableSchema declared;
    declared.columns = {{"bimodal", encoding::ColumnKind::continuous, {}, std::nullopt, 0, 1},
                        {"skewed", encoding::ColumnKind::continuous, {}, std::nullopt, 0, 1},
                        {"grade", encoding::ColumnKind::ordinal, {"low", "mid", "high", "top"}, std::nullopt, 0, 1},
                        {"color", encoding::ColumnKind::nominal, {}, std::nullopt, 0, 1}};
    const auto schema = fit_schema_stage(t, declared, 7);
    const Table back = encoding::inverse_transform(encoding::transform(t, schema).rows, schema);
    double worst = 0.0;
    std::size_t cat_mismatch = 0, checked = 0, skipped = 0;
    for (std::size_t r = 0; r < t.num_rows(); ++r) {
        for (std::size_t c = 0; c < t.num_cols(); ++c) {
            if (schema.columns[c].kind != encoding::ColumnKind::continuous) {
                cat_mismatch += back.rows[r][c] != t.rows[r][c];
                continue;
            }
            const double v = std::get<double>(t.rows[r][c]);
            const auto nv = encoding::normalize_continuous(v, *schema.columns[c].mode_model);
            if (std::abs(nv.alpha) >= encoding::kAlphaClip) {
                ++skipped;
                continue;
            }
            ++checked;
            worst = std::max(worst, std::abs(std::get<double>(back.rows[r][c]) - v));
        }
    }
    return {cat_mismatch == 0 && worst <= 1e-6,
            "categorical mismatches " + std::to_string(cat_mismatch) + ", worst continuous error " + fmt(worst) +
                " over " + std::to_string(checked) + " in-range values (" + std::to_string(skipped) + " clipped)"};
}

// 3 ------------------------------------------------------------------------

Verdict oracle_properties() {
    Matrix three(3, 2);
    three << 0, 0, 3, 4, 6, 8;
    auto q = [](double a, double b) {
        nn::RowVector r(2);
        r << a, b;
        return r;
    };
    const bool hand = oracle::exact_selectivity(q(0, 0), 5.0, three) == 2.0 &&
                      oracle::exact_selectivity(q(0, 0), 4.999, three) == 1.0 &&
                      oracle::exact_selectivity(q(3, 4), 5.0, three) == 3.0;

    const Matrix data = normal_rows(300, 4, 31);
    Rng rng(32);
    std::uniform_int_distribution<Index> row(0, data.rows() - 1);
    std::uniform_real_distribution<double> t(0.0, 6.0);
    std::normal_distribution<double> g;
    int mono_fail = 0, self_fail = 0;
    for (int i = 0; i < 10000; ++i) {
        const nn::RowVector self = data.row(row(rng));
        nn::RowVector other(4);
        for (Index k = 0; k < 4; ++k) other(k) = g(rng);
        double a = t(rng), b = t(rng);
        if (a > b) std::swap(a, b);
        mono_fail += oracle::exact_selectivity(other, a, data) > oracle::exact_selectivity(other, b, data);
        self_fail += oracle::exact_selectivity(self, a, data) < 1.0;
    }
    return {hand && mono_fail == 0 && self_fail == 0,
            std::string("hand cases ") + (hand ? "ok" : "WRONG") + ", monotonicity violations " +
                std::to_string(mono_fail) + "/10000, self-match violations " + std::to_string(self_fail) + "/10000"};
}

// 4 ------------------------------------------------------------------------

Verdict estimator_structure() {
    const Matrix data = normal_rows(400, 4, 41);
    Rng rng(42);
    const double t_max = oracle::estimate_t_max(data, rng);
    const auto w = oracle::build_train_workload(data, 2, t_max, rng);
    estimator::EstimatorConfig cfg;
    cfg.ae_epochs = 5;
    cfg.epochs = 10;
    cfg.seed = 43;
    estimator::SelEstimator trained = estimator::train_estimator(w, cfg);
    estimator::SelEstimator untrained(4, t_max, 10.0, cfg);

    int tau_fail = 0, mono_fail = 0;
    double knot_err = 0.0;
    std::uniform_real_distribution<double> ut(-0.1 * t_max, 1.2 * t_max);
    for (estimator::SelEstimator* m : {&trained, &untrained}) {
        const Matrix x = normal_rows(5000, 4, m == &trained ? 44 : 45, 1.5);
        nn::Tape tape;
        nn::Var xv = tape.constant(x);
        const estimator::ControlPoints cp = m->predict_tau_p(tape, xv, m->ae_forward(tape, xv, true).z, true);
        const Matrix& tau = cp.tau.value();
        const Matrix& p = cp.p.value();
        std::vector<double> t1(5000), t2(5000);
        for (std::size_t i = 0; i < 5000; ++i) {
            t1[i] = ut(rng);
            t2[i] = ut(rng);
            if (t1[i] > t2[i]) std::swap(t1[i], t2[i]);
        }
        const auto y1 = m->predict(x, t1), y2 = m->predict(x, t2);
        for (Index r = 0; r < x.rows(); ++r) {
            bool ok = tau(r, 0) == 0.0 && tau(r, tau.cols() - 1) == m->tau_end();
            for (Index i = 1; i < tau.cols(); ++i) ok = ok && tau(r, i) > tau(r, i - 1);
            tau_fail += !ok;
            mono_fail += y1[static_cast<std::size_t>(r)] > y2[static_cast<std::size_t>(r)];
        }
        // Every knot of the first 200 objects.
        for (Index i = 0; i < tau.cols(); ++i) {
            std::vector<double> at(200);
            for (Index r = 0; r < 200; ++r) at[static_cast<std::size_t>(r)] = tau(r, i);
            const auto y = m->predict(x.topRows(200), at);
            for (Index r = 0; r < 200; ++r) knot_err = std::max(knot_err, std::abs(y[static_cast<std::size_t>(r)] - p(r, i)));
        }
    }
    return {tau_fail == 0 && mono_fail == 0 && knot_err <= 1e-9,
            "tau violations " + std::to_string(tau_fail) + "/10000, monotonicity violations " +
                std::to_string(mono_fail) + "/10000, worst knot error " + fmt(knot_err)};
}

// 5 ------------------------------------------------------------------------

Verdict estimator_convergence() {
    double ratio_sum = 0.0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        Rng rng(derive_seed(seed, "mixture"));
        std::normal_distribution<double> g;
        std::uniform_int_distribution<int> comp(0, 2);
        const double centers[3][4] = {{0, 0, 0, 0}, {4, 4, 0, -2}, {-3, 2, 5, 1}};
        Matrix data(1000, 4);
        for (Index r = 0; r < 1000; ++r) {
            const int k = comp(rng);
            for (Index c = 0; c < 4; ++c) data(r, c) = centers[k][c] + g(rng);
        }
        const double t_max = oracle::estimate_t_max(data, rng);
        const auto w = oracle::build_train_workload(data, 2, t_max, rng); // 2,000 queries
        estimator::EstimatorConfig cfg;
        cfg.seed = derive_seed(seed, "estimator");
        estimator::EstimatorHistory h;
        estimator::train_estimator(w, cfg, &h);
        const double ratio = h.final_est / h.initial_est;
        ratio_sum += ratio;
        detail += "seed " + std::to_string(seed) + ": " + fmt(h.initial_est) + " -> " + fmt(h.final_est) + "; ";
    }
    const double mean = ratio_sum / 3.0;
    return {mean <= 0.10, detail + "mean ratio " + fmt(mean)};
}

// 6 ------------------------------------------------------------------------

Verdict cond_vector() {
    encoding::TableSchema s;
    s.columns = {{"D1", encoding::ColumnKind::nominal, {"1", "2", "3"}, std::nullopt, 0, 1},
                 {"D2", encoding::ColumnKind::nominal, {"1", "2"}, std::nullopt, 0, 1}};
    const std::vector<double> v = gan::build_cond_vector(s, 1, 0);
    std::string got;
    for (std::size_t i = 0; i < v.size(); ++i) got += (i ? "," : "") + fmt(v[i]);
    return {v == std::vector<double>{0, 0, 0, 1, 0}, "[" + got + "]"};
}

// 7 ------------------------------------------------------------------------

std::vector<Matrix> snapshot(gan::GanModel& m) {
    std::vector<Matrix> out;
    for (nn::Parameter* p : m.generator().parameters()) out.push_back(p->value);
    for (nn::Parameter* p : m.critic().parameters()) out.push_back(p->value);
    return out;
}

bool bit_equal(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) return false;
        if (std::memcmp(a[i].data(), b[i].data(), sizeof(double) * static_cast<std::size_t>(a[i].size())) != 0) {
            return false;
        }
    }
    return true;
}

Verdict ablation_equivalence(const app::Dataset& ds) {
    const auto schema = fit_schema_stage(ds.table, ds.schema, 71);
    const auto data = encoding::transform(ds.table, schema);
    estimator::EstimatorConfig ec;
    ec.ae_epochs = 3;
    ec.epochs = 3;
    const estimator::SelEstimator est_model = train_estimator_stage(data.rows, ec, StageSeeds::from_root(72));
    estimator::SelEstimator est = est_model;
    gan::GanConfig cfg;
    cfg.alpha = 0.0;
    cfg.epochs = 4; // each epoch is k_critic + 1 optimizer steps
    cfg.seed = 73;
    std::vector<std::vector<Matrix>> base, aug;
    gan::train_gan(data, schema, nullptr, cfg, nullptr, [&](int, gan::GanModel& m) { base.push_back(snapshot(m)); });
    gan::train_gan(data, schema, &est, cfg, nullptr, [&](int, gan::GanModel& m) { aug.push_back(snapshot(m)); });
    int equal = 0;
    for (std::size_t i = 0; i < std::min(base.size(), aug.size()); ++i) equal += bit_equal(base[i], aug[i]);
    const int steps = cfg.epochs * (cfg.k_critic + 1);
    return {equal == cfg.epochs && steps >= 10,
            std::to_string(equal) + "/" + std::to_string(cfg.epochs) + " epochs (" + std::to_string(steps) +
                " optimizer steps) bit-identical"};
}

// 8 ------------------------------------------------------------------------

Verdict selectivity_improvement(const app::Dataset& ds) {
    const auto schema = fit_schema_stage(ds.table, ds.schema, StageSeeds::from_root(1).schema);
    eval::AblationOptions opt; // default hyperparameters, alpha = 0.01
    const auto report = eval::ablation_compare(ds.table, schema, {1, 2, 3, 4, 5}, opt,
                                               [](const eval::AblationSeedResult& r) {
                                                   std::printf("    seed %llu: alpha 0 -> %.2f, alpha %.2g -> %.2f\n",
                                                               static_cast<unsigned long long>(r.seed),
                                                               r.without_sel.sel_mse, r.with_sel.alpha,
                                                               r.with_sel.sel_mse);
                                                   std::fflush(stdout);
                                               });
    const double a0 = report.mean_sel_mse(false), a1 = report.mean_sel_mse(true);
    return {a1 < a0 && report.wins() >= 3,
            "mean sel MSE alpha=0 " + fmt(a0) + " vs alpha=0.01 " + fmt(a1) + " (" +
                fmt(100.0 * report.mean_relative_change()) + "% mean change), lower in " +
                std::to_string(report.wins()) + "/5 seeds"};
}

// 9 ------------------------------------------------------------------------

Verdict metric_oracles() {
    std::vector<std::string> failed;
    auto check = [&](bool ok, const std::string& name) {
        if (!ok) failed.push_back(name);
    };
    auto numeric = [](std::vector<std::string> cols, const std::vector<std::vector<double>>& rows) {
        Table t;
        t.columns = std::move(cols);
        for (const auto& r : rows) t.rows.emplace_back(r.begin(), r.end());
        return t;
    };
    check(eval::repeated_row_rate(numeric({"x"}, {{1}, {2}, {3}})) == 0.0, "distinct rows");
    check(eval::repeated_row_rate(numeric({"x"}, std::vector<std::vector<double>>(10, {4}))) == 90.0, "10 identical");
    check(eval::repeated_row_rate(numeric({"x"}, {{1}, {2}, {3}, {4}, {2}})) == 20.0, "one duplicated pair");

    encoding::TableSchema xy;
    xy.columns = {{"x", encoding::ColumnKind::continuous, {}, std::nullopt, 0, 1},
                  {"y", encoding::ColumnKind::continuous, {}, std::nullopt, 0, 1}};
    const Table pos = numeric({"x", "y"}, {{1, 1}, {2, 2}, {3, 3}, {4, 4}});
    const Table neg = numeric({"x", "y"}, {{1, -1}, {2, -2}, {3, -3}, {4, -4}});
    check(eval::pairwise_correlation_difference(pos, pos, xy) == 0.0, "correlation identity");
    check(eval::pairwise_correlation_difference(pos, neg, xy) == 2.0, "y=x vs y=-x");

    Rng rng(91);
    std::normal_distribution<double> g;
    Table t;
    t.columns = {"a", "b", "y"};
    for (int i = 0; i < 400; ++i) {
        const double a = g(rng), b = g(rng);
        t.rows.push_back({a, b, std::string(a + b > 0 ? "yes" : "no")});
    }
    encoding::TableSchema s = xy;
    s.columns[0].name = "a";
    s.columns[1].name = "b";
    s.columns.push_back({"y", encoding::ColumnKind::nominal, {"no", "yes"}, std::nullopt, 0, 1});
    for (auto task : {eval::TaskSpec{"y", eval::TaskKind::classification}, eval::TaskSpec{"a", eval::TaskKind::regression}}) {
        const Table train = eval::take_rows(t, eval::split_indices(t.num_rows(), 5).first);
        const auto r = eval::ml_utility(t, train, s, task, 5);
        for (const auto& l : r.learners) {
            check(l.origin.accuracy == l.synth.accuracy && l.origin.f1 == l.synth.f1 &&
                      l.origin.mse == l.synth.mse && l.origin.r2 == l.synth.r2,
                  "ml_utility identity " + l.learner + " " + eval::to_string(task.kind));
        }
    }
    std::string detail = failed.empty() ? "all hand and identity cases exact" : "failed:";
    for (const auto& f : failed) detail += " " + f + ";";
    return {failed.empty(), detail};
}

// 10 -----------------------------------------------------------------------

Verdict end_to_end_determinism() {
    app::PipelineConfig cfg = app::load_config(std::string(SELGAN_CONFIG_DIR) + "/default.json");
    const fs::path dir = fs::temp_directory_path() / ("selgan_accept_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    cfg.output_dir = (dir / "run").string();
    const std::vector<std::string> files = {app::files::synthetic, app::files::report, app::files::manifest};
    std::vector<std::string> first;
    {
        app::Pipeline p(cfg);
        p.run_all();
        for (const auto& f : files) first.push_back(app::read_file(p.path(f)));
    }
    fs::remove_all(dir / "run");
    std::vector<std::string> second;
    {
        app::Pipeline p(cfg);
        p.run_all();
        for (const auto& f : files) second.push_back(app::read_file(p.path(f)));
    }
    fs::remove_all(dir);
    std::string detail;
    bool ok = true;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const bool same = first[i] == second[i];
        ok = ok && same;
        detail += files[i] + (same ? " identical (" : " DIFFERS (") + std::to_string(first[i].size()) + " bytes) ";
    }
    return {ok, detail};
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    const app::Dataset toy = app::load_dataset(std::string(SELGAN_DATA_DIR) + "/toy.csv",
                                               std::string(SELGAN_DATA_DIR) + "/toy.schema.json");
    struct Criterion {
        int id;
        const char* name;
        double limit_s; // 0: no stated limit
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "gradient correctness", 60, gradients},
        {2, "transform round-trip", 10, round_trip},
        {3, "oracle properties", 60, oracle_properties},
        {4, "estimator structure", 60, estimator_structure},
        {5, "estimator convergence", 600, estimator_convergence},
        {6, "cond vector exactness", 0, cond_vector},
        {7, "ablation equivalence", 0, [&] { return ablation_equivalence(toy); }},
        {8, "directional selectivity improvement", 3600, [&] { return selectivity_improvement(toy); }},
        {9, "metric oracles", 60, metric_oracles},
        {10, "end-to-end determinism", 0, end_to_end_determinism},
    };
    std::FILE* log = std::fopen(SELGAN_ACCEPTANCE_LOG, only.empty() ? "w" : "a");
    int failures = 0;
    for (const Criterion& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.limit_s == 0 || secs < c.limit_s;
        const bool pass = v.pass && in_time;
        failures += !pass;
        for (std::FILE* out : {stdout, log}) {
            if (!out) continue;
            std::fprintf(out, "[%s] criterion %d: %s | %s | %.1f s%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                         v.detail.c_str(), secs, in_time ? "" : " (over time limit)");
            std::fflush(out);
        }
    }
    if (log) std::fclose(log);
    return failures == 0 ? 0 : 1;
}
