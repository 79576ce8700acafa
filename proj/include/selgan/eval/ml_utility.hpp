#pragma once

#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "selgan/eval/learners.hpp"
#include "selgan/random.hpp"

namespace selgan::eval {

enum class TaskKind { classification, regression };

inline std::string to_string(TaskKind k) { return k == TaskKind::classification ? "classification" : "regression"; }

inline TaskKind task_kind_from_string(const std::string& s) {
    if (s == "classification") return TaskKind::classification;
    if (s == "regression") return TaskKind::regression;
    throw ConfigError("unknown task kind '" + s + "'");
}

struct TaskSpec {
    std::string label;
    TaskKind kind = TaskKind::classification;
};

/// Unused metrics stay 0: accuracy/f1 for classification, mse/r2 for regression.
struct Scores {
    double accuracy = 0.0;
    double f1 = 0.0;
    double mse = 0.0;
    double r2 = 0.0;
};

struct LearnerResult {
    std::string learner;
    Scores origin; // trained on the original training split
    Scores synth;  // trained on the synthetic table
};

struct MlUtilityReport {
    TaskSpec task;
    std::vector<LearnerResult> learners;
};

/// Seeded 75/25 split of row indices: {train, test}.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                                   std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t train = (3 * n) / 4;
    return {std::vector<std::size_t>(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(train)),
            std::vector<std::size_t>(idx.begin() + static_cast<std::ptrdiff_t>(train), idx.end())};
}

inline Table take_rows(const Table& t, const std::vector<std::size_t>& idx) {
    Table out;
    out.columns = t.columns;
    for (std::size_t i : idx) out.rows.push_back(t.rows[i]);
    return out;
}

namespace detail {

inline std::vector<int> class_labels(const Table& t, const encoding::ColumnMeta& meta, std::size_t c) {
    std::vector<int> y;
    for (const auto& r : t.rows) y.push_back(static_cast<int>(meta.category_index(std::get<std::string>(r[c]))));
    return y;
}

inline std::vector<double> real_labels(const Table& t, const encoding::ColumnMeta& meta, std::size_t c) {
    std::vector<double> y;
    for (const auto& r : t.rows) {
        y.push_back(meta.kind == ColumnKind::ordinal
                        ? static_cast<double>(meta.category_index(std::get<std::string>(r[c])) + 1)
                        : std::get<double>(r[c]));
    }
    return y;
}

inline Scores classify_scores(const std::vector<int>& truth, const std::vector<int>& pred) {
    Scores s;
    s.accuracy = accuracy(truth, pred);
    s.f1 = macro_f1(truth, pred);
    return s;
}

inline Scores regress_scores(const std::vector<double>& truth, const std::vector<double>& pred) {
    Scores s;
    s.mse = mean_squared_error(truth, pred);
    s.r2 = r2_score(truth, pred);
    return s;
}

} // namespace detail

/// Train on the original training split and on the synthetic table, test both
/// on the same original test split.
inline MlUtilityReport ml_utility(const Table& origin, const Table& synth, const TableSchema& schema,
                                  const TaskSpec& task, std::uint64_t seed) {
    const auto names = schema.names();
    const auto it = std::find(names.begin(), names.end(), task.label);
    if (it == names.end()) throw ArgumentError("label column '" + task.label + "' is not in the schema");
    if (origin.columns != names || synth.columns != names) {
        throw ArgumentError("both tables must have the schema's columns in schema order");
    }
    const auto c = static_cast<std::size_t>(it - names.begin());
    const encoding::ColumnMeta& meta = schema.columns[c];
    if (task.kind == TaskKind::classification && !meta.is_categorical()) {
        throw ArgumentError("classification label '" + task.label + "' must be categorical");
    }
    if (task.kind == TaskKind::regression && meta.kind == ColumnKind::nominal) {
        throw ArgumentError("regression label '" + task.label + "' must be continuous or ordinal");
    }
    if (origin.num_rows() < 4) throw ArgumentError("ml_utility needs at least 4 original rows");
    if (synth.num_rows() == 0) throw ArgumentError("ml_utility needs a non-empty synthetic table");

    const FeatureEncoder enc(origin, schema, c);
    const auto [train_idx, test_idx] = split_indices(origin.num_rows(), seed);
    const Table train = take_rows(origin, train_idx);
    const Table test = take_rows(origin, test_idx);
    const Matrix x_test = enc.encode(test);
    const Matrix x_sets[2] = {enc.encode(train), enc.encode(synth)};
    const Table* y_sets[2] = {&train, &synth};

    MlUtilityReport report{task, {}};
    if (task.kind == TaskKind::classification) {
        const int classes = static_cast<int>(meta.categories.size());
        const auto y_test = detail::class_labels(test, meta, c);
        LearnerResult logreg{"logistic_regression", {}, {}}, knn{"knn", {}, {}};
        for (int s = 0; s < 2; ++s) {
            const auto y = detail::class_labels(*y_sets[s], meta, c);
            LogisticRegression lr;
            lr.fit(x_sets[s], y, classes);
            Knn k(5);
            k.fit(x_sets[s], std::vector<double>(y.begin(), y.end()));
            (s == 0 ? logreg.origin : logreg.synth) = detail::classify_scores(y_test, lr.predict(x_test));
            (s == 0 ? knn.origin : knn.synth) = detail::classify_scores(y_test, k.classify(x_test));
        }
        report.learners = {logreg, knn};
    } else {
        const auto y_test = detail::real_labels(test, meta, c);
        LearnerResult linreg{"linear_regression", {}, {}}, knn{"knn", {}, {}};
        for (int s = 0; s < 2; ++s) {
            const auto y = detail::real_labels(*y_sets[s], meta, c);
            LinearRegression lr;
            lr.fit(x_sets[s], y);
            Knn k(5);
            k.fit(x_sets[s], y);
            (s == 0 ? linreg.origin : linreg.synth) = detail::regress_scores(y_test, lr.predict(x_test));
            (s == 0 ? knn.origin : knn.synth) = detail::regress_scores(y_test, k.regress(x_test));
        }
        report.learners = {linreg, knn};
    }
    return report;
}

inline nlohmann::json scores_to_json(const Scores& s, TaskKind kind) {
    if (kind == TaskKind::classification) return {{"accuracy", s.accuracy}, {"f1", s.f1}};
    return {{"mse", s.mse}, {"r2", s.r2}};
}

inline nlohmann::json to_json(const MlUtilityReport& r) {
    nlohmann::json learners = nlohmann::json::array();
    for (const LearnerResult& l : r.learners) {
        learners.push_back({{"learner", l.learner},
                            {"origin", scores_to_json(l.origin, r.task.kind)},
                            {"synth", scores_to_json(l.synth, r.task.kind)}});
    }
    return {{"label", r.task.label}, {"kind", to_string(r.task.kind)}, {"learners", learners}};
}

} // namespace selgan::eval
