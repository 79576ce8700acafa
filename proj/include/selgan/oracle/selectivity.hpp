#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "selgan/error.hpp"
#include "selgan/nn/tensor.hpp"
#include "selgan/parallel.hpp"
#include "selgan/random.hpp"

namespace selgan::oracle {

using nn::Index;
using nn::Matrix;
using nn::RowVector;

enum class WorkloadSource { train, test };

inline std::string to_string(WorkloadSource s) { return s == WorkloadSource::train ? "train" : "test"; }

inline WorkloadSource workload_source_from_string(const std::string& s) {
    if (s == "train") return WorkloadSource::train;
    if (s == "test") return WorkloadSource::test;
    throw FormatError("unknown workload source '" + s + "'");
}

struct Query {
    RowVector x;
    double t = 0.0;
    std::optional<double> y;
};

/// Queries stored column-wise: objects.row(i), thresholds[i], labels[i].
/// `labels` is empty for an unlabeled workload.
struct Workload {
    Matrix objects;
    std::vector<double> thresholds;
    std::vector<double> labels;
    double t_max = 0.0;
    WorkloadSource source = WorkloadSource::train;

    std::size_t size() const { return thresholds.size(); }
    bool labeled() const { return labels.size() == thresholds.size(); }

    Query query(std::size_t i) const {
        Query q{objects.row(static_cast<Index>(i)), thresholds[i], std::nullopt};
        if (labeled()) q.y = labels[i];
        return q;
    }
};

/// Only Euclidean distance is implemented; the name is recorded in workload
/// and checkpoint headers.
inline constexpr const char* kDistanceName = "euclidean";

inline void check_threshold(double t) {
    if (!(t >= 0.0)) throw ArgumentError("selectivity threshold must be >= 0, got " + std::to_string(t));
}

/// |{o in data : ||x - o|| <= t}|. Compared on squared distances.
inline double exact_selectivity(const RowVector& x, double t, const Matrix& data) {
    check_threshold(t);
    if (x.cols() != data.cols()) {
        throw ShapeError("query width " + std::to_string(x.cols()) + " does not match data width " +
                         std::to_string(data.cols()));
    }
    const double t2 = t * t;
    std::size_t count = 0;
    for (Index r = 0; r < data.rows(); ++r) {
        if ((data.row(r) - x).squaredNorm() <= t2) ++count;
    }
    return static_cast<double>(count);
}

/// Labels every (objects.row(i), thresholds[i]) pair against `data`.
inline std::vector<double> label_queries(const Matrix& objects, const std::vector<double>& thresholds,
                                         const Matrix& data) {
    if (static_cast<std::size_t>(objects.rows()) != thresholds.size()) {
        throw ShapeError("query object count does not match threshold count");
    }
    if (objects.rows() > 0 && objects.cols() != data.cols()) {
        throw ShapeError("query width " + std::to_string(objects.cols()) + " does not match data width " +
                         std::to_string(data.cols()));
    }
    for (double t : thresholds) check_threshold(t);
    std::vector<double> out(thresholds.size());
    parallel_for(thresholds.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const double t2 = thresholds[i] * thresholds[i];
            const auto x = objects.row(static_cast<Index>(i));
            std::size_t count = 0;
            for (Index r = 0; r < data.rows(); ++r) {
                if ((data.row(r) - x).squaredNorm() <= t2) ++count;
            }
            out[i] = static_cast<double>(count);
        }
    }, 8);
    return out;
}

inline void label(Workload& w, const Matrix& data) { w.labels = label_queries(w.objects, w.thresholds, data); }

struct TmaxOptions {
    std::size_t pairs = 1000;
    double percentile = 0.9;
};

/// Empirical percentile of pairwise distances over randomly sampled pairs.
inline double estimate_t_max(const Matrix& data, Rng& rng, const TmaxOptions& opt = {}) {
    if (data.rows() == 0) throw DataError("cannot estimate t_max on empty data");
    if (data.rows() == 1 || opt.pairs == 0) return 1.0;
    std::uniform_int_distribution<Index> pick(0, data.rows() - 1);
    std::vector<double> d;
    d.reserve(opt.pairs);
    for (std::size_t k = 0; k < opt.pairs; ++k) {
        const Index i = pick(rng);
        Index j = pick(rng);
        while (j == i) j = pick(rng);
        d.push_back((data.row(i) - data.row(j)).norm());
    }
    const auto at = static_cast<std::size_t>(std::ceil(opt.percentile * static_cast<double>(d.size()))) - 1;
    const std::size_t idx = std::min(at, d.size() - 1);
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(idx), d.end());
    // All sampled rows identical: any positive radius saturates.
    return d[idx] > 0.0 ? d[idx] : 1.0;
}

/// Uniform on (0, t_max].
inline double sample_threshold(double t_max, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return t_max * (1.0 - u(rng));
}

inline Workload build_train_workload(const Matrix& data, std::size_t thresholds_per_object, double t_max,
                                     Rng& rng) {
    if (data.rows() == 0) throw DataError("cannot build a workload from empty data");
    if (!(t_max > 0.0)) throw ArgumentError("t_max must be positive");
    if (thresholds_per_object == 0) throw ArgumentError("thresholds_per_object must be positive");
    Workload w;
    w.source = WorkloadSource::train;
    w.t_max = t_max;
    const Index n = data.rows();
    const Index q = n * static_cast<Index>(thresholds_per_object);
    w.objects.resize(q, data.cols());
    w.thresholds.resize(static_cast<std::size_t>(q));
    for (Index r = 0, i = 0; r < n; ++r) {
        for (std::size_t k = 0; k < thresholds_per_object; ++k, ++i) {
            w.objects.row(i) = data.row(r);
            w.thresholds[static_cast<std::size_t>(i)] = sample_threshold(t_max, rng);
        }
    }
    label(w, data);
    return w;
}

/// Query objects drawn from `synthetic` (without replacement when enough rows
/// exist, with replacement otherwise), labeled against `data`.
inline Workload build_test_workload(const Matrix& synthetic, const Matrix& data, std::size_t num_queries,
                                    double t_max, Rng& rng) {
    if (!(t_max > 0.0)) throw ArgumentError("t_max must be positive");
    if (synthetic.cols() != data.cols()) {
        throw ConfigError("synthetic rows have width " + std::to_string(synthetic.cols()) + ", data has " +
                          std::to_string(data.cols()));
    }
    if (num_queries > 0 && synthetic.rows() == 0) throw DataError("no synthetic rows to draw queries from");
    std::vector<Index> picks(num_queries);
    const auto m = static_cast<std::size_t>(synthetic.rows());
    if (num_queries <= m) {
        std::vector<Index> all(m);
        for (std::size_t i = 0; i < m; ++i) all[i] = static_cast<Index>(i);
        // Partial Fisher-Yates.
        for (std::size_t i = 0; i < num_queries; ++i) {
            std::uniform_int_distribution<std::size_t> u(i, m - 1);
            std::swap(all[i], all[u(rng)]);
            picks[i] = all[i];
        }
    } else {
        std::uniform_int_distribution<Index> u(0, synthetic.rows() - 1);
        for (Index& p : picks) p = u(rng);
    }
    Workload w;
    w.source = WorkloadSource::test;
    w.t_max = t_max;
    w.objects.resize(static_cast<Index>(num_queries), data.cols());
    w.thresholds.resize(num_queries);
    for (std::size_t i = 0; i < num_queries; ++i) {
        w.objects.row(static_cast<Index>(i)) = synthetic.row(picks[i]);
        w.thresholds[i] = sample_threshold(t_max, rng);
    }
    label(w, data);
    return w;
}

} // namespace selgan::oracle
