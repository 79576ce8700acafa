#pragma once

#include <vector>

#include "selgan/estimator/train.hpp"
#include "selgan/oracle/selectivity.hpp"
#include "selgan/transform/transformer.hpp"

namespace selgan::eval {

struct SelEvalOptions {
    std::size_t num_queries = 1000;
    int repeats = 10;
    std::uint64_t seed = 0;
};

struct SelEvalResult {
    double mean = 0.0;
    std::vector<double> per_repeat;
};

/// Query objects drawn from the synthetic rows, labels counted on the
/// original data, predictions from the frozen estimator. Repeat r draws its
/// workload from derive_seed(seed, r).
inline SelEvalResult selectivity_mse_eval(const nn::Matrix& synth_rows, const nn::Matrix& origin_rows,
                                          estimator::SelEstimator& est, const SelEvalOptions& opt = {}) {
    if (synth_rows.cols() != est.input_dim() || origin_rows.cols() != est.input_dim()) {
        throw ConfigError("selectivity evaluation: synthetic width " + std::to_string(synth_rows.cols()) +
                          ", original width " + std::to_string(origin_rows.cols()) + ", estimator width " +
                          std::to_string(est.input_dim()));
    }
    if (opt.repeats <= 0 || opt.num_queries == 0) throw ArgumentError("selectivity evaluation needs queries");
    SelEvalResult out;
    for (int r = 0; r < opt.repeats; ++r) {
        Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(r)));
        const oracle::Workload w =
            oracle::build_test_workload(synth_rows, origin_rows, opt.num_queries, est.t_max(), rng);
        out.per_repeat.push_back(estimator::selectivity_mse(est, w));
        out.mean += out.per_repeat.back();
    }
    out.mean /= static_cast<double>(opt.repeats);
    return out;
}

inline SelEvalResult selectivity_mse_eval(const Table& synth, const nn::Matrix& origin_rows,
                                          const encoding::TableSchema& schema, estimator::SelEstimator& est,
                                          const SelEvalOptions& opt = {}) {
    return selectivity_mse_eval(encoding::transform(synth, schema).rows, origin_rows, est, opt);
}

} // namespace selgan::eval
