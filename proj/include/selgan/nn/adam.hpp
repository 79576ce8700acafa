#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "selgan/nn/tape.hpp"

namespace selgan::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Defaults for the generator and critic nets.
inline constexpr AdamConfig kGanAdam{2e-4, 0.5, 0.9, 1e-8};
/// Defaults for the selectivity estimator.
inline constexpr AdamConfig kEstimatorAdam{1e-3, 0.9, 0.999, 1e-8};

struct AdamState {
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::int64_t step_count = 0;
    AdamConfig config;

    AdamState() = default;
    AdamState(std::span<Parameter* const> params, AdamConfig cfg) : config(cfg) {
        for (const Parameter* p : params) {
            first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
            second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        }
    }
};

/// One bias-corrected Adam update from each parameter's accumulated grad.
/// Rejects the whole step, leaving params and state untouched, when any
/// gradient is non-finite.
inline void adam_step(std::span<Parameter* const> params, AdamState& state) {
    if (params.size() != state.first_moment.size()) {
        throw ShapeError("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Parameter& p = *params[i];
        if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
            state.first_moment[i].rows() != p.value.rows() || state.first_moment[i].cols() != p.value.cols()) {
            throw ShapeError("adam_step: shape mismatch for parameter '" + p.name + "'");
        }
        if (!p.grad.allFinite()) throw NumericError("adam_step: non-finite gradient for '" + p.name + "'");
    }
    const AdamConfig& c = state.config;
    ++state.step_count;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        Matrix& m = state.first_moment[i];
        Matrix& v = state.second_moment[i];
        m = c.beta1 * m + (1.0 - c.beta1) * p.grad;
        v = c.beta2 * v + (1.0 - c.beta2) * p.grad.cwiseAbs2();
        p.value.array() -= c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
    }
}

/// Owns a parameter list and its Adam state.
class Adam {
public:
    Adam() = default;
    Adam(std::vector<Parameter*> params, AdamConfig cfg)
        : params_(std::move(params)), state_(params_, cfg) {}

    void zero_grad() {
        for (Parameter* p : params_) p->zero_grad();
    }
    void step() { adam_step(params_, state_); }

    const AdamState& state() const { return state_; }
    AdamState& state() { return state_; }
    const std::vector<Parameter*>& params() const { return params_; }

private:
    std::vector<Parameter*> params_;
    AdamState state_;
};

} // namespace selgan::nn
