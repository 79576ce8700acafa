#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "selgan/nn/tape.hpp"

namespace selgan::estimator {

using nn::Index;
using nn::Matrix;
using nn::Tape;
using nn::Var;

/// Position of t on a knot sequence: ŷ = (1 - w)·p[lo] + w·p[lo + 1]
/// (evaluated with std::lerp, which is exact at knots and monotone in w).
struct KnotPosition {
    Index lo = 0;
    double w = 0.0;
    bool clamped = false;
};

/// Finds i with tau[i] <= t < tau[i + 1]. t outside [0, tau.back()) is
/// clamped to the nearest endpoint and flagged.
inline KnotPosition locate(std::span<const double> tau, double t) {
    const Index k = static_cast<Index>(tau.size());
    if (k < 2) throw ShapeError("interpolation needs at least two knots");
    if (t < tau.front()) return {0, 0.0, true};
    if (t >= tau.back()) return {k - 2, 1.0, t > tau.back()};
    const auto it = std::upper_bound(tau.begin(), tau.end(), t);
    const Index hi = static_cast<Index>(it - tau.begin());
    const Index lo = hi - 1;
    const double w = (t - tau[static_cast<std::size_t>(lo)]) /
                     (tau[static_cast<std::size_t>(hi)] - tau[static_cast<std::size_t>(lo)]);
    return {lo, w, false};
}

struct Interpolated {
    double value = 0.0;
    bool clamped = false;
};

/// Piecewise-linear interpolation of the control points (tau, p) at t.
inline Interpolated interpolate(std::span<const double> tau, std::span<const double> p, double t) {
    if (tau.size() != p.size()) throw ShapeError("tau and p lengths differ");
    const KnotPosition k = locate(tau, t);
    const auto lo = static_cast<std::size_t>(k.lo);
    return {std::lerp(p[lo], p[lo + 1], k.w), k.clamped};
}

/// Row-wise interpolation on the tape: tau and p are BxK, thresholds has B
/// entries, result is Bx1. Gradients flow into both tau and p; for clamped
/// thresholds the value is an endpoint of p and tau receives no gradient.
inline Var interpolate(Var tau, Var p, const std::vector<double>& thresholds,
                       std::vector<char>* clamped = nullptr) {
    if (tau.rows() != p.rows() || tau.cols() != p.cols()) throw ShapeError("tau and p shapes differ");
    if (static_cast<Index>(thresholds.size()) != tau.rows()) {
        throw ShapeError("interpolate: " + std::to_string(thresholds.size()) + " thresholds for " +
                         std::to_string(tau.rows()) + " rows");
    }
    const Matrix& tv = tau.value();
    const Matrix& pv = p.value();
    const Index b = tv.rows();
    std::vector<KnotPosition> pos(static_cast<std::size_t>(b));
    Matrix out(b, 1);
    if (clamped) clamped->assign(static_cast<std::size_t>(b), 0);
    for (Index r = 0; r < b; ++r) {
        const auto row = std::span<const double>(tv.data() + r * tv.cols(), static_cast<std::size_t>(tv.cols()));
        KnotPosition k = locate(row, thresholds[static_cast<std::size_t>(r)]);
        out(r, 0) = std::lerp(pv(r, k.lo), pv(r, k.lo + 1), k.w);
        if (clamped && k.clamped) (*clamped)[static_cast<std::size_t>(r)] = 1;
        pos[static_cast<std::size_t>(r)] = k;
    }
    return tau.tape().record(std::move(out), {tau, p}, [tau, p, pos](Tape& t, std::size_t self) {
        const Matrix& g = t.upstream(self);
        const Matrix& tv = tau.value();
        const Matrix& pv = p.value();
        Matrix gt = Matrix::Zero(tv.rows(), tv.cols());
        Matrix gp = Matrix::Zero(pv.rows(), pv.cols());
        for (Index r = 0; r < tv.rows(); ++r) {
            const KnotPosition& k = pos[static_cast<std::size_t>(r)];
            const double up = g(r, 0);
            gp(r, k.lo) += up * (1.0 - k.w);
            gp(r, k.lo + 1) += up * k.w;
            if (k.clamped) continue;
            const double t0 = tv(r, k.lo), t1 = tv(r, k.lo + 1);
            const double span = t1 - t0;
            const double dp = pv(r, k.lo + 1) - pv(r, k.lo);
            // w = (t - t0) / (t1 - t0)
            gt(r, k.lo) += up * dp * (k.w - 1.0) / span;
            gt(r, k.lo + 1) += up * dp * (-k.w / span);
        }
        if (t.needs_grad(tau)) t.accumulate(tau, gt);
        if (t.needs_grad(p)) t.accumulate(p, gp);
    });
}

} // namespace selgan::estimator
