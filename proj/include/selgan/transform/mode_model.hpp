#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "selgan/error.hpp"
#include "selgan/random.hpp"

namespace selgan::encoding {

/// Gaussian mixture describing the modes of one continuous column.
struct ModeModel {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> stds;

    std::size_t mode_count() const { return weights.size(); }
};

struct ModeFitOptions {
    std::size_t max_modes = 10;
    double prune_threshold = 0.005;
    double sigma_floor = 1e-4;
    int max_iterations = 100;
    double tolerance = 1e-6; // on mean per-sample log-likelihood
    std::uint64_t seed = 0;
};

inline constexpr double kAlphaClip = 4.0;

namespace detail {

inline double log_normal_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double log_sum_exp(const std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

/// k-means++ seeding in one dimension.
inline std::vector<double> kmeanspp_centers(const std::vector<double>& x, std::size_t k, Rng& rng) {
    std::vector<double> centers;
    std::uniform_int_distribution<std::size_t> first(0, x.size() - 1);
    centers.push_back(x[first(rng)]);
    std::vector<double> d2(x.size());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (double c : centers) best = std::min(best, (x[i] - c) * (x[i] - c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) break;
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng);
        std::size_t pick = x.size() - 1;
        for (std::size_t i = 0; i < x.size(); ++i) {
            target -= d2[i];
            if (target <= 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(x[pick]);
    }
    return centers;
}

struct EmFit {
    ModeModel model;
    double log_likelihood = -std::numeric_limits<double>::infinity();
};

inline EmFit run_em(const std::vector<double>& x, std::size_t k, double floor, const ModeFitOptions& opt,
                    Rng& rng) {
    const std::size_t n = x.size();
    std::vector<double> centers = kmeanspp_centers(x, k, rng);
    k = centers.size();

    // Initial hard assignment to the nearest center.
    ModeModel m;
    m.weights.assign(k, 0.0);
    m.means.assign(k, 0.0);
    m.stds.assign(k, 0.0);
    std::vector<double> sq(k, 0.0);
    for (double v : x) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j) {
            if (std::abs(v - centers[j]) < std::abs(v - centers[best])) best = j;
        }
        m.weights[best] += 1.0;
        m.means[best] += v;
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (m.weights[j] > 0) m.means[j] /= m.weights[j];
        else m.means[j] = centers[j];
    }
    for (double v : x) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j) {
            if (std::abs(v - centers[j]) < std::abs(v - centers[best])) best = j;
        }
        sq[best] += (v - m.means[best]) * (v - m.means[best]);
    }
    for (std::size_t j = 0; j < k; ++j) {
        m.stds[j] = std::max(floor, m.weights[j] > 1 ? std::sqrt(sq[j] / m.weights[j]) : floor);
        m.weights[j] = std::max(m.weights[j], 1.0) / static_cast<double>(n + k);
    }
    const double wsum = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
    for (double& w : m.weights) w /= wsum;

    std::vector<double> resp(n * k);
    std::vector<double> lp(k);
    double prev = -std::numeric_limits<double>::infinity();
    double ll = prev;
    for (int it = 0; it < opt.max_iterations; ++it) {
        // E step
        ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                lp[j] = std::log(m.weights[j]) + log_normal_pdf(x[i], m.means[j], m.stds[j]);
            }
            const double lse = log_sum_exp(lp);
            ll += lse;
            for (std::size_t j = 0; j < k; ++j) resp[i * k + j] = std::exp(lp[j] - lse);
        }
        // M step
        for (std::size_t j = 0; j < k; ++j) {
            double nk = 0.0, mu = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nk += resp[i * k + j];
                mu += resp[i * k + j] * x[i];
            }
            if (nk < 1e-10) {
                m.weights[j] = 1e-12;
                continue;
            }
            mu /= nk;
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) var += resp[i * k + j] * (x[i] - mu) * (x[i] - mu);
            m.weights[j] = nk / static_cast<double>(n);
            m.means[j] = mu;
            m.stds[j] = std::max(floor, std::sqrt(var / nk));
        }
        if (std::abs(ll - prev) / static_cast<double>(n) < opt.tolerance) break;
        prev = ll;
    }
    // Log-likelihood of the final parameters.
    ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            lp[j] = std::log(m.weights[j]) + log_normal_pdf(x[i], m.means[j], m.stds[j]);
        }
        ll += log_sum_exp(lp);
    }
    return {std::move(m), ll};
}

inline void prune_and_sort(ModeModel& m, double threshold) {
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < m.mode_count(); ++j) {
        if (m.weights[j] >= threshold) keep.push_back(j);
    }
    if (keep.empty()) {
        keep.push_back(static_cast<std::size_t>(
            std::max_element(m.weights.begin(), m.weights.end()) - m.weights.begin()));
    }
    std::sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) { return m.means[a] < m.means[b]; });
    ModeModel out;
    double total = 0.0;
    for (std::size_t j : keep) total += m.weights[j];
    for (std::size_t j : keep) {
        out.weights.push_back(m.weights[j] / total);
        out.means.push_back(m.means[j]);
        out.stds.push_back(m.stds[j]);
    }
    m = std::move(out);
}

} // namespace detail

/// Fits the modes of a continuous column: EM for every component count up
/// to max_modes, the count with the lowest BIC wins, then components whose
/// weight falls under prune_threshold are dropped and weights renormalized.
inline ModeModel fit_mode_model(const std::vector<double>& values, const ModeFitOptions& opt = {}) {
    if (values.empty()) throw SchemaError("cannot fit modes of an empty column");
    for (double v : values) {
        if (!std::isfinite(v)) throw DataError("non-finite value in continuous column");
    }
    if (opt.max_modes == 0) throw ArgumentError("max_modes must be positive");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo == *hi) return ModeModel{{1.0}, {*lo}, {opt.sigma_floor}};

    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    const double floor = std::max(opt.sigma_floor, 1e-3 * sd);

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t distinct =
        static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());

    Rng rng(opt.seed);
    detail::EmFit best;
    double best_bic = std::numeric_limits<double>::infinity();
    const std::size_t kmax = std::min(opt.max_modes, distinct);
    for (std::size_t k = 1; k <= kmax; ++k) {
        detail::EmFit fit = detail::run_em(values, k, floor, opt, rng);
        const double params = 3.0 * static_cast<double>(fit.model.mode_count()) - 1.0;
        const double bic = -2.0 * fit.log_likelihood + params * std::log(n);
        if (bic < best_bic) {
            best_bic = bic;
            best = std::move(fit);
        }
    }
    detail::prune_and_sort(best.model, opt.prune_threshold);
    return best.model;
}

/// Index of the mode with the highest posterior responsibility for `value`.
inline std::size_t select_mode(double value, const ModeModel& m) {
    std::size_t best = 0;
    double best_lp = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m.mode_count(); ++j) {
        const double lp = std::log(m.weights[j]) + detail::log_normal_pdf(value, m.means[j], m.stds[j]);
        if (lp > best_lp) {
            best_lp = lp;
            best = j;
        }
    }
    return best;
}

struct NormalizedValue {
    double alpha = 0.0;
    std::vector<double> beta; // one-hot over modes
    std::size_t mode = 0;
};

inline NormalizedValue normalize_continuous(double value, const ModeModel& m, double clip = kAlphaClip) {
    if (!std::isfinite(value)) throw DataError("cannot normalize a non-finite value");
    if (m.mode_count() == 0) throw SchemaError("mode model is not fitted");
    NormalizedValue out;
    out.mode = select_mode(value, m);
    out.alpha = std::clamp((value - m.means[out.mode]) / m.stds[out.mode], -clip, clip);
    out.beta.assign(m.mode_count(), 0.0);
    out.beta[out.mode] = 1.0;
    return out;
}

inline double denormalize_continuous(double alpha, std::size_t mode, const ModeModel& m) {
    return alpha * m.stds[mode] + m.means[mode];
}

} // namespace selgan::encoding
