#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "selgan/nn/tensor.hpp"
#include "selgan/table.hpp"
#include "selgan/transform/schema.hpp"

namespace selgan::eval {

using nn::Index;
using nn::Matrix;
using encoding::ColumnKind;
using encoding::TableSchema;

/// Numeric features for the built-in learners, fitted once on the original
/// table: continuous columns and ordinal ranks standardized, nominal one-hot.
class FeatureEncoder {
public:
    FeatureEncoder(const Table& origin, const TableSchema& schema, std::size_t label_column)
        : schema_(schema), label_(label_column) {
        for (std::size_t c = 0; c < schema.size(); ++c) {
            Stat s;
            if (c == label_ || schema.columns[c].kind == ColumnKind::nominal) {
                stats_.push_back(s);
                continue;
            }
            double sum = 0.0, sq = 0.0;
            for (const auto& r : origin.rows) {
                const double v = scalar(r, c);
                sum += v;
                sq += v * v;
            }
            const double n = std::max<double>(1.0, static_cast<double>(origin.num_rows()));
            s.mean = sum / n;
            const double var = sq / n - s.mean * s.mean;
            s.std = var > 1e-12 ? std::sqrt(var) : 1.0;
            stats_.push_back(s);
        }
    }

    Index width() const {
        Index w = 0;
        for (std::size_t c = 0; c < schema_.size(); ++c) {
            if (c == label_) continue;
            w += schema_.columns[c].kind == ColumnKind::nominal
                     ? static_cast<Index>(schema_.columns[c].categories.size())
                     : 1;
        }
        return w;
    }

    Matrix encode(const Table& t) const {
        Matrix x = Matrix::Zero(static_cast<Index>(t.num_rows()), width());
        for (std::size_t i = 0; i < t.num_rows(); ++i) {
            Index off = 0;
            for (std::size_t c = 0; c < schema_.size(); ++c) {
                if (c == label_) continue;
                const auto& meta = schema_.columns[c];
                if (meta.kind == ColumnKind::nominal) {
                    const std::size_t k = meta.category_index(std::get<std::string>(t.rows[i][c]));
                    x(static_cast<Index>(i), off + static_cast<Index>(k)) = 1.0;
                    off += static_cast<Index>(meta.categories.size());
                } else {
                    x(static_cast<Index>(i), off) = (scalar(t.rows[i], c) - stats_[c].mean) / stats_[c].std;
                    off += 1;
                }
            }
        }
        return x;
    }

private:
    struct Stat {
        double mean = 0.0;
        double std = 1.0;
    };

    double scalar(const std::vector<Cell>& row, std::size_t c) const {
        if (schema_.columns[c].kind == ColumnKind::ordinal) {
            return static_cast<double>(schema_.columns[c].category_index(std::get<std::string>(row[c])) + 1);
        }
        return std::get<double>(row[c]);
    }

    TableSchema schema_;
    std::size_t label_;
    std::vector<Stat> stats_;
};

/// Multinomial logistic regression by full-batch gradient descent with a
/// small L2 penalty.
class LogisticRegression {
public:
    struct Options {
        int iterations = 500;
        double lr = 0.5;
        double l2 = 1e-4;
    };

    LogisticRegression() = default;
    explicit LogisticRegression(Options o) : opt_(o) {}

    void fit(const Matrix& x, const std::vector<int>& y, int classes) {
        const Index n = x.rows();
        if (n == 0) throw ArgumentError("cannot fit on zero rows");
        classes_ = classes;
        w_ = Matrix::Zero(x.cols(), classes);
        b_ = Matrix::Zero(1, classes);
        Matrix onehot = Matrix::Zero(n, classes);
        for (Index i = 0; i < n; ++i) onehot(i, y[static_cast<std::size_t>(i)]) = 1.0;
        for (int it = 0; it < opt_.iterations; ++it) {
            Matrix p = probabilities(x);
            Matrix g = (p - onehot) / static_cast<double>(n);
            w_ -= opt_.lr * (x.transpose() * g + opt_.l2 * w_);
            b_ -= opt_.lr * g.colwise().sum();
        }
    }

    std::vector<int> predict(const Matrix& x) const {
        const Matrix p = probabilities(x);
        std::vector<int> out(static_cast<std::size_t>(x.rows()));
        for (Index i = 0; i < x.rows(); ++i) {
            Index best = 0;
            p.row(i).maxCoeff(&best);
            out[static_cast<std::size_t>(i)] = static_cast<int>(best);
        }
        return out;
    }

private:
    Matrix probabilities(const Matrix& x) const {
        Matrix z = x * w_;
        z.rowwise() += b_.row(0);
        for (Index i = 0; i < z.rows(); ++i) {
            z.row(i).array() -= z.row(i).maxCoeff();
            z.row(i) = z.row(i).array().exp();
            z.row(i) /= z.row(i).sum();
        }
        return z;
    }

    Options opt_;
    int classes_ = 0;
    Matrix w_, b_;
};

/// Ordinary least squares with intercept (minimum-norm solution when the
/// design is rank deficient).
class LinearRegression {
public:
    void fit(const Matrix& x, const std::vector<double>& y) {
        if (x.rows() == 0) throw ArgumentError("cannot fit on zero rows");
        Matrix a(x.rows(), x.cols() + 1);
        a << x, Matrix::Ones(x.rows(), 1);
        Eigen::VectorXd target(x.rows());
        for (Index i = 0; i < x.rows(); ++i) target(i) = y[static_cast<std::size_t>(i)];
        coef_ = a.completeOrthogonalDecomposition().solve(target);
    }

    std::vector<double> predict(const Matrix& x) const {
        std::vector<double> out(static_cast<std::size_t>(x.rows()));
        const Index d = x.cols();
        for (Index i = 0; i < x.rows(); ++i) {
            out[static_cast<std::size_t>(i)] = x.row(i).dot(coef_.head(d).transpose()) + coef_(d);
        }
        return out;
    }

private:
    Eigen::VectorXd coef_;
};

/// k-nearest neighbours, Euclidean; distance ties go to the lower row index.
class Knn {
public:
    explicit Knn(std::size_t k = 5) : k_(k) {}

    void fit(const Matrix& x, std::vector<double> y) {
        if (x.rows() == 0) throw ArgumentError("cannot fit on zero rows");
        x_ = x;
        y_ = std::move(y);
    }

    std::vector<std::size_t> neighbours(const Eigen::Ref<const nn::RowVector>& q) const {
        std::vector<std::pair<double, std::size_t>> d(static_cast<std::size_t>(x_.rows()));
        for (Index r = 0; r < x_.rows(); ++r) d[static_cast<std::size_t>(r)] = {(x_.row(r) - q).squaredNorm(), r};
        const std::size_t k = std::min(k_, d.size());
        std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < k; ++i) out.push_back(d[i].second);
        return out;
    }

    /// Majority vote; ties go to the class of the nearest tied neighbour.
    std::vector<int> classify(const Matrix& x) const {
        std::vector<int> out;
        for (Index i = 0; i < x.rows(); ++i) {
            const auto nb = neighbours(x.row(i));
            std::vector<std::pair<int, int>> votes; // (class, count)
            for (std::size_t j : nb) {
                const int c = static_cast<int>(y_[j]);
                auto it = std::find_if(votes.begin(), votes.end(), [c](const auto& v) { return v.first == c; });
                if (it == votes.end()) votes.push_back({c, 1});
                else ++it->second;
            }
            int best = votes.front().first, count = votes.front().second;
            for (const auto& [c, n] : votes) {
                if (n > count) {
                    best = c;
                    count = n;
                }
            }
            out.push_back(best);
        }
        return out;
    }

    std::vector<double> regress(const Matrix& x) const {
        std::vector<double> out;
        for (Index i = 0; i < x.rows(); ++i) {
            double s = 0.0;
            const auto nb = neighbours(x.row(i));
            for (std::size_t j : nb) s += y_[j];
            out.push_back(s / static_cast<double>(nb.size()));
        }
        return out;
    }

private:
    std::size_t k_;
    Matrix x_;
    std::vector<double> y_;
};

inline double accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
    if (truth.empty() || truth.size() != pred.size()) throw ArgumentError("accuracy needs equal, non-empty inputs");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i] ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

/// Macro F1 over every class present in truth or predictions.
inline double macro_f1(const std::vector<int>& truth, const std::vector<int>& pred) {
    if (truth.empty() || truth.size() != pred.size()) throw ArgumentError("macro_f1 needs equal, non-empty inputs");
    std::vector<int> classes(truth);
    classes.insert(classes.end(), pred.begin(), pred.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    double total = 0.0;
    for (int c : classes) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (pred[i] == c && truth[i] == c) ++tp;
            else if (pred[i] == c) ++fp;
            else if (truth[i] == c) ++fn;
        }
        total += 2.0 * tp / (2.0 * tp + fp + fn);
    }
    return total / static_cast<double>(classes.size());
}

inline double mean_squared_error(const std::vector<double>& truth, const std::vector<double>& pred) {
    if (truth.empty() || truth.size() != pred.size()) throw ArgumentError("mse needs equal, non-empty inputs");
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) s += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    return s / static_cast<double>(truth.size());
}

/// Coefficient of determination; 0 when the truth is constant.
inline double r2_score(const std::vector<double>& truth, const std::vector<double>& pred) {
    const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
    double ss_tot = 0.0;
    for (double v : truth) ss_tot += (v - mean) * (v - mean);
    if (ss_tot == 0.0) return 0.0;
    return 1.0 - mean_squared_error(truth, pred) * static_cast<double>(truth.size()) / ss_tot;
}

} // namespace selgan::eval
