#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "selgan/nn/tensor.hpp"

namespace selgan::nn {

/// A named trainable array. Gradients accumulate into `grad` on every
/// Tape::backward call until zero_grad() is called.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, Matrix v)
        : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }
    double scalar() const { return value()(0, 0); }
    Tape& tape() const { return *tape_; }
    std::size_t id() const { return id_; }

private:
    friend class Tape;
    Var(Tape* t, std::size_t id) : tape_(t), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Explicit reverse-mode computation tape. Nodes are appended in evaluation
/// order, so a reverse sweep over the node list is a valid topological order.
class Tape {
public:
    using Backward = std::function<void(Tape&, std::size_t self)>;

    Tape() { nodes_.reserve(256); }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value) {
        if (!all_finite(value)) throw NumericError("tape constant contains non-finite entries");
        return push(std::move(value), false, nullptr, nullptr);
    }

    Var constant_scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

    /// Leaf that reads a parameter's value; backward adds into param.grad.
    Var param(Parameter& p) { return push(p.value, true, nullptr, &p); }

    /// Records an op result. `parents` decide whether the node needs a gradient.
    Var record(Matrix value, std::initializer_list<Var> parents, Backward back) {
        bool needs = false;
        for (const Var& v : parents) needs = needs || nodes_[v.id_].needs_grad;
        return push(std::move(value), needs, needs ? std::move(back) : Backward{}, nullptr);
    }

    Var record(Matrix value, std::span<const Var> parents, Backward back) {
        bool needs = false;
        for (const Var& v : parents) needs = needs || nodes_[v.id_].needs_grad;
        return push(std::move(value), needs, needs ? std::move(back) : Backward{}, nullptr);
    }

    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    const Matrix& value(Var v) const { return nodes_[v.id_].value; }
    bool needs_grad(Var v) const { return nodes_[v.id_].needs_grad; }

    /// Gradient of the last backward() root with respect to `v`. Zero-filled
    /// for nodes the loss does not depend on.
    Matrix grad(Var v) const {
        const Node& n = nodes_[v.id_];
        if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
        return n.grad;
    }

    const Matrix& upstream(std::size_t self) const { return nodes_[self].grad; }

    void accumulate(Var v, const Matrix& g) {
        Node& n = nodes_[v.id_];
        if (!n.needs_grad) return;
        if (n.grad.size() == 0) {
            n.grad = g;
        } else {
            n.grad += g;
        }
    }

    /// Reverse sweep from a 1x1 loss node. Parameter leaves add their
    /// gradient into Parameter::grad.
    void backward(Var loss) {
        const Node& root = nodes_[loss.id_];
        if (root.value.rows() != 1 || root.value.cols() != 1) {
            throw ShapeError("backward requires a 1x1 loss, got " + shape_str(root.value));
        }
        if (!root.value.allFinite()) throw NumericError("backward called on a non-finite loss");
        for (Node& n : nodes_) n.grad.resize(0, 0);
        nodes_[loss.id_].grad = Matrix::Ones(1, 1);
        for (std::size_t i = loss.id_ + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.needs_grad || n.grad.size() == 0) continue;
            if (n.back) n.back(*this, i);
            if (n.param != nullptr) n.param->grad += nodes_[i].grad;
        }
    }

    std::size_t size() const { return nodes_.size(); }

    Var handle(std::size_t id) { return Var(this, id); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool needs_grad = false;
        Backward back;
        Parameter* param = nullptr;
    };

    Var push(Matrix value, bool needs, Backward back, Parameter* p) {
        nodes_.push_back(Node{std::move(value), Matrix(), needs, std::move(back), p});
        return Var(this, nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// ---------------------------------------------------------------------------
// Differentiable ops. All take Vars recorded on the same tape.
// ---------------------------------------------------------------------------
namespace ops {

namespace detail {
inline void same_shape(const Var& a, const Var& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " +
                         shape_str(b.value()));
    }
}
} // namespace detail

inline Var matmul(Var a, Var b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + shape_str(a.value()) + " * " + shape_str(b.value()));
    }
    Matrix out = a.value() * b.value();
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
        const Matrix& g = t.upstream(self);
        if (t.needs_grad(a)) t.accumulate(a, g * b.value().transpose());
        if (t.needs_grad(b)) t.accumulate(b, a.value().transpose() * g);
    });
}

/// a * b^T
inline Var matmul_nt(Var a, Var b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_nt: " + shape_str(a.value()) + " * T(" + shape_str(b.value()) + ")");
    }
    Matrix out = a.value() * b.value().transpose();
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
        const Matrix& g = t.upstream(self);
        if (t.needs_grad(a)) t.accumulate(a, g * b.value());
        if (t.needs_grad(b)) t.accumulate(b, g.transpose() * a.value());
    });
}

inline Var add(Var a, Var b) {
    detail::same_shape(a, b, "add");
    return a.tape().record(a.value() + b.value(), {a, b}, [a, b](Tape& t, std::size_t self) {
        t.accumulate(a, t.upstream(self));
        t.accumulate(b, t.upstream(self));
    });
}

inline Var sub(Var a, Var b) {
    detail::same_shape(a, b, "sub");
    return a.tape().record(a.value() - b.value(), {a, b}, [a, b](Tape& t, std::size_t self) {
        t.accumulate(a, t.upstream(self));
        if (t.needs_grad(b)) t.accumulate(b, -t.upstream(self));
    });
}

inline Var hadamard(Var a, Var b) {
    detail::same_shape(a, b, "hadamard");
    Matrix out = a.value().cwiseProduct(b.value());
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
        const Matrix& g = t.upstream(self);
        if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
        if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
    });
}

/// Broadcast-add a 1xN row to every row of a.
inline Var add_row(Var a, Var row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw ShapeError("add_row: " + shape_str(a.value()) + " + " + shape_str(row.value()));
    }
    Matrix out = a.value().rowwise() + row.value().row(0);
    return a.tape().record(std::move(out), {a, row}, [a, row](Tape& t, std::size_t self) {
        const Matrix& g = t.upstream(self);
        t.accumulate(a, g);
        if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
    });
}

/// Broadcast-multiply every row of a by a 1xN row.
inline Var mul_row(Var a, Var row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw ShapeError("mul_row: " + shape_str(a.value()) + " * " + shape_str(row.value()));
    }
    Matrix out = a.value().array().rowwise() * row.value().row(0).array();
    return a.tape().record(std::move(out), {a, row}, [a, row](Tape& t, std::size_t self) {
        const Matrix& g = t.upstream(self);
        if (t.needs_grad(a)) {
            Matrix ga = g.array().rowwise() * row.value().row(0).array();
            t.accumulate(a, ga);
        }
        if (t.needs_grad(row)) t.accumulate(row, g.cwiseProduct(a.value()).colwise().sum());
    });
}

/// Scale row i of a by col(i, 0).
inline Var mul_col(Var a, Var col) {
    if (col.cols() != 1 || col.rows() != a.rows()) {
        throw ShapeError("mul_col: " + shape_str(a.value()) + " * " + shape_str(col.value()));
    }
    Matrix out = a.value().array().colwise() * col.value().col(0).array();
    return a.tape().record(std::move(out), {a, col}, [a, col](Tape& t, std::size_t self) {
        const Matrix& g = t.upstream(self);
        if (t.needs_grad(a)) {
            Matrix ga = g.array().colwise() * col.value().col(0).array();
            t.accumulate(a, ga);
        }
        if (t.needs_grad(col)) t.accumulate(col, g.cwiseProduct(a.value()).rowwise().sum());
    });
}

/// Divide row i of a by col(i, 0).
inline Var div_col(Var a, Var col) {
    if (col.cols() != 1 || col.rows() != a.rows()) {
        throw ShapeError("div_col: " + shape_str(a.value()) + " / " + shape_str(col.value()));
    }
    Matrix out = a.value().array().colwise() / col.value().col(0).array();
    return a.tape().record(std::move(out), {a, col}, [a, col](Tape& t, std::size_t self) {
        const Matrix& g = t.upstream(self);
        const auto c = col.value().col(0).array();
        if (t.needs_grad(a)) {
            Matrix ga = g.array().colwise() / c;
            t.accumulate(a, ga);
        }
        if (t.needs_grad(col)) {
            Matrix gc = -(g.cwiseProduct(a.value()).rowwise().sum().array() / c.square()).matrix();
            t.accumulate(col, gc);
        }
    });
}

inline Var scale(Var a, double s) {
    return a.tape().record(a.value() * s, {a}, [a, s](Tape& t, std::size_t self) {
        t.accumulate(a, t.upstream(self) * s);
    });
}

inline Var add_scalar(Var a, double s) {
    Matrix out = a.value().array() + s;
    return a.tape().record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
        t.accumulate(a, t.upstream(self));
    });
}

namespace detail {
/// Elementwise op given value function f and derivative df(x, f(x)).
template <class F, class DF>
Var unary(Var a, F f, DF df) {
    Matrix out = a.value().unaryExpr(f);
    return a.tape().record(std::move(out), {a}, [a, df](Tape& t, std::size_t self) {
        const Matrix& x = a.value();
        const Matrix& y = t.value(self);
        Matrix d = x.binaryExpr(y, df);
        t.accumulate(a, t.upstream(self).cwiseProduct(d));
    });
}
} // namespace detail

inline Var relu(Var a) {
    return detail::unary(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Var leaky_relu(Var a, double slope) {
    return detail::unary(
        a, [slope](double x) { return x > 0.0 ? x : slope * x; },
        [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

inline Var tanh(Var a) {
    return detail::unary(
        a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

inline Var sigmoid(Var a) {
    return detail::unary(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

inline double softplus_value(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline Var softplus(Var a) {
    return detail::unary(
        a, [](double x) { return softplus_value(x); },
        [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

inline Var log1p(Var a) {
    return detail::unary(
        a, [](double x) { return std::log1p(x); }, [](double x, double) { return 1.0 / (1.0 + x); });
}

inline Var square(Var a) {
    return detail::unary(
        a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

inline Var sqrt(Var a) {
    return detail::unary(
        a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

inline Var sum(Var a) {
    Matrix out = Matrix::Constant(1, 1, a.value().sum());
    return a.tape().record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
        t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), t.upstream(self)(0, 0)));
    });
}

inline Var mean(Var a) {
    const double n = static_cast<double>(a.value().size());
    if (n == 0) throw ShapeError("mean of an empty matrix");
    return scale(sum(a), 1.0 / n);
}

/// Bx1 column of per-row sums.
inline Var row_sum(Var a) {
    Matrix out = a.value().rowwise().sum();
    return a.tape().record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
        Matrix g = t.upstream(self).col(0).replicate(1, a.cols());
        t.accumulate(a, g);
    });
}

/// Sums consecutive column groups of `width`: Bx(G*width) -> BxG.
inline Var group_sum(Var a, Index width) {
    if (width <= 0 || a.cols() % width != 0) {
        throw ShapeError("group_sum: width " + std::to_string(width) + " does not divide " +
                         std::to_string(a.cols()));
    }
    const Index groups = a.cols() / width;
    Matrix out(a.rows(), groups);
    for (Index gi = 0; gi < groups; ++gi) {
        out.col(gi) = a.value().middleCols(gi * width, width).rowwise().sum();
    }
    return a.tape().record(std::move(out), {a}, [a, width, groups](Tape& t, std::size_t self) {
        const Matrix& g = t.upstream(self);
        Matrix ga(a.rows(), a.cols());
        for (Index gi = 0; gi < groups; ++gi) {
            ga.middleCols(gi * width, width) = g.col(gi).replicate(1, width);
        }
        t.accumulate(a, ga);
    });
}

/// Row-wise running sum across columns.
inline Var cumsum_cols(Var a) {
    Matrix out = a.value();
    for (Index j = 1; j < out.cols(); ++j) out.col(j) += out.col(j - 1);
    return a.tape().record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
        Matrix g = t.upstream(self);
        for (Index j = g.cols() - 2; j >= 0; --j) g.col(j) += g.col(j + 1);
        t.accumulate(a, g);
    });
}

inline Var slice_cols(Var a, Index start, Index width) {
    if (start < 0 || width < 0 || start + width > a.cols()) {
        throw ShapeError("slice_cols: [" + std::to_string(start) + ", +" + std::to_string(width) +
                         ") out of " + std::to_string(a.cols()));
    }
    Matrix out = a.value().middleCols(start, width);
    return a.tape().record(std::move(out), {a}, [a, start, width](Tape& t, std::size_t self) {
        Matrix g = Matrix::Zero(a.rows(), a.cols());
        g.middleCols(start, width) = t.upstream(self);
        t.accumulate(a, g);
    });
}

inline Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols of nothing");
    const Index rows = parts.front().rows();
    Index cols = 0;
    for (const Var& p : parts) {
        if (p.rows() != rows) throw ShapeError("concat_cols: row count mismatch");
        cols += p.cols();
    }
    Matrix out(rows, cols);
    Index off = 0;
    for (const Var& p : parts) {
        out.middleCols(off, p.cols()) = p.value();
        off += p.cols();
    }
    return parts.front().tape().record(
        std::move(out), std::span<const Var>(parts), [parts](Tape& t, std::size_t self) {
            const Matrix& g = t.upstream(self);
            Index o = 0;
            for (const Var& p : parts) {
                if (t.needs_grad(p)) t.accumulate(p, g.middleCols(o, p.cols()));
                o += p.cols();
            }
        });
}

inline Var softmax_rows(Var a) {
    Matrix out = a.value();
    for (Index i = 0; i < out.rows(); ++i) {
        const double m = out.row(i).maxCoeff();
        out.row(i) = (out.row(i).array() - m).exp();
        out.row(i) /= out.row(i).sum();
    }
    return a.tape().record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
        const Matrix& y = t.value(self);
        const Matrix& g = t.upstream(self);
        Matrix dot = g.cwiseProduct(y).rowwise().sum();
        Matrix ga = y.cwiseProduct((g.array().colwise() - dot.col(0).array()).matrix());
        t.accumulate(a, ga);
    });
}

inline Var log_softmax_rows(Var a) {
    Matrix out = a.value();
    for (Index i = 0; i < out.rows(); ++i) {
        const double m = out.row(i).maxCoeff();
        const double lse = m + std::log((out.row(i).array() - m).exp().sum());
        out.row(i).array() -= lse;
    }
    return a.tape().record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
        const Matrix& y = t.value(self);
        const Matrix& g = t.upstream(self);
        Matrix gsum = g.rowwise().sum();
        Matrix soft = y.array().exp();
        Matrix ga = g - (soft.array().colwise() * gsum.col(0).array()).matrix();
        t.accumulate(a, ga);
    });
}

} // namespace ops
} // namespace selgan::nn
