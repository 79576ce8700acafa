#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "selgan/nn/tape.hpp"
#include "selgan/random.hpp"

namespace selgan::nn {

enum class Activation { identity, relu, leaky_relu, tanh, sigmoid };

inline constexpr double kLeakySlope = 0.2;

inline std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

inline Activation activation_from_string(std::string_view s) {
    if (s == "identity") return Activation::identity;
    if (s == "relu") return Activation::relu;
    if (s == "leaky_relu") return Activation::leaky_relu;
    if (s == "tanh") return Activation::tanh;
    if (s == "sigmoid") return Activation::sigmoid;
    throw FormatError("unknown activation '" + std::string(s) + "'");
}

inline double activate(Activation a, double x) {
    switch (a) {
    case Activation::identity: return x;
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::leaky_relu: return x > 0.0 ? x : kLeakySlope * x;
    case Activation::tanh: return std::tanh(x);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

inline Var activate(Activation a, Var x) {
    switch (a) {
    case Activation::identity: return x;
    case Activation::relu: return ops::relu(x);
    case Activation::leaky_relu: return ops::leaky_relu(x, kLeakySlope);
    case Activation::tanh: return ops::tanh(x);
    case Activation::sigmoid: return ops::sigmoid(x);
    }
    return x;
}

/// Fully connected layer: activation(input * weight + bias).
struct DenseLayer {
    Parameter weight; // in x out
    Parameter bias;   // 1 x out
    Activation activation = Activation::identity;

    Index in_dim() const { return weight.value.rows(); }
    Index out_dim() const { return weight.value.cols(); }
};

/// Glorot-uniform weights, zero bias.
inline DenseLayer make_dense(const std::string& name, Index in, Index out, Activation act, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(in, out);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    return DenseLayer{Parameter(name + ".weight", std::move(w)),
                      Parameter(name + ".bias", Matrix::Zero(1, out)), act};
}

inline Matrix dense_forward(const DenseLayer& layer, const Matrix& input) {
    if (input.cols() != layer.in_dim()) {
        throw ShapeError("dense_forward: input has " + std::to_string(input.cols()) +
                         " columns, layer expects " + std::to_string(layer.in_dim()));
    }
    Matrix out = input * layer.weight.value;
    out.rowwise() += layer.bias.value.row(0);
    if (layer.activation != Activation::identity) {
        const Activation a = layer.activation;
        out = out.unaryExpr([a](double x) { return activate(a, x); });
    }
    return out;
}

inline Var dense_forward(Tape& tape, DenseLayer& layer, Var input) {
    if (input.cols() != layer.in_dim()) {
        throw ShapeError("dense_forward: input has " + std::to_string(input.cols()) +
                         " columns, layer expects " + std::to_string(layer.in_dim()));
    }
    Var z = ops::add_row(ops::matmul(input, tape.param(layer.weight)), tape.param(layer.bias));
    return activate(layer.activation, z);
}

/// Weights enter the tape as constants: gradients reach `input` only.
inline Var dense_forward_frozen(Tape& tape, const DenseLayer& layer, Var input) {
    if (input.cols() != layer.in_dim()) {
        throw ShapeError("dense_forward: input has " + std::to_string(input.cols()) +
                         " columns, layer expects " + std::to_string(layer.in_dim()));
    }
    Var z = ops::add_row(ops::matmul(input, tape.constant(layer.weight.value)), tape.constant(layer.bias.value));
    return activate(layer.activation, z);
}

/// Stack of dense layers.
class Mlp {
public:
    Mlp() = default;

    /// widths = {in, h1, ..., out}; hidden layers use `hidden`, the last uses `output`.
    Mlp(const std::string& name, const std::vector<Index>& widths, Activation hidden, Activation output,
        Rng& rng) {
        if (widths.size() < 2) throw ArgumentError("Mlp needs at least an input and an output width");
        for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
            const bool last = i + 2 == widths.size();
            layers_.push_back(make_dense(name + "." + std::to_string(i), widths[i], widths[i + 1],
                                         last ? output : hidden, rng));
        }
    }

    Index in_dim() const { return layers_.front().in_dim(); }
    Index out_dim() const { return layers_.back().out_dim(); }
    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    Matrix infer(const Matrix& input) const {
        Matrix h = input;
        for (const DenseLayer& l : layers_) h = dense_forward(l, h);
        return h;
    }

    Var forward(Tape& tape, Var input) {
        Var h = input;
        for (DenseLayer& l : layers_) h = dense_forward(tape, l, h);
        return h;
    }

    Var forward_frozen(Tape& tape, Var input) const {
        Var h = input;
        for (const DenseLayer& l : layers_) h = dense_forward_frozen(tape, l, h);
        return h;
    }

    /// Records d(sum of outputs)/d(input) for a 1-output net as tape ops, so
    /// the result can itself be differentiated w.r.t. the weights (needed by
    /// gradient penalties). Returns a Var shaped like `input`.
    Var input_gradient(Tape& tape, Var input) {
        if (out_dim() != 1) throw ShapeError("input_gradient requires a single-output network");
        std::vector<Var> pre;
        std::vector<Var> weights;
        Var h = input;
        for (DenseLayer& l : layers_) {
            Var w = tape.param(l.weight);
            Var z = ops::add_row(ops::matmul(h, w), tape.param(l.bias));
            pre.push_back(z);
            weights.push_back(w);
            h = activate(l.activation, z);
        }
        Var delta = tape.constant(Matrix::Ones(input.rows(), 1));
        for (std::size_t i = layers_.size(); i-- > 0;) {
            delta = ops::hadamard(delta, activation_derivative(tape, layers_[i].activation, pre[i]));
            delta = ops::matmul_nt(delta, weights[i]);
        }
        return delta;
    }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> out;
        for (DenseLayer& l : layers_) {
            out.push_back(&l.weight);
            out.push_back(&l.bias);
        }
        return out;
    }

private:
    static Var activation_derivative(Tape& tape, Activation a, Var z) {
        const Matrix& zv = z.value();
        switch (a) {
        case Activation::identity: return tape.constant(Matrix::Ones(zv.rows(), zv.cols()));
        case Activation::relu:
            return tape.constant(zv.unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; }));
        case Activation::leaky_relu:
            return tape.constant(zv.unaryExpr([](double x) { return x > 0.0 ? 1.0 : kLeakySlope; }));
        case Activation::tanh: {
            Var y = ops::tanh(z);
            return ops::add_scalar(ops::scale(ops::square(y), -1.0), 1.0);
        }
        case Activation::sigmoid: {
            Var y = ops::sigmoid(z);
            return ops::sub(y, ops::square(y));
        }
        }
        return z;
    }

    std::vector<DenseLayer> layers_;
};

inline void zero_grad(const std::vector<Parameter*>& params) {
    for (Parameter* p : params) p->zero_grad();
}

} // namespace selgan::nn
