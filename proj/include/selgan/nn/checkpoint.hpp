#pragma once

#include <fstream>
#include <span>
#include <string>

#include <json.hpp>

#include "selgan/nn/adam.hpp"
#include "selgan/nn/dense.hpp"

namespace selgan::nn {

using json = nlohmann::json;

inline constexpr int kParamFormatVersion = 1;

inline json matrix_to_json(const Matrix& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["data"] = std::vector<double>(m.data(), m.data() + m.size());
    return j;
}

inline Matrix matrix_from_json(const json& j) {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Index>(data.size()) != rows * cols) {
        throw FormatError("matrix blob has " + std::to_string(data.size()) + " values for shape " +
                          std::to_string(rows) + "x" + std::to_string(cols));
    }
    Matrix m(rows, cols);
    std::copy(data.begin(), data.end(), m.data());
    return m;
}

/// Named parameter arrays with shapes, versioned.
inline json save_parameters(std::span<Parameter* const> params) {
    json j;
    j["format"] = "selgan-params";
    j["version"] = kParamFormatVersion;
    json arr = json::array();
    for (const Parameter* p : params) {
        json e = matrix_to_json(p->value);
        e["name"] = p->name;
        arr.push_back(std::move(e));
    }
    j["params"] = std::move(arr);
    return j;
}

/// Loads into existing parameters by position; names and shapes must match.
inline void load_parameters(const json& j, std::span<Parameter* const> params) {
    if (j.value("format", "") != "selgan-params") throw FormatError("not a parameter blob");
    if (j.at("version").get<int>() != kParamFormatVersion) {
        throw FormatError("unsupported parameter blob version " + j.at("version").dump());
    }
    const json& arr = j.at("params");
    if (arr.size() != params.size()) {
        throw FormatError("parameter blob has " + std::to_string(arr.size()) + " arrays, model expects " +
                          std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const json& e = arr[i];
        Parameter& p = *params[i];
        if (e.at("name").get<std::string>() != p.name) {
            throw FormatError("parameter " + std::to_string(i) + " is '" + e.at("name").get<std::string>() +
                              "', expected '" + p.name + "'");
        }
        Matrix m = matrix_from_json(e);
        if (m.rows() != p.value.rows() || m.cols() != p.value.cols()) {
            throw FormatError("parameter '" + p.name + "' has shape " + shape_str(m) + ", expected " +
                              shape_str(p.value));
        }
        p.value = std::move(m);
        p.zero_grad();
    }
}

/// Architecture plus weights of an Mlp, enough to rebuild it from scratch.
inline json save_mlp(Mlp& net) {
    json layers = json::array();
    for (const DenseLayer& l : net.layers()) {
        layers.push_back({{"in", l.in_dim()}, {"out", l.out_dim()}, {"activation", to_string(l.activation)}});
    }
    return {{"layers", layers}, {"weights", save_parameters(net.parameters())}};
}

inline Mlp load_mlp(const json& j, const std::string& name) {
    const json& layers = j.at("layers");
    if (layers.empty()) throw FormatError("network '" + name + "' has no layers");
    std::vector<Index> widths{layers.front().at("in").get<Index>()};
    for (const json& l : layers) widths.push_back(l.at("out").get<Index>());
    Rng rng(0);
    Mlp net(name, widths, Activation::identity, Activation::identity, rng);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        net.layers()[i].activation = activation_from_string(layers[i].at("activation").get<std::string>());
    }
    load_parameters(j.at("weights"), net.parameters());
    return net;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write '" + path + "'");
    out << j.dump(1) << '\n';
}

} // namespace selgan::nn
