#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "selgan/oracle/selectivity.hpp"
#include "selgan/table.hpp"

namespace selgan::oracle {

inline constexpr int kWorkloadVersion = 1;

/// First line: JSON header. Then one line per query: x_1,...,x_d,t[,y].
inline void write_workload(std::ostream& os, const Workload& w) {
    nlohmann::json header{{"format", "selgan-workload"},
                          {"version", kWorkloadVersion},
                          {"distance", kDistanceName},
                          {"t_max", w.t_max},
                          {"source", to_string(w.source)},
                          {"dim", w.objects.cols()},
                          {"count", w.size()},
                          {"labeled", w.labeled()}};
    os << header.dump() << '\n';
    for (std::size_t i = 0; i < w.size(); ++i) {
        const Index r = static_cast<Index>(i);
        for (Index c = 0; c < w.objects.cols(); ++c) os << format_double(w.objects(r, c)) << ',';
        os << format_double(w.thresholds[i]);
        if (w.labeled()) os << ',' << format_double(w.labels[i]);
        os << '\n';
    }
}

inline Workload read_workload(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("workload file is empty");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad workload header: ") + e.what());
    }
    if (h.value("format", "") != "selgan-workload") throw FormatError("not a workload file");
    if (h.value("version", 0) != kWorkloadVersion) throw FormatError("unsupported workload version");
    if (h.value("distance", "") != kDistanceName) {
        throw FormatError("unsupported distance '" + h.value("distance", "") + "'");
    }
    Workload w;
    w.t_max = h.at("t_max").get<double>();
    w.source = workload_source_from_string(h.at("source").get<std::string>());
    const auto dim = h.at("dim").get<Index>();
    const auto count = h.at("count").get<std::size_t>();
    const bool labeled = h.at("labeled").get<bool>();
    const Index fields = dim + 1 + (labeled ? 1 : 0);
    w.objects.resize(static_cast<Index>(count), dim);
    w.thresholds.resize(count);
    if (labeled) w.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(is, line)) throw FormatError("workload ends after " + std::to_string(i) + " records");
        const char* p = line.data();
        const char* end = p + line.size();
        for (Index f = 0; f < fields; ++f) {
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc()) throw FormatError("bad number in workload record " + std::to_string(i));
            if (f < dim) w.objects(static_cast<Index>(i), f) = v;
            else if (f == dim) w.thresholds[i] = v;
            else w.labels[i] = v;
            p = next;
            if (f + 1 < fields) {
                if (p == end || *p != ',') throw FormatError("short workload record " + std::to_string(i));
                ++p;
            }
        }
        if (p != end) throw FormatError("extra fields in workload record " + std::to_string(i));
    }
    return w;
}

inline void save_workload(const std::string& path, const Workload& w) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write '" + path + "'");
    write_workload(out, w);
}

inline Workload load_workload(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");
    return read_workload(in);
}

} // namespace selgan::oracle
