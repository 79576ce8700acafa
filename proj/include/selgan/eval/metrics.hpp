#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>
#include <unordered_set>
#include <vector>

#include "selgan/table.hpp"
#include "selgan/transform/schema.hpp"

namespace selgan::eval {

using encoding::ColumnKind;
using encoding::TableSchema;

namespace detail {
/// Byte-exact key for a row: doubles by bit pattern, labels verbatim.
inline std::string row_key(const std::vector<Cell>& row) {
    std::string key;
    for (const Cell& c : row) {
        if (const double* d = std::get_if<double>(&c)) {
            const auto bits = std::bit_cast<std::uint64_t>(*d);
            key.push_back('d');
            key.append(reinterpret_cast<const char*>(&bits), sizeof bits);
        } else {
            const std::string& s = std::get<std::string>(c);
            const auto len = static_cast<std::uint64_t>(s.size());
            key.push_back('s');
            key.append(reinterpret_cast<const char*>(&len), sizeof len);
            key += s;
        }
    }
    return key;
}
} // namespace detail

/// Percentage of rows that repeat an earlier row exactly.
inline double repeated_row_rate(const Table& t) {
    if (t.num_rows() == 0) throw ArgumentError("repeated_row_rate of an empty table");
    std::unordered_set<std::string> seen;
    for (const auto& r : t.rows) seen.insert(detail::row_key(r));
    const double n = static_cast<double>(t.num_rows());
    return 100.0 * (n - static_cast<double>(seen.size())) / n;
}

struct CdfPoint {
    double value = 0.0;
    double origin = 0.0; // F_origin(value)
    double synth = 0.0;  // F_synth(value)
};

/// Both empirical CDFs evaluated on the merged, sorted set of distinct values.
inline std::vector<CdfPoint> cdf_export(std::vector<double> origin, std::vector<double> synth) {
    if (origin.empty() || synth.empty()) throw ArgumentError("cdf_export needs two non-empty columns");
    std::sort(origin.begin(), origin.end());
    std::sort(synth.begin(), synth.end());
    std::vector<double> grid(origin);
    grid.insert(grid.end(), synth.begin(), synth.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    std::vector<CdfPoint> out;
    out.reserve(grid.size());
    const auto frac = [](const std::vector<double>& v, double x) {
        return static_cast<double>(std::upper_bound(v.begin(), v.end(), x) - v.begin()) /
               static_cast<double>(v.size());
    };
    for (double x : grid) out.push_back({x, frac(origin, x), frac(synth, x)});
    return out;
}

inline std::vector<double> numeric_values(const Table& t, const std::string& column) {
    const std::size_t c = t.column_index(column);
    std::vector<double> out;
    for (const auto& r : t.rows) {
        const double* d = std::get_if<double>(&r[c]);
        if (!d) throw TypeError("column '" + column + "' is not numeric");
        out.push_back(*d);
    }
    return out;
}

inline std::vector<CdfPoint> cdf_export(const Table& origin, const Table& synth, const std::string& column) {
    return cdf_export(numeric_values(origin, column), numeric_values(synth, column));
}

inline double max_cdf_gap(const std::vector<CdfPoint>& cdf) {
    double gap = 0.0;
    for (const CdfPoint& p : cdf) gap = std::max(gap, std::abs(p.origin - p.synth));
    return gap;
}

inline std::string cdf_to_csv(const std::vector<CdfPoint>& cdf) {
    std::string out = "value,origin_cdf,synth_cdf\n";
    for (const CdfPoint& p : cdf) {
        out += format_double(p.value) + "," + format_double(p.origin) + "," + format_double(p.synth) + "\n";
    }
    return out;
}

/// Pearson correlation. Returns 0 and sets *degenerate when either column is
/// constant.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y, bool* degenerate = nullptr) {
    if (x.size() != y.size() || x.empty()) throw ArgumentError("pearson needs two equal, non-empty columns");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

/// Sum over continuous column pairs i < j of |rho_origin - rho_synth|.
/// Constant columns count as rho = 0; their names land in `warnings`.
inline double pairwise_correlation_difference(const Table& origin, const Table& synth, const TableSchema& schema,
                                              std::vector<std::string>* warnings = nullptr) {
    const auto names = schema.names();
    if (origin.columns != names || synth.columns != names) {
        throw ArgumentError("both tables must have the schema's columns in schema order");
    }
    std::vector<std::size_t> cont;
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (schema.columns[c].kind == ColumnKind::continuous) cont.push_back(c);
    }
    if (cont.size() < 2) throw ArgumentError("correlation difference needs at least two continuous columns");
    double total = 0.0;
    for (std::size_t a = 0; a < cont.size(); ++a) {
        for (std::size_t b = a + 1; b < cont.size(); ++b) {
            const std::string& na = names[cont[a]];
            const std::string& nb = names[cont[b]];
            bool dego = false, degs = false;
            const double ro = pearson(numeric_values(origin, na), numeric_values(origin, nb), &dego);
            const double rs = pearson(numeric_values(synth, na), numeric_values(synth, nb), &degs);
            if (warnings && (dego || degs)) {
                warnings->push_back("constant column in pair (" + na + ", " + nb + "); correlation taken as 0");
            }
            total += std::abs(ro - rs);
        }
    }
    return total;
}

} // namespace selgan::eval
