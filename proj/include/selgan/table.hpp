#pragma once

#include <charconv>
#include <string>
#include <variant>
#include <vector>

#include "selgan/error.hpp"

namespace selgan {

/// A raw cell: a real for continuous columns, a category label otherwise.
using Cell = std::variant<double, std::string>;

/// Raw (untransformed) table, row-major.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    std::size_t num_rows() const { return rows.size(); }
    std::size_t num_cols() const { return columns.size(); }

    std::size_t column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return i;
        }
        throw ArgumentError("no column named '" + name + "'");
    }

    std::vector<double> numeric_column(std::size_t c) const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) {
            if (!std::holds_alternative<double>(r[c])) {
                throw DataError("column '" + columns[c] + "' holds a label where a number was expected");
            }
            out.push_back(std::get<double>(r[c]));
        }
        return out;
    }
};

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string cell_to_string(const Cell& c) {
    if (const double* d = std::get_if<double>(&c)) return format_double(*d);
    return std::get<std::string>(c);
}

} // namespace selgan
