#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

#include "selgan/io/csv.hpp"
#include "selgan/nn/checkpoint.hpp"
#include "selgan/table.hpp"
#include "selgan/transform/schema.hpp"

namespace selgan::app {

using encoding::ColumnKind;
using encoding::TableSchema;

struct Dataset {
    Table table;
    TableSchema schema;
};

inline std::string location(std::size_t row, const std::string& column) {
    return "row " + std::to_string(row + 1) + ", column '" + column + "'";
}

inline double parse_real(const std::string& text, std::size_t row, const std::string& column) {
    std::size_t b = text.find_first_not_of(" \t");
    std::size_t e = text.find_last_not_of(" \t");
    if (b == std::string::npos) throw IngestionError("empty numeric cell at " + location(row, column));
    const char* first = text.data() + b;
    const char* last = text.data() + e + 1;
    if (*first == '+') ++first;
    double v = 0.0;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
        throw IngestionError("cannot parse '" + text + "' as a real at " + location(row, column));
    }
    return v;
}

/// Builds a typed table in schema column order from parsed CSV text.
inline Table table_from_csv(const io::CsvDocument& doc, TableSchema& schema) {
    std::vector<std::size_t> source(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
        const std::string& name = schema.columns[c].name;
        auto it = std::find(doc.header.begin(), doc.header.end(), name);
        if (it == doc.header.end()) throw IngestionError("schema column '" + name + "' is missing from the CSV header");
        source[c] = static_cast<std::size_t>(it - doc.header.begin());
    }
    for (const std::string& h : doc.header) {
        bool known = false;
        for (const auto& col : schema.columns) known = known || col.name == h;
        if (!known) throw IngestionError("CSV column '" + h + "' is not declared in the schema");
    }
    Table t;
    t.columns = schema.names();
    t.rows.reserve(doc.rows.size());
    for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        std::vector<Cell> row;
        row.reserve(schema.size());
        for (std::size_t c = 0; c < schema.size(); ++c) {
            auto& meta = schema.columns[c];
            const std::string& text = doc.rows[r][source[c]];
            if (meta.kind == ColumnKind::continuous) {
                row.emplace_back(parse_real(text, r, meta.name));
                continue;
            }
            const bool declared = std::find(meta.categories.begin(), meta.categories.end(), text) !=
                                  meta.categories.end();
            if (!declared) {
                if (meta.kind == ColumnKind::ordinal || meta.categories.size() > 0) {
                    throw IngestionError("undeclared category '" + text + "' at " + location(r, meta.name));
                }
            }
            row.emplace_back(text);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Reads a CSV and its schema file. Nominal columns that declare no
/// categories are filled in from the data.
inline Dataset load_dataset(const std::string& csv_path, const std::string& schema_path) {
    TableSchema schema = encoding::schema_from_json(nn::read_json_file(schema_path));
    Dataset ds;
    io::CsvDocument doc = io::read_csv(csv_path);
    ds.table = table_from_csv(doc, schema);
    for (std::size_t c = 0; c < schema.size(); ++c) {
        auto& meta = schema.columns[c];
        if (meta.kind != ColumnKind::nominal || !meta.categories.empty()) continue;
        for (const auto& row : ds.table.rows) {
            const std::string& label = std::get<std::string>(row[c]);
            if (std::find(meta.categories.begin(), meta.categories.end(), label) == meta.categories.end()) {
                meta.categories.push_back(label);
            }
        }
    }
    ds.schema = std::move(schema);
    return ds;
}

inline io::CsvDocument table_to_csv(const Table& t) {
    io::CsvDocument doc;
    doc.header = t.columns;
    for (const auto& r : t.rows) {
        std::vector<std::string> rec;
        for (const Cell& c : r) rec.push_back(cell_to_string(c));
        doc.rows.push_back(std::move(rec));
    }
    return doc;
}

} // namespace selgan::app
