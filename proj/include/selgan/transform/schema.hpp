#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "selgan/table.hpp"
#include "selgan/transform/mode_model.hpp"

namespace selgan::encoding {

using json = nlohmann::json;

enum class ColumnKind { continuous, ordinal, nominal };

inline std::string to_string(ColumnKind k) {
    switch (k) {
    case ColumnKind::continuous: return "continuous";
    case ColumnKind::ordinal: return "ordinal";
    case ColumnKind::nominal: return "nominal";
    }
    return "?";
}

inline ColumnKind column_kind_from_string(const std::string& s) {
    if (s == "continuous") return ColumnKind::continuous;
    if (s == "ordinal") return ColumnKind::ordinal;
    if (s == "nominal") return ColumnKind::nominal;
    throw SchemaError("unknown column kind '" + s + "'");
}

/// Per-column metadata. Ordinal categories are stored in rank order.
struct ColumnMeta {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    std::vector<std::string> categories;
    std::optional<ModeModel> mode_model;
    // Ordinal ranks are standardized with these before entering the GAN.
    double rank_mean = 0.0;
    double rank_std = 1.0;

    bool is_categorical() const { return kind != ColumnKind::continuous; }

    std::size_t category_index(const std::string& label) const {
        auto it = std::find(categories.begin(), categories.end(), label);
        if (it == categories.end()) {
            throw DataError("column '" + name + "': unseen category '" + label + "'");
        }
        return static_cast<std::size_t>(it - categories.begin());
    }
};

struct TableSchema {
    std::vector<ColumnMeta> columns;

    std::size_t size() const { return columns.size(); }
    bool fitted() const {
        return std::all_of(columns.begin(), columns.end(), [](const ColumnMeta& c) {
            return c.kind != ColumnKind::continuous || c.mode_model.has_value();
        });
    }

    std::size_t index_of(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i].name == name) return i;
        }
        throw SchemaError("schema has no column '" + name + "'");
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& c : columns) out.push_back(c.name);
        return out;
    }
};

inline constexpr int kSchemaVersion = 1;

inline void validate(const TableSchema& s) {
    std::set<std::string> names;
    for (const ColumnMeta& c : s.columns) {
        if (!names.insert(c.name).second) throw SchemaError("duplicate column '" + c.name + "'");
        if (c.is_categorical()) {
            if (c.mode_model) throw SchemaError("categorical column '" + c.name + "' carries a mode model");
            std::set<std::string> seen(c.categories.begin(), c.categories.end());
            if (seen.size() != c.categories.size()) {
                throw SchemaError("column '" + c.name + "' lists a category twice");
            }
            if (c.kind == ColumnKind::ordinal && c.categories.empty()) {
                throw SchemaError("ordinal column '" + c.name + "' must declare its category order");
            }
        } else if (!c.categories.empty()) {
            throw SchemaError("continuous column '" + c.name + "' lists categories");
        }
        if (c.mode_model) {
            const ModeModel& m = *c.mode_model;
            if (m.mode_count() == 0 || m.means.size() != m.mode_count() || m.stds.size() != m.mode_count()) {
                throw SchemaError("column '" + c.name + "' has an inconsistent mode model");
            }
            double total = 0.0;
            for (std::size_t k = 0; k < m.mode_count(); ++k) {
                if (!(m.stds[k] > 0.0)) throw SchemaError("column '" + c.name + "' has a non-positive mode std");
                total += m.weights[k];
            }
            if (std::abs(total - 1.0) > 1e-9) throw SchemaError("column '" + c.name + "' mode weights do not sum to 1");
        }
    }
}

inline json schema_to_json(const TableSchema& s) {
    json cols = json::array();
    for (const ColumnMeta& c : s.columns) {
        json j{{"name", c.name}, {"kind", to_string(c.kind)}};
        if (c.is_categorical()) j["categories"] = c.categories;
        if (c.kind == ColumnKind::ordinal) j["rank_stats"] = {{"mean", c.rank_mean}, {"std", c.rank_std}};
        if (c.mode_model) {
            j["mode_model"] = {{"weights", c.mode_model->weights},
                               {"means", c.mode_model->means},
                               {"stds", c.mode_model->stds}};
        }
        cols.push_back(std::move(j));
    }
    return {{"format", "selgan-schema"}, {"version", kSchemaVersion}, {"columns", cols}};
}

inline TableSchema schema_from_json(const json& j) {
    if (j.contains("version") && j.at("version").get<int>() != kSchemaVersion) {
        throw SchemaError("unsupported schema version " + j.at("version").dump());
    }
    TableSchema s;
    try {
        for (const json& c : j.at("columns")) {
            ColumnMeta m;
            m.name = c.at("name").get<std::string>();
            m.kind = column_kind_from_string(c.at("kind").get<std::string>());
            if (c.contains("categories")) m.categories = c.at("categories").get<std::vector<std::string>>();
            if (c.contains("rank_stats")) {
                m.rank_mean = c.at("rank_stats").at("mean").get<double>();
                m.rank_std = c.at("rank_stats").at("std").get<double>();
            }
            if (c.contains("mode_model")) {
                const json& mm = c.at("mode_model");
                m.mode_model = ModeModel{mm.at("weights").get<std::vector<double>>(),
                                         mm.at("means").get<std::vector<double>>(),
                                         mm.at("stds").get<std::vector<double>>()};
            }
            s.columns.push_back(std::move(m));
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed schema: ") + e.what());
    }
    validate(s);
    return s;
}

struct SchemaFitOptions {
    ModeFitOptions modes;
};

/// Fits mode models for continuous columns and rank statistics for ordinal
/// columns. Nominal columns without declared categories take them from the
/// data in order of first appearance.
inline TableSchema fit_schema(const Table& table, TableSchema declared, const SchemaFitOptions& opt = {}) {
    if (table.num_cols() != declared.size()) {
        throw SchemaError("table has " + std::to_string(table.num_cols()) + " columns, schema declares " +
                          std::to_string(declared.size()));
    }
    for (std::size_t c = 0; c < declared.size(); ++c) {
        ColumnMeta& meta = declared.columns[c];
        if (table.columns[c] != meta.name) {
            throw SchemaError("column " + std::to_string(c) + " is '" + table.columns[c] + "', schema expects '" +
                              meta.name + "'");
        }
        switch (meta.kind) {
        case ColumnKind::continuous: {
            ModeFitOptions mo = opt.modes;
            mo.seed = derive_seed(opt.modes.seed, meta.name);
            meta.mode_model = fit_mode_model(table.numeric_column(c), mo);
            break;
        }
        case ColumnKind::nominal: {
            if (meta.categories.empty()) {
                for (const auto& r : table.rows) {
                    const std::string& label = std::get<std::string>(r[c]);
                    if (std::find(meta.categories.begin(), meta.categories.end(), label) == meta.categories.end()) {
                        meta.categories.push_back(label);
                    }
                }
            }
            break;
        }
        case ColumnKind::ordinal: {
            double sum = 0.0, sq = 0.0;
            for (const auto& r : table.rows) {
                const double rank = static_cast<double>(meta.category_index(std::get<std::string>(r[c])) + 1);
                sum += rank;
                sq += rank * rank;
            }
            const double n = std::max<double>(1.0, static_cast<double>(table.num_rows()));
            meta.rank_mean = table.num_rows() ? sum / n : 1.0;
            const double var = table.num_rows() ? sq / n - meta.rank_mean * meta.rank_mean : 0.0;
            meta.rank_std = var > 1e-12 ? std::sqrt(var) : 1.0;
            break;
        }
        }
    }
    validate(declared);
    return declared;
}

} // namespace selgan::encoding
