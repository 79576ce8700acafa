#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "selgan/nn/tensor.hpp"
#include "selgan/random.hpp"
#include "selgan/transform/transformer.hpp"

namespace selgan::gan {

using encoding::ColumnKind;
using encoding::TableSchema;
using nn::Index;
using nn::Matrix;

/// One mask per nominal column, in schema order.
struct CondColumn {
    std::size_t column = 0; // schema index
    Index offset = 0;
    Index width = 0;
};

struct CondLayout {
    std::vector<CondColumn> columns;
    Index width = 0;

    bool empty() const { return columns.empty(); }

    std::size_t slot_of(std::size_t schema_column) const {
        for (std::size_t s = 0; s < columns.size(); ++s) {
            if (columns[s].column == schema_column) return s;
        }
        throw ArgumentError("column " + std::to_string(schema_column) + " is not a nominal column");
    }
};

inline CondLayout build_cond_layout(const TableSchema& schema) {
    CondLayout l;
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (schema.columns[c].kind != ColumnKind::nominal) continue;
        const auto w = static_cast<Index>(schema.columns[c].categories.size());
        l.columns.push_back({c, l.width, w});
        l.width += w;
    }
    return l;
}

/// Cond vector with the mask of `column` one-hot at `category`; all other
/// masks zero.
inline std::vector<double> build_cond_vector(const TableSchema& schema, std::size_t column, std::size_t category) {
    if (column >= schema.size()) throw ArgumentError("column index " + std::to_string(column) + " out of range");
    if (schema.columns[column].kind != ColumnKind::nominal) {
        throw ArgumentError("column '" + schema.columns[column].name + "' is " +
                            encoding::to_string(schema.columns[column].kind) + ", conditions need a nominal column");
    }
    if (category >= schema.columns[column].categories.size()) {
        throw ArgumentError("category index " + std::to_string(category) + " out of range for column '" +
                            schema.columns[column].name + "'");
    }
    const CondLayout layout = build_cond_layout(schema);
    std::vector<double> v(static_cast<std::size_t>(layout.width), 0.0);
    const CondColumn& cc = layout.columns[layout.slot_of(column)];
    v[static_cast<std::size_t>(cc.offset) + category] = 1.0;
    return v;
}

inline std::vector<double> unconditional_vector(const TableSchema& schema) {
    return std::vector<double>(static_cast<std::size_t>(build_cond_layout(schema).width), 0.0);
}

struct Condition {
    std::size_t column = 0; // schema index
    std::size_t slot = 0;   // position in the cond layout
    std::size_t category = 0;
};

/// Category counts per nominal column, in cond-layout order.
using CategoryFrequencies = std::vector<std::vector<double>>;

inline CategoryFrequencies category_frequencies(const encoding::TransformedMatrix& data, const CondLayout& layout) {
    CategoryFrequencies f;
    for (const CondColumn& cc : layout.columns) {
        std::vector<double> counts(static_cast<std::size_t>(cc.width), 0.0);
        for (Index r = 0; r < data.rows.rows(); ++r) {
            counts[static_cast<std::size_t>(encoding::argmax(data.rows, r, cc.offset, cc.width))] += 1.0;
        }
        f.push_back(std::move(counts));
    }
    return f;
}

namespace detail {
inline std::size_t pick_weighted(const std::vector<double>& w, Rng& rng) {
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0)) throw ArgumentError("no category has positive weight");
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] <= 0.0) continue;
        if (target < w[i]) return i;
        target -= w[i];
    }
    for (std::size_t i = w.size(); i-- > 0;) {
        if (w[i] > 0.0) return i;
    }
    return 0;
}
} // namespace detail

/// Training-by-sampling: a nominal column uniformly, then a category with
/// probability proportional to log(1 + frequency).
inline Condition sample_condition(const CondLayout& layout, const CategoryFrequencies& freq, Rng& rng) {
    if (layout.empty()) throw ArgumentError("no nominal columns to condition on");
    std::uniform_int_distribution<std::size_t> col(0, layout.columns.size() - 1);
    const std::size_t slot = col(rng);
    std::vector<double> w;
    for (double f : freq[slot]) w.push_back(std::log1p(f));
    return {layout.columns[slot].column, slot, detail::pick_weighted(w, rng)};
}

/// Same column rule, categories in proportion to their raw frequency.
inline Condition sample_condition_empirical(const CondLayout& layout, const CategoryFrequencies& freq, Rng& rng) {
    if (layout.empty()) throw ArgumentError("no nominal columns to condition on");
    std::uniform_int_distribution<std::size_t> col(0, layout.columns.size() - 1);
    const std::size_t slot = col(rng);
    return {layout.columns[slot].column, slot, detail::pick_weighted(freq[slot], rng)};
}

/// Maps the estimator/oracle encoding to the generator's output range and
/// back: alpha is divided by the clip so tanh covers it, ordinal ranks are
/// standardized. Everything else passes through.
struct GanSpace {
    Matrix scale;  // 1 x width
    Matrix offset; // 1 x width

    static GanSpace from_schema(const TableSchema& schema, const encoding::Layout& layout) {
        GanSpace s{Matrix::Ones(1, layout.width), Matrix::Zero(1, layout.width)};
        for (const encoding::Segment& seg : layout.segments) {
            if (seg.kind == encoding::SegmentKind::alpha) {
                s.scale(0, seg.offset) = encoding::kAlphaClip;
            } else if (seg.kind == encoding::SegmentKind::ordinal) {
                s.scale(0, seg.offset) = schema.columns[seg.column].rank_std;
                s.offset(0, seg.offset) = schema.columns[seg.column].rank_mean;
            }
        }
        return s;
    }

    Matrix to_gan(const Matrix& transformed) const {
        Matrix out = transformed.rowwise() - offset.row(0);
        out.array().rowwise() /= scale.row(0).array();
        return out;
    }

    Matrix to_transformed(const Matrix& g) const {
        Matrix out = g.array().rowwise() * scale.row(0).array();
        out.rowwise() += offset.row(0);
        return out;
    }

    nn::Var to_transformed(nn::Var g) const {
        nn::Tape& t = g.tape();
        return nn::ops::add_row(nn::ops::mul_row(g, t.constant(scale)), t.constant(offset));
    }
};

} // namespace selgan::gan
