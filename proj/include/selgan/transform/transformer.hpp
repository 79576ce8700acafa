#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "selgan/nn/tensor.hpp"
#include "selgan/transform/schema.hpp"

namespace selgan::encoding {

using nn::Index;
using nn::Matrix;

enum class SegmentKind { alpha, beta, ordinal, nominal };

struct Segment {
    std::size_t column = 0;
    SegmentKind kind = SegmentKind::alpha;
    Index offset = 0;
    Index width = 0;
};

/// Column positions of every encoded segment, in schema column order.
struct Layout {
    std::vector<Segment> segments;
    Index width = 0;

    /// Segments that are one-hot in real data (beta and nominal).
    std::vector<Segment> one_hot_segments() const {
        std::vector<Segment> out;
        for (const Segment& s : segments) {
            if (s.kind == SegmentKind::beta || s.kind == SegmentKind::nominal) out.push_back(s);
        }
        return out;
    }
};

struct TransformedMatrix {
    Matrix rows;
    Layout layout;
};

inline Layout build_layout(const TableSchema& schema) {
    if (!schema.fitted()) throw SchemaError("schema must be fitted before building a layout");
    Layout l;
    for (std::size_t c = 0; c < schema.size(); ++c) {
        const ColumnMeta& m = schema.columns[c];
        switch (m.kind) {
        case ColumnKind::continuous:
            l.segments.push_back({c, SegmentKind::alpha, l.width, 1});
            l.width += 1;
            l.segments.push_back({c, SegmentKind::beta, l.width, static_cast<Index>(m.mode_model->mode_count())});
            l.width += static_cast<Index>(m.mode_model->mode_count());
            break;
        case ColumnKind::ordinal:
            l.segments.push_back({c, SegmentKind::ordinal, l.width, 1});
            l.width += 1;
            break;
        case ColumnKind::nominal:
            l.segments.push_back({c, SegmentKind::nominal, l.width, static_cast<Index>(m.categories.size())});
            l.width += static_cast<Index>(m.categories.size());
            break;
        }
    }
    return l;
}

/// Ordinal -> {rank} with ranks starting at 1; nominal -> one-hot.
inline std::vector<double> encode_categorical(const std::string& value, const ColumnMeta& meta) {
    if (!meta.is_categorical()) throw ArgumentError("column '" + meta.name + "' is not categorical");
    const std::size_t idx = meta.category_index(value);
    if (meta.kind == ColumnKind::ordinal) return {static_cast<double>(idx + 1)};
    std::vector<double> out(meta.categories.size(), 0.0);
    out[idx] = 1.0;
    return out;
}

inline TransformedMatrix transform(const Table& table, const TableSchema& schema) {
    if (table.num_cols() != schema.size()) {
        throw SchemaError("table has " + std::to_string(table.num_cols()) + " columns, schema has " +
                          std::to_string(schema.size()));
    }
    TransformedMatrix out;
    out.layout = build_layout(schema);
    out.rows = Matrix::Zero(static_cast<Index>(table.num_rows()), out.layout.width);
    for (std::size_t r = 0; r < table.num_rows(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != schema.size()) throw SchemaError("row " + std::to_string(r) + " has the wrong width");
        const Index ri = static_cast<Index>(r);
        for (const Segment& seg : out.layout.segments) {
            const ColumnMeta& meta = schema.columns[seg.column];
            switch (seg.kind) {
            case SegmentKind::alpha: {
                const double* v = std::get_if<double>(&row[seg.column]);
                if (!v) throw DataError("column '" + meta.name + "' row " + std::to_string(r) + " is not numeric");
                NormalizedValue nv = normalize_continuous(*v, *meta.mode_model);
                out.rows(ri, seg.offset) = nv.alpha;
                out.rows(ri, seg.offset + 1 + static_cast<Index>(nv.mode)) = 1.0;
                break;
            }
            case SegmentKind::beta: break; // written with its alpha
            case SegmentKind::ordinal:
            case SegmentKind::nominal: {
                const std::string* label = std::get_if<std::string>(&row[seg.column]);
                if (!label) throw DataError("column '" + meta.name + "' row " + std::to_string(r) + " is not a label");
                const auto enc = encode_categorical(*label, meta);
                for (std::size_t k = 0; k < enc.size(); ++k) out.rows(ri, seg.offset + static_cast<Index>(k)) = enc[k];
                break;
            }
            }
        }
    }
    return out;
}

inline Index argmax(const Matrix& rows, Index r, Index offset, Index width) {
    Index best = 0;
    for (Index k = 1; k < width; ++k) {
        if (rows(r, offset + k) > rows(r, offset + best)) best = k;
    }
    return best;
}

/// Maps encoded rows back to raw values. Continuous columns use the argmax
/// mode of their beta segment; ordinal scalars round to the nearest valid
/// rank; nominal segments take their argmax category.
inline Table inverse_transform(const Matrix& rows, const TableSchema& schema) {
    const Layout layout = build_layout(schema);
    if (rows.cols() != layout.width) {
        throw LayoutError("encoded rows have width " + std::to_string(rows.cols()) + ", layout expects " +
                          std::to_string(layout.width));
    }
    Table t;
    t.columns = schema.names();
    t.rows.resize(static_cast<std::size_t>(rows.rows()));
    for (Index r = 0; r < rows.rows(); ++r) {
        auto& out = t.rows[static_cast<std::size_t>(r)];
        out.resize(schema.size());
        for (std::size_t i = 0; i < layout.segments.size(); ++i) {
            const Segment& seg = layout.segments[i];
            const ColumnMeta& meta = schema.columns[seg.column];
            switch (seg.kind) {
            case SegmentKind::alpha: {
                const Segment& beta = layout.segments[i + 1];
                const Index mode = argmax(rows, r, beta.offset, beta.width);
                out[seg.column] = denormalize_continuous(rows(r, seg.offset), static_cast<std::size_t>(mode),
                                                         *meta.mode_model);
                break;
            }
            case SegmentKind::beta: break;
            case SegmentKind::ordinal: {
                const double k = static_cast<double>(meta.categories.size());
                if (!std::isfinite(rows(r, seg.offset))) {
                    throw DataError("column '" + meta.name + "': non-finite ordinal value");
                }
                const double rank = std::clamp(std::round(rows(r, seg.offset)), 1.0, k);
                out[seg.column] = meta.categories[static_cast<std::size_t>(rank) - 1];
                break;
            }
            case SegmentKind::nominal:
                out[seg.column] = meta.categories[static_cast<std::size_t>(argmax(rows, r, seg.offset, seg.width))];
                break;
            }
        }
    }
    return t;
}

} // namespace selgan::encoding
