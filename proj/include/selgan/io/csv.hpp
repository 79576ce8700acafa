#pragma once

#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "selgan/error.hpp"

namespace selgan::io {

struct CsvDocument {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 parser: quoted fields may hold commas, doubled quotes and line
/// breaks. The first record is the header. Accepts LF or CRLF endings.
inline CsvDocument parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (field_started) {
                throw IngestionError("stray quote inside unquoted field at line " + std::to_string(line));
            }
            in_quotes = true;
            field_started = true;
            break;
        case ',': end_field(); break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') break;
            end_record();
            ++line;
            break;
        case '\n':
            end_record();
            ++line;
            break;
        default:
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw IngestionError("unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) end_record();

    if (records.empty()) throw IngestionError("CSV has no header row");
    CsvDocument doc;
    doc.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != doc.header.size()) {
            throw IngestionError("CSV record " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                                 " fields, header has " + std::to_string(doc.header.size()));
        }
        doc.rows.push_back(std::move(records[r]));
    }
    return doc;
}

inline CsvDocument read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_csv(text);
}

inline std::string quote_field(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string out = "\"";
    for (char c : f) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string to_csv(const CsvDocument& doc) {
    std::ostringstream os;
    auto write = [&](const std::vector<std::string>& rec) {
        for (std::size_t i = 0; i < rec.size(); ++i) {
            if (i) os << ',';
            os << quote_field(rec[i]);
        }
        os << '\n';
    };
    write(doc.header);
    for (const auto& r : doc.rows) write(r);
    return os.str();
}

inline void write_csv(const std::string& path, const CsvDocument& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError("cannot write '" + path + "'");
    out << to_csv(doc);
}

} // namespace selgan::io
