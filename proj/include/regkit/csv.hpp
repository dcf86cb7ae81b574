#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "regkit/common.hpp"
#include "regkit/schema.hpp"

namespace regkit {

// One table cell. Absent values are explicit so that short rows are a load
// error rather than silently padded.
struct Cell {
    enum class Kind { absent, number, text };

    Kind kind = Kind::absent;
    double number = 0.0;
    std::string text;

    static Cell missing() { return {}; }
    static Cell num(double v) { return {Kind::number, v, {}}; }
    static Cell str(std::string s) { return {Kind::text, 0.0, std::move(s)}; }

    bool is_missing() const { return kind == Kind::absent; }
    bool is_number() const { return kind == Kind::number; }
    bool is_text() const { return kind == Kind::text; }

    bool operator==(const Cell&) const = default;
};

struct RawTable {
    std::vector<std::string> column_names;
    std::vector<std::vector<Cell>> rows;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return column_names.size(); }

    int column_index(const std::string& name) const {
        for (std::size_t j = 0; j < column_names.size(); ++j)
            if (column_names[j] == name) return static_cast<int>(j);
        return -1;
    }
};

namespace detail {

// Splits one CSV record. Double quotes delimit fields; "" inside a quoted
// field is an escaped quote. Trailing \r from CRLF files is stripped.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r' || i + 1 != line.size()) {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

inline bool parse_number(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace detail

// Reads a CSV file whose header must cover exactly the schema's column set.
// Empty fields and the literal "NA" are recorded as absent cells. Cells of
// numeric and target columns are typed as numbers where parseable; anything
// unparseable stays text for the validator to count.
inline RawTable load_csv(const std::string& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load_csv: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw Error("load_csv: '" + path + "' has no header row");

    RawTable table;
    table.column_names = detail::split_csv_line(line);

    std::vector<const ColumnSpec*> specs(table.column_names.size(), nullptr);
    for (std::size_t j = 0; j < table.column_names.size(); ++j) {
        specs[j] = find_column(schema, table.column_names[j]);
        if (!specs[j])
            throw Error("load_csv: column '" + table.column_names[j] + "' missing from schema");
    }
    for (const auto& spec : schema)
        if (table.column_index(spec.name) < 0)
            throw Error("load_csv: schema column '" + spec.name + "' not in file header");

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() && in.eof()) break;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != table.column_names.size()) {
            std::ostringstream msg;
            msg << "load_csv: line " << lineno << " has " << fields.size() << " cells, expected "
                << table.column_names.size();
            throw Error(msg.str());
        }
        std::vector<Cell> row(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const std::string& f = fields[j];
            if (f.empty() || f == "NA") {
                row[j] = Cell::missing();
                continue;
            }
            const ColumnKind kind = specs[j]->kind;
            if (kind == ColumnKind::numeric || kind == ColumnKind::target) {
                double v;
                if (detail::parse_number(f, v)) {
                    row[j] = Cell::num(v);
                    continue;
                }
            }
            row[j] = Cell::str(f);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace regkit
