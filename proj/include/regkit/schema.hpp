#pragma once

#include <string>
#include <vector>

#include "regkit/common.hpp"
#include "regkit/kvfile.hpp"

namespace regkit {

enum class ColumnKind { numeric, categorical, ordinal, identifier, target };
enum class MissingPolicy { drop_row, impute_median, impute_mode, sentinel_category };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    MissingPolicy missing = MissingPolicy::drop_row;
    std::vector<std::string> ordinal_order;  // rank 0 first; ordinal columns only
    std::string sentinel = "None";
};

using Schema = std::vector<ColumnSpec>;

inline const ColumnSpec* find_column(const Schema& schema, const std::string& name) {
    for (const auto& c : schema)
        if (c.name == name) return &c;
    return nullptr;
}

inline std::string to_string(ColumnKind k) {
    switch (k) {
        case ColumnKind::numeric: return "numeric";
        case ColumnKind::categorical: return "categorical";
        case ColumnKind::ordinal: return "ordinal";
        case ColumnKind::identifier: return "identifier";
        case ColumnKind::target: return "target";
    }
    return "?";
}

inline std::string to_string(MissingPolicy p) {
    switch (p) {
        case MissingPolicy::drop_row: return "drop_row";
        case MissingPolicy::impute_median: return "impute_median";
        case MissingPolicy::impute_mode: return "impute_mode";
        case MissingPolicy::sentinel_category: return "sentinel_category";
    }
    return "?";
}

// Requires exactly one target column and a total order on every ordinal.
inline void check_schema(const Schema& schema) {
    std::size_t targets = 0;
    for (const auto& c : schema) {
        if (c.name.empty()) throw Error("schema: column with empty name");
        if (c.kind == ColumnKind::target) ++targets;
        if (c.kind == ColumnKind::ordinal && c.ordinal_order.empty())
            throw Error("schema: ordinal column '" + c.name + "' has no order list");
    }
    for (std::size_t i = 0; i < schema.size(); ++i)
        for (std::size_t j = i + 1; j < schema.size(); ++j)
            if (schema[i].name == schema[j].name)
                throw Error("schema: duplicate column name '" + schema[i].name + "'");
    if (targets != 1)
        throw Error("schema: expected exactly one target column, found " + std::to_string(targets));
}

// Schema file grammar (see README): one [column:<name>] section per column
// with keys kind, missing, sentinel and a pipe-separated `order` list for
// ordinals.
inline Schema parse_schema(const std::vector<KvSection>& sections, const std::string& origin) {
    Schema schema;
    for (const auto& sec : sections) {
        if (sec.name.rfind("column:", 0) != 0)
            throw Error(origin + ": unexpected section [" + sec.name + "] in schema file");
        ColumnSpec col;
        col.name = detail::trim(sec.name.substr(7));
        for (const auto& [key, value] : sec.entries) {
            if (key == "kind") {
                if (value == "numeric") col.kind = ColumnKind::numeric;
                else if (value == "categorical") col.kind = ColumnKind::categorical;
                else if (value == "ordinal") col.kind = ColumnKind::ordinal;
                else if (value == "identifier") col.kind = ColumnKind::identifier;
                else if (value == "target") col.kind = ColumnKind::target;
                else throw Error(origin + ": unknown kind '" + value + "' for column " + col.name);
            } else if (key == "missing") {
                if (value == "drop_row") col.missing = MissingPolicy::drop_row;
                else if (value == "impute_median") col.missing = MissingPolicy::impute_median;
                else if (value == "impute_mode") col.missing = MissingPolicy::impute_mode;
                else if (value == "sentinel_category") col.missing = MissingPolicy::sentinel_category;
                else throw Error(origin + ": unknown missing policy '" + value + "'");
            } else if (key == "order") {
                col.ordinal_order = detail::split(value, '|');
            } else if (key == "sentinel") {
                col.sentinel = value;
            } else {
                throw Error(origin + ": unknown key '" + key + "' for column " + col.name);
            }
        }
        schema.push_back(std::move(col));
    }
    check_schema(schema);
    return schema;
}

inline Schema load_schema(const std::string& path) {
    return parse_schema(load_kv_file(path), path);
}

// Canonical serialization; also the digest input for model artifacts.
inline std::string schema_to_text(const Schema& schema) {
    std::string out;
    for (const auto& c : schema) {
        out += "[column:" + c.name + "]\n";
        out += "kind = " + to_string(c.kind) + "\n";
        out += "missing = " + to_string(c.missing) + "\n";
        if (!c.ordinal_order.empty()) {
            out += "order = ";
            for (std::size_t i = 0; i < c.ordinal_order.size(); ++i) {
                if (i) out += "|";
                out += c.ordinal_order[i];
            }
            out += "\n";
        }
        if (c.missing == MissingPolicy::sentinel_category) out += "sentinel = " + c.sentinel + "\n";
        out += "\n";
    }
    return out;
}

}  // namespace regkit
