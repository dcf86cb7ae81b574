#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "regkit/common.hpp"
#include "regkit/csv.hpp"
#include "regkit/rng.hpp"
#include "regkit/schema.hpp"

namespace regkit {

enum class TargetTransform { identity, log1p };

inline std::string to_string(TargetTransform t) {
    return t == TargetTransform::log1p ? "log1p" : "identity";
}

inline TargetTransform target_transform_from_string(const std::string& s) {
    if (s == "identity") return TargetTransform::identity;
    if (s == "log1p") return TargetTransform::log1p;
    throw Error("unknown target transform '" + s + "'");
}

// Fully numeric, model-ready view of a table.
struct Dataset {
    Matrix X;
    Vector y;
    std::vector<std::string> feature_names;
    TargetTransform target_transform = TargetTransform::identity;
    std::string provenance;

    std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
    std::size_t d() const { return static_cast<std::size_t>(X.cols()); }
};

struct Scaler {
    Vector means;
    Vector stds;  // constant columns store 1 so the transform maps them to 0
};

struct ValidationReport {
    struct ColumnCheck {
        std::string column;
        std::size_t missing = 0;
        std::size_t type_invalid = 0;
        std::size_t out_of_range = 0;
    };
    std::vector<ColumnCheck> columns;
    std::vector<std::string> duplicate_ids;  // "<column>=<value>"
    std::size_t mandatory_failures = 0;
    bool pass = true;

    std::string to_text() const {
        std::ostringstream out;
        out << "validation: " << (pass ? "pass" : "fail") << "\n";
        for (const auto& c : columns)
            out << "column\t" << c.column << "\tmissing=" << c.missing
                << "\ttype_invalid=" << c.type_invalid << "\tout_of_range=" << c.out_of_range
                << "\n";
        for (const auto& d : duplicate_ids) out << "duplicate_id\t" << d << "\n";
        return out.str();
    }
};

namespace detail {

inline bool ordinal_rank(const ColumnSpec& spec, const std::string& label, std::size_t& rank) {
    for (std::size_t i = 0; i < spec.ordinal_order.size(); ++i) {
        if (spec.ordinal_order[i] == label) {
            rank = i;
            return true;
        }
    }
    return false;
}

inline std::string cell_label(const Cell& c) {
    if (c.is_text()) return c.text;
    if (c.is_number()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", c.number);
        return buf;
    }
    return "";
}

// Linear interpolation between order statistics (h = (m-1)p).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t m = sorted.size();
    if (m == 0) throw Error("quantile of empty sample");
    const double h = static_cast<double>(m - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= m) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

// Counts missing, type-invalid and out-of-range cells per column plus
// duplicated identifier values. Mandatory failures are type violations,
// range violations, duplicate identifiers, and missing cells in target or
// identifier columns; ordinary missing feature cells are informational
// because clean() resolves them by policy.
inline ValidationReport validate(const RawTable& table, const Schema& schema) {
    ValidationReport report;
    for (std::size_t j = 0; j < table.n_cols(); ++j) {
        const ColumnSpec* spec = find_column(schema, table.column_names[j]);
        if (!spec) throw Error("validate: schema does not cover column '" + table.column_names[j] + "'");
        ValidationReport::ColumnCheck check;
        check.column = spec->name;
        std::map<std::string, std::size_t> id_counts;
        for (const auto& row : table.rows) {
            const Cell& cell = row[j];
            if (cell.is_missing()) {
                ++check.missing;
                continue;
            }
            switch (spec->kind) {
                case ColumnKind::numeric:
                case ColumnKind::target:
                    if (!cell.is_number()) ++check.type_invalid;
                    break;
                case ColumnKind::ordinal: {
                    std::size_t rank;
                    if (!detail::ordinal_rank(*spec, detail::cell_label(cell), rank))
                        ++check.out_of_range;
                    break;
                }
                case ColumnKind::identifier:
                    ++id_counts[detail::cell_label(cell)];
                    break;
                case ColumnKind::categorical:
                    break;
            }
        }
        for (const auto& [value, count] : id_counts)
            if (count > 1) report.duplicate_ids.push_back(spec->name + "=" + value);
        report.mandatory_failures += check.type_invalid + check.out_of_range;
        if (spec->kind == ColumnKind::target || spec->kind == ColumnKind::identifier)
            report.mandatory_failures += check.missing;
        report.columns.push_back(std::move(check));
    }
    report.mandatory_failures += report.duplicate_ids.size();
    report.pass = report.mandatory_failures == 0;
    return report;
}

// Per-column replacement values fitted by clean(); replayable on new rows
// at prediction time.
struct CleanStats {
    std::vector<Cell> impute_values;  // one per table column; missing() where n/a
    std::size_t duplicates_removed = 0;
    std::size_t rows_dropped = 0;
};

inline RawTable clean_with_stats(const RawTable& table, const Schema& schema, CleanStats& stats) {
    RawTable out;
    out.column_names = table.column_names;

    // Exact duplicate rows: keep first occurrence.
    std::set<std::size_t> drop;
    {
        std::vector<std::size_t> order(table.n_rows());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = 0; i < table.n_rows(); ++i) {
            if (drop.count(i)) continue;
            for (std::size_t k = i + 1; k < table.n_rows(); ++k)
                if (!drop.count(k) && table.rows[i] == table.rows[k]) drop.insert(k);
        }
    }
    stats.duplicates_removed = drop.size();

    std::vector<const ColumnSpec*> specs(table.n_cols());
    for (std::size_t j = 0; j < table.n_cols(); ++j)
        specs[j] = find_column(schema, table.column_names[j]);

    // Rows removed by drop_row policies.
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        if (drop.count(i)) continue;
        for (std::size_t j = 0; j < table.n_cols(); ++j)
            if (specs[j]->missing == MissingPolicy::drop_row && table.rows[i][j].is_missing()) {
                drop.insert(i);
                break;
            }
    }
    stats.rows_dropped = drop.size() - stats.duplicates_removed;

    for (std::size_t i = 0; i < table.n_rows(); ++i)
        if (!drop.count(i)) out.rows.push_back(table.rows[i]);

    // Imputation statistics over the retained rows.
    stats.impute_values.assign(table.n_cols(), Cell::missing());
    for (std::size_t j = 0; j < table.n_cols(); ++j) {
        const ColumnSpec& spec = *specs[j];
        if (spec.kind == ColumnKind::identifier) continue;
        if (spec.missing == MissingPolicy::impute_median) {
            std::vector<double> present;
            for (const auto& row : out.rows)
                if (row[j].is_number()) present.push_back(row[j].number);
            bool any_missing = false;
            for (const auto& row : out.rows) any_missing |= row[j].is_missing();
            if (present.empty() && any_missing)
                throw Error("clean: column '" + spec.name + "' has no numeric values to impute from");
            if (!present.empty()) {
                std::sort(present.begin(), present.end());
                stats.impute_values[j] = Cell::num(detail::quantile_sorted(present, 0.5));
            }
        } else if (spec.missing == MissingPolicy::impute_mode) {
            std::map<std::string, std::size_t> counts;  // ordered: ties -> smallest label
            for (const auto& row : out.rows)
                if (!row[j].is_missing()) ++counts[detail::cell_label(row[j])];
            bool any_missing = false;
            for (const auto& row : out.rows) any_missing |= row[j].is_missing();
            if (counts.empty() && any_missing)
                throw Error("clean: column '" + spec.name + "' has no values to take a mode from");
            std::string best;
            std::size_t best_count = 0;
            for (const auto& [label, count] : counts)
                if (count > best_count) best = label, best_count = count;
            if (!counts.empty()) stats.impute_values[j] = Cell::str(best);
        } else if (spec.missing == MissingPolicy::sentinel_category) {
            stats.impute_values[j] = Cell::str(spec.sentinel);
        }
    }

    for (auto& row : out.rows)
        for (std::size_t j = 0; j < table.n_cols(); ++j)
            if (row[j].is_missing() && !stats.impute_values[j].is_missing()) row[j] = stats.impute_values[j];
    return out;
}

inline RawTable clean(const RawTable& table, const Schema& schema) {
    CleanStats stats;
    return clean_with_stats(table, schema, stats);
}

// Replays previously fitted imputation on new rows (no duplicate dropping).
inline RawTable clean_apply(const RawTable& table, const Schema& schema, const CleanStats& stats) {
    RawTable out = table;
    for (auto& row : out.rows)
        for (std::size_t j = 0; j < out.n_cols() && j < stats.impute_values.size(); ++j)
            if (row[j].is_missing() && !stats.impute_values[j].is_missing()) row[j] = stats.impute_values[j];
    return out;
}

// Tukey fences: value outside [Q1 - k*IQR, Q3 + k*IQR] with quantiles by
// linear interpolation. Flags rows; never drops them.
inline std::set<std::size_t> detect_outliers(const RawTable& table, const std::string& column,
                                             double k = 1.5) {
    const int j = table.column_index(column);
    if (j < 0) throw Error("detect_outliers: no column '" + column + "'");
    std::vector<std::pair<std::size_t, double>> present;
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        const Cell& cell = table.rows[i][static_cast<std::size_t>(j)];
        if (cell.is_number()) present.emplace_back(i, cell.number);
        else if (cell.is_text())
            throw Error("detect_outliers: column '" + column + "' is not numeric");
    }
    if (present.size() < 4)
        throw Error("detect_outliers: column '" + column + "' has fewer than 4 numeric values");
    std::vector<double> sorted;
    sorted.reserve(present.size());
    for (const auto& [i, v] : present) sorted.push_back(v);
    std::sort(sorted.begin(), sorted.end());
    const double q1 = detail::quantile_sorted(sorted, 0.25);
    const double q3 = detail::quantile_sorted(sorted, 0.75);
    const double iqr = q3 - q1;
    std::set<std::size_t> out;
    for (const auto& [i, v] : present)
        if (v < q1 - k * iqr || v > q3 + k * iqr) out.insert(i);
    return out;
}

// Fitted categorical vocabularies, replayable on prediction rows.
struct EncoderState {
    std::vector<std::vector<std::string>> categories;  // per table column; empty where n/a
};

namespace detail {

struct EncodedLayout {
    std::vector<const ColumnSpec*> specs;
    int target_col = -1;
    std::vector<std::string> feature_names;
    // per table column: first output column index, or -1 if dropped
    std::vector<int> out_begin;
};

inline EncodedLayout encoded_layout(const RawTable& table, const Schema& schema,
                                    const EncoderState& state) {
    EncodedLayout layout;
    layout.specs.resize(table.n_cols());
    layout.out_begin.assign(table.n_cols(), -1);
    for (std::size_t j = 0; j < table.n_cols(); ++j) {
        const ColumnSpec* spec = find_column(schema, table.column_names[j]);
        if (!spec) throw Error("encode: schema does not cover column '" + table.column_names[j] + "'");
        layout.specs[j] = spec;
        switch (spec->kind) {
            case ColumnKind::identifier:
                break;
            case ColumnKind::target:
                layout.target_col = static_cast<int>(j);
                break;
            case ColumnKind::numeric:
            case ColumnKind::ordinal:
                layout.out_begin[j] = static_cast<int>(layout.feature_names.size());
                layout.feature_names.push_back(spec->name);
                break;
            case ColumnKind::categorical:
                layout.out_begin[j] = static_cast<int>(layout.feature_names.size());
                for (const auto& cat : state.categories[j])
                    layout.feature_names.push_back(spec->name + "=" + cat);
                break;
        }
    }
    return layout;
}

}  // namespace detail

// Turns a cleaned table into a Dataset against an already fitted encoder
// state. Unseen categories one-hot to all zeros; a warning record is
// appended per occurrence. with_target=false permits rows without a target
// column (batch prediction).
inline Dataset encode_apply(const RawTable& table, const Schema& schema,
                            TargetTransform transform, const EncoderState& state,
                            bool with_target = true, std::vector<std::string>* warnings = nullptr) {
    const auto layout = detail::encoded_layout(table, schema, state);
    if (with_target && layout.target_col < 0) throw Error("encode: table has no target column");

    Dataset ds;
    ds.feature_names = layout.feature_names;
    ds.target_transform = transform;
    const std::size_t n = table.n_rows();
    const std::size_t d = layout.feature_names.size();
    ds.X = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    if (with_target) ds.y.resize(static_cast<Eigen::Index>(n));

    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = table.rows[i];
        for (std::size_t j = 0; j < table.n_cols(); ++j) {
            const ColumnSpec& spec = *layout.specs[j];
            if (spec.kind == ColumnKind::identifier) continue;
            if (spec.kind == ColumnKind::target) {
                if (!with_target) continue;
                if (!row[j].is_number())
                    throw Error("encode: non-numeric target in row " + std::to_string(i));
                double t = row[j].number;
                if (transform == TargetTransform::log1p) {
                    if (t <= 0.0)
                        throw Error("encode: non-positive target under log1p in row " +
                                    std::to_string(i));
                    t = std::log1p(t);
                }
                ds.y(static_cast<Eigen::Index>(i)) = t;
                continue;
            }
            const Cell& cell = row[j];
            if (cell.is_missing())
                throw Error("encode: residual missing cell in column '" + spec.name +
                            "' row " + std::to_string(i) + " (run clean first)");
            const int base = layout.out_begin[j];
            switch (spec.kind) {
                case ColumnKind::numeric:
                    if (!cell.is_number())
                        throw Error("encode: non-numeric cell in numeric column '" + spec.name +
                                    "' row " + std::to_string(i));
                    ds.X(static_cast<Eigen::Index>(i), base) = cell.number;
                    break;
                case ColumnKind::ordinal: {
                    std::size_t rank;
                    if (!detail::ordinal_rank(spec, detail::cell_label(cell), rank))
                        throw Error("encode: label '" + detail::cell_label(cell) +
                                    "' outside declared order of column '" + spec.name + "'");
                    ds.X(static_cast<Eigen::Index>(i), base) = static_cast<double>(rank);
                    break;
                }
                case ColumnKind::categorical: {
                    const auto& cats = state.categories[j];
                    const std::string label = detail::cell_label(cell);
                    const auto it = std::lower_bound(cats.begin(), cats.end(), label);
                    if (it != cats.end() && *it == label) {
                        ds.X(static_cast<Eigen::Index>(i),
                             base + static_cast<int>(it - cats.begin())) = 1.0;
                    } else if (warnings) {
                        warnings->push_back("row " + std::to_string(i) + ": unseen category '" +
                                            label + "' in column '" + spec.name + "'");
                    } else {
                        throw Error("encode: unseen category '" + label + "' in column '" +
                                    spec.name + "'");
                    }
                    break;
                }
                default:
                    break;
            }
        }
    }
    if (!ds.X.allFinite()) throw Error("encode: non-finite feature values");
    if (with_target && !ds.y.allFinite()) throw Error("encode: non-finite target values");
    return ds;
}

// Fits the categorical vocabularies (sorted label order) and encodes.
inline Dataset encode_with_state(const RawTable& table, const Schema& schema,
                                 TargetTransform transform, EncoderState& state) {
    state.categories.assign(table.n_cols(), {});
    for (std::size_t j = 0; j < table.n_cols(); ++j) {
        const ColumnSpec* spec = find_column(schema, table.column_names[j]);
        if (!spec) throw Error("encode: schema does not cover column '" + table.column_names[j] + "'");
        if (spec->kind != ColumnKind::categorical) continue;
        std::set<std::string> labels;
        for (const auto& row : table.rows)
            if (!row[j].is_missing()) labels.insert(detail::cell_label(row[j]));
        state.categories[j].assign(labels.begin(), labels.end());
    }
    Dataset ds = encode_apply(table, schema, transform, state, /*with_target=*/true, nullptr);
    std::ostringstream prov;
    prov << "encoded " << table.n_rows() << " rows, " << table.n_cols() << " source columns -> "
         << ds.d() << " features; target transform " << to_string(transform);
    ds.provenance = prov.str();
    return ds;
}

inline Dataset encode(const RawTable& table, const Schema& schema, TargetTransform transform) {
    EncoderState state;
    return encode_with_state(table, schema, transform, state);
}

// Seeded shuffle, then the first round(test_fraction*n) shuffled rows form
// the test side. Row order within each side is ascending original index.
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double test_fraction,
                                                    std::uint64_t seed) {
    const std::size_t n = ds.n();
    if (n < 2) throw Error("train_test_split: need at least 2 rows");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error("train_test_split: test_fraction must lie in (0,1)");
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    if (n_test == 0 || n_test >= n)
        throw Error("train_test_split: fraction yields an empty partition");

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng = Rng::derive(seed, /*stream_id=*/0x5911);
    rng.shuffle(perm);

    std::vector<std::size_t> test_idx(perm.begin(), perm.begin() + static_cast<long>(n_test));
    std::vector<std::size_t> train_idx(perm.begin() + static_cast<long>(n_test), perm.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    auto take = [&](const std::vector<std::size_t>& idx) {
        Dataset part;
        part.feature_names = ds.feature_names;
        part.target_transform = ds.target_transform;
        part.provenance = ds.provenance;
        part.X.resize(static_cast<Eigen::Index>(idx.size()), ds.X.cols());
        part.y.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            part.X.row(static_cast<Eigen::Index>(i)) = ds.X.row(static_cast<Eigen::Index>(idx[i]));
            part.y(static_cast<Eigen::Index>(i)) = ds.y(static_cast<Eigen::Index>(idx[i]));
        }
        return part;
    };
    return {take(train_idx), take(test_idx)};
}

inline Scaler fit_scaler(const Matrix& X) {
    if (X.rows() < 1) throw Error("fit_scaler: empty matrix");
    Scaler s;
    s.means = X.colwise().mean();
    s.stds.resize(X.cols());
    const double n = static_cast<double>(X.rows());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double var = (X.col(j).array() - s.means(j)).square().sum() / n;
        const double sd = std::sqrt(var);
        s.stds(j) = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

inline Matrix apply_scaler(const Scaler& s, const Matrix& X) {
    if (X.cols() != s.means.size()) throw Error("apply_scaler: dimension mismatch");
    return ((X.rowwise() - s.means.transpose()).array().rowwise() /
            s.stds.transpose().array())
        .matrix();
}

inline Matrix invert_scaler(const Scaler& s, const Matrix& Z) {
    if (Z.cols() != s.means.size()) throw Error("invert_scaler: dimension mismatch");
    return (Z.array().rowwise() * s.stds.transpose().array()).matrix().rowwise() +
           s.means.transpose();
}

}  // namespace regkit
