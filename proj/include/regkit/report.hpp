#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "regkit/artifact.hpp"
#include "regkit/common.hpp"
#include "regkit/gbdt.hpp"
#include "regkit/select.hpp"

namespace regkit {

struct ReportRow {
    std::string model;
    std::string setup;
    bool failed = false;
    std::string note;
    double model_score = 0.0;  // R^2 on the training partition
    double r2 = 0.0;
    double adj_r2 = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    double cv_score = 0.0;
};

struct RunReport {
    std::vector<ReportRow> rows;
    nlohmann::json context;  // run settings echoed into the report
};

struct PlotData {
    std::vector<std::pair<double, double>> scatter;  // (actual, predicted), test rows
    std::vector<double> bin_edges;                   // bins + 1 edges
    std::vector<std::uint64_t> bin_counts;
};

inline PlotData make_plot_data(const Vector& actual, const Vector& predicted,
                               std::size_t bins = 30) {
    if (actual.size() != predicted.size() || actual.size() == 0)
        throw Error("make_plot_data: bad inputs");
    if (bins == 0) throw Error("make_plot_data: need at least one bin");
    PlotData plot;
    plot.scatter.reserve(static_cast<std::size_t>(actual.size()));
    for (Eigen::Index i = 0; i < actual.size(); ++i)
        plot.scatter.emplace_back(actual(i), predicted(i));

    Vector res = actual - predicted;
    const double lo = res.minCoeff();
    const double hi = res.maxCoeff();
    plot.bin_counts.assign(bins, 0);
    plot.bin_edges.resize(bins + 1);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t b = 0; b <= bins; ++b)
        plot.bin_edges[b] = lo + width * static_cast<double>(b);
    plot.bin_edges[bins] = hi;
    for (Eigen::Index i = 0; i < res.size(); ++i) {
        std::size_t b = 0;
        if (width > 0.0) {
            b = static_cast<std::size_t>((res(i) - lo) / width);
            if (b >= bins) b = bins - 1;
        }
        ++plot.bin_counts[b];
    }
    return plot;
}

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt3(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace detail

inline std::string scatter_to_text(const PlotData& plot) {
    std::string out = "# actual predicted\n";
    for (const auto& [a, p] : plot.scatter)
        out += detail::fmt17(a) + " " + detail::fmt17(p) + "\n";
    return out;
}

inline std::string histogram_to_text(const PlotData& plot) {
    std::string out = "# residual_low residual_high count\n";
    for (std::size_t b = 0; b < plot.bin_counts.size(); ++b)
        out += detail::fmt17(plot.bin_edges[b]) + " " + detail::fmt17(plot.bin_edges[b + 1]) +
               " " + std::to_string(plot.bin_counts[b]) + "\n";
    return out;
}

inline nlohmann::json report_to_json(const RunReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        nlohmann::json row;
        row["model"] = r.model;
        row["setup"] = r.setup;
        if (r.failed) {
            row["failed"] = true;
            row["note"] = r.note;
        } else {
            row["model_score"] = r.model_score;
            row["r2"] = r.r2;
            row["adj_r2"] = r.adj_r2;
            row["mse"] = r.mse;
            row["rmse"] = r.rmse;
            row["mae"] = r.mae;
            row["cv_score"] = r.cv_score;
            if (!r.note.empty()) row["note"] = r.note;
        }
        rows.push_back(std::move(row));
    }
    nlohmann::json out;
    out["rows"] = std::move(rows);
    out["context"] = report.context;
    return out;
}

inline RunReport report_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("rows") || !j["rows"].is_array())
        throw Error("report json: expected an object with a 'rows' array");
    RunReport report;
    for (const auto& row : j["rows"]) {
        ReportRow r;
        r.model = row.at("model").get<std::string>();
        r.setup = row.value("setup", std::string{});
        r.failed = row.value("failed", false);
        r.note = row.value("note", std::string{});
        if (!r.failed) {
            r.model_score = row.at("model_score").get<double>();
            r.r2 = row.at("r2").get<double>();
            r.adj_r2 = row.at("adj_r2").get<double>();
            r.mse = row.at("mse").get<double>();
            r.rmse = row.at("rmse").get<double>();
            r.mae = row.at("mae").get<double>();
            r.cv_score = row.at("cv_score").get<double>();
        }
        report.rows.push_back(std::move(r));
    }
    if (j.contains("context")) report.context = j["context"];
    return report;
}

// Fixed column order, three decimals, aligned for terminals.
inline std::string report_to_text(const RunReport& report) {
    const std::vector<std::string> header = {"model", "setup",    "model_score", "r2",
                                             "adj_r2", "mse",     "rmse",        "mae",
                                             "cv_score"};
    std::vector<std::vector<std::string>> cells;
    cells.push_back(header);
    for (const auto& r : report.rows) {
        if (r.failed) {
            cells.push_back({r.model, r.setup, "failed", "-", "-", "-", "-", "-", "-"});
            continue;
        }
        cells.push_back({r.model, r.setup, detail::fmt3(r.model_score), detail::fmt3(r.r2),
                         detail::fmt3(r.adj_r2), detail::fmt3(r.mse), detail::fmt3(r.rmse),
                         detail::fmt3(r.mae), detail::fmt3(r.cv_score)});
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::string out;
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += row[c];
            if (c + 1 < row.size()) out.append(width[c] - row[c].size() + 2, ' ');
        }
        out += "\n";
    }
    for (const auto& r : report.rows)
        if (r.failed && !r.note.empty()) out += "note " + r.model + ": " + r.note + "\n";
    return out;
}

// Descending by gain share, ties by name; zero-share features are omitted,
// so a splitless model exports an empty ranking.
inline std::vector<std::pair<std::string, double>> export_importance(
    const BoostModel& model, const std::vector<std::string>& feature_names, std::size_t top_n) {
    const auto scores = feature_importance(model);
    if (scores.size() != feature_names.size())
        throw Error("export_importance: feature name count mismatch");
    std::vector<std::pair<std::string, double>> ranked;
    for (std::size_t j = 0; j < scores.size(); ++j)
        if (scores[j] > 0.0) ranked.emplace_back(feature_names[j], scores[j]);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > top_n) ranked.resize(top_n);
    return ranked;
}

inline std::string importance_to_text(const std::vector<std::pair<std::string, double>>& ranked) {
    std::string out = "# rank\tfeature\tgain_share\n";
    for (std::size_t i = 0; i < ranked.size(); ++i)
        out += std::to_string(i + 1) + "\t" + ranked[i].first + "\t" +
               detail::fmt17(ranked[i].second) + "\n";
    return out;
}

inline std::string search_to_text(const SearchResult& result) {
    std::string out = "# rank\tcv_score\tfold_r2\tconfig\n";
    for (const auto& ev : result.evaluated) {
        out += std::to_string(ev.rank + 1) + "\t";
        out += ev.failed ? "failed" : detail::fmt17(ev.cv_score);
        out += "\t";
        for (std::size_t i = 0; i < ev.fold_r2.size(); ++i) {
            if (i) out += ",";
            out += detail::fmt17(ev.fold_r2[i]);
        }
        out += "\t";
        for (std::size_t i = 0; i < ev.config.size(); ++i) {
            if (i) out += ",";
            out += ev.config[i].first + "=" + ev.config[i].second;
        }
        if (ev.failed) out += "\t" + ev.diagnostic;
        out += "\n";
    }
    return out;
}

struct DriftResult {
    bool pass = true;
    double threshold = 2.0;
    double delta_cv = 0.0;
    std::vector<std::pair<std::string, double>> deltas;  // candidate - golden
};

// Candidate regresses when its cv_score drops more than threshold points
// below the stored golden score.
inline DriftResult drift_check(const ModelArtifact& golden, const ReportRow& candidate,
                               double threshold) {
    if (candidate.failed) throw Error("drift_check: candidate row is a failure marker");
    DriftResult out;
    out.threshold = threshold;
    out.delta_cv = candidate.cv_score - golden.meta.cv_score;
    out.deltas = {
        {"model_score", candidate.model_score - golden.meta.model_score},
        {"r2", candidate.r2 - golden.meta.r2},
        {"adj_r2", candidate.adj_r2 - golden.meta.adj_r2},
        {"mse", candidate.mse - golden.meta.mse},
        {"rmse", candidate.rmse - golden.meta.rmse},
        {"mae", candidate.mae - golden.meta.mae},
        {"cv_score", out.delta_cv},
    };
    out.pass = !(candidate.cv_score < golden.meta.cv_score - threshold);
    return out;
}

inline std::string drift_to_text(const DriftResult& d) {
    std::string out = d.pass ? "drift-check: pass\n" : "drift-check: fail\n";
    out += "threshold " + detail::fmt3(d.threshold) + " cv points\n";
    for (const auto& [name, delta] : d.deltas) out += name + " delta " + detail::fmt17(delta) + "\n";
    return out;
}

}  // namespace regkit
