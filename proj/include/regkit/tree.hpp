#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "regkit/common.hpp"
#include "regkit/rng.hpp"

namespace regkit {

struct GradStats {
    double G = 0.0;  // sum of first-order gradients over a row set
    double H = 0.0;  // sum of second-order terms
};

inline double leaf_weight(const GradStats& s, double lambda) {
    const double denom = s.H + lambda;
    if (denom <= 0.0) throw Error("leaf_weight: H + lambda must be positive");
    return -s.G / denom;
}

inline double split_gain(const GradStats& left, const GradStats& right, double lambda,
                         double gamma) {
    const double hl = left.H + lambda;
    const double hr = right.H + lambda;
    if (hl <= 0.0 || hr <= 0.0) throw Error("split_gain: child H + lambda must be positive");
    const double g = left.G + right.G;
    const double h = left.H + right.H + lambda;
    return 0.5 * (left.G * left.G / hl + right.G * right.G / hr - g * g / h) - gamma;
}

struct GrowthParams {
    std::size_t max_depth = 6;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;  // columns sampled per split; 0 means all
    double min_gain = 0.0;
};

// Per-node scoring contract shared by variance trees (all fields zero,
// stats g = -y, h = 1) and gradient-boosted trees.
struct SplitCriterion {
    double lambda = 0.0;
    double gamma = 0.0;
    double min_child_hess = 0.0;
};

struct TreeNode {
    std::int32_t feature_index = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
    std::uint64_t n_samples = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;  // preorder; front() is the root
};

inline double predict_tree(const Tree& tree, const double* x, std::size_t dim) {
    if (tree.nodes.empty()) throw Error("predict_tree: empty tree");
    const TreeNode* node = tree.nodes.data();
    while (node->feature_index >= 0) {
        if (static_cast<std::size_t>(node->feature_index) >= dim)
            throw Error("predict_tree: feature index out of range");
        const std::int32_t next =
            x[node->feature_index] <= node->threshold ? node->left : node->right;
        node = tree.nodes.data() + next;
    }
    return node->value;
}

inline double predict_tree(const Tree& tree, const Vector& x) {
    return predict_tree(tree, x.data(), static_cast<std::size_t>(x.size()));
}

inline Vector predict_tree_batch(const Tree& tree, const Matrix& X) {
    Vector out(X.rows());
    Vector row(X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        row = X.row(i);
        out(i) = predict_tree(tree, row.data(), static_cast<std::size_t>(row.size()));
    }
    return out;
}

struct SplitChoice {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

// Row ids 0..n-1 sorted ascending by each column's value (ties by row id).
struct SortedOrders {
    std::vector<std::vector<std::uint32_t>> by_feature;
};

inline SortedOrders sort_features(const Matrix& X) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto d = static_cast<std::size_t>(X.cols());
    SortedOrders orders;
    orders.by_feature.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        auto& ord = orders.by_feature[j];
        ord.resize(n);
        for (std::size_t i = 0; i < n; ++i) ord[i] = static_cast<std::uint32_t>(i);
        const double* col = X.col(static_cast<Eigen::Index>(j)).data();
        std::sort(ord.begin(), ord.end(), [col](std::uint32_t a, std::uint32_t b) {
            if (col[a] != col[b]) return col[a] < col[b];
            return a < b;
        });
    }
    return orders;
}

namespace detail {

// One pass over a node's rows in ascending order of one column's values.
// Candidate thresholds sit halfway between consecutive distinct values; a
// candidate is admissible when both children satisfy min_samples_leaf and
// min_child_hess. Updates best_gain/best_threshold when a candidate beats
// best_gain strictly, so with columns visited in ascending index order the
// overall winner is the lowest (feature, threshold) among maximizers.
struct ScanInput {
    const double* values;        // column data, indexed by row id
    const std::uint32_t* order;  // node's row ids, ascending by value
    std::size_t count;
    const double* g;
    const double* h;
    const std::uint32_t* mult;  // per-row multiplicity, or nullptr for 1
};

inline bool best_threshold_scan(const ScanInput& in, const GrowthParams& params,
                                const SplitCriterion& crit, double total_g, double total_h,
                                std::uint64_t total_n, double& best_gain,
                                double& best_threshold) {
    bool improved = false;
    double gl = 0.0, hl = 0.0;
    std::uint64_t nl = 0;
    for (std::size_t i = 0; i + 1 < in.count; ++i) {
        const std::uint32_t r = in.order[i];
        const double m = in.mult ? static_cast<double>(in.mult[r]) : 1.0;
        gl += m * in.g[r];
        hl += m * in.h[r];
        nl += in.mult ? in.mult[r] : 1;
        const double v = in.values[r];
        const double vn = in.values[in.order[i + 1]];
        if (!(v < vn)) continue;
        const double t = v + (vn - v) * 0.5;
        if (!(v < t && t < vn)) continue;  // adjacent floats collapse the midpoint
        const std::uint64_t nr = total_n - nl;
        if (nl < params.min_samples_leaf || nr < params.min_samples_leaf) continue;
        const double gr = total_g - gl;
        const double hr = total_h - hl;
        if (hl < crit.min_child_hess || hr < crit.min_child_hess) continue;
        if (hl + crit.lambda <= 0.0 || hr + crit.lambda <= 0.0) continue;
        const double gain = split_gain({gl, hl}, {gr, hr}, crit.lambda, crit.gamma);
        if (gain > best_gain) {
            best_gain = gain;
            best_threshold = t;
            improved = true;
        }
    }
    return improved;
}

}  // namespace detail

// Exhaustive threshold search over the sampled columns for one row set.
// Returns nothing when no admissible candidate exceeds params.min_gain.
inline std::optional<SplitChoice> best_split(const Matrix& X,
                                             const std::vector<std::uint32_t>& rows,
                                             const std::vector<double>& g,
                                             const std::vector<double>& h,
                                             const GrowthParams& params,
                                             const SplitCriterion& crit,
                                             std::vector<std::size_t> feature_sample) {
    std::sort(feature_sample.begin(), feature_sample.end());
    double total_g = 0.0, total_h = 0.0;
    for (const auto r : rows) {
        total_g += g[r];
        total_h += h[r];
    }
    SplitChoice best;
    double best_gain = params.min_gain;
    bool found = false;
    std::vector<std::uint32_t> order;
    for (const auto f : feature_sample) {
        if (f >= static_cast<std::size_t>(X.cols())) throw Error("best_split: bad feature index");
        const double* col = X.col(static_cast<Eigen::Index>(f)).data();
        order = rows;
        std::sort(order.begin(), order.end(), [col](std::uint32_t a, std::uint32_t b) {
            if (col[a] != col[b]) return col[a] < col[b];
            return a < b;
        });
        detail::ScanInput in{col, order.data(), order.size(), g.data(), h.data(), nullptr};
        double threshold = 0.0;
        if (detail::best_threshold_scan(in, params, crit, total_g, total_h,
                                        static_cast<std::uint64_t>(order.size()), best_gain,
                                        threshold)) {
            best.feature = f;
            best.threshold = threshold;
            best.gain = best_gain;
            found = true;
        }
    }
    if (!found) return std::nullopt;
    return best;
}

namespace detail {

struct GrowWorkspace {
    const Matrix* X = nullptr;
    const double* g = nullptr;
    const double* h = nullptr;
    const std::uint32_t* mult = nullptr;
    GrowthParams params;
    SplitCriterion crit;
    Rng* rng = nullptr;
    std::size_t n_features_sampled = 0;
    std::vector<std::vector<std::uint32_t>> ord;  // per feature, node segments
    std::vector<std::uint32_t> rows;              // canonical segment (ascending id)
    std::vector<std::uint32_t> scratch;
    std::vector<char> goes_left;  // indexed by row id
    std::vector<double>* importance = nullptr;
    std::vector<TreeNode> nodes;

    std::int32_t build(std::size_t begin, std::size_t end, std::size_t depth) {
        double G = 0.0, H = 0.0;
        std::uint64_t N = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t r = rows[i];
            const double m = mult ? static_cast<double>(mult[r]) : 1.0;
            G += m * g[r];
            H += m * h[r];
            N += mult ? mult[r] : 1;
        }
        const auto idx = static_cast<std::int32_t>(nodes.size());
        TreeNode node;
        node.value = leaf_weight({G, H}, crit.lambda);
        node.n_samples = N;
        nodes.push_back(node);

        if (depth >= params.max_depth || end - begin < 2 ||
            N < 2 * static_cast<std::uint64_t>(params.min_samples_leaf))
            return idx;

        const auto d = static_cast<std::size_t>(X->cols());
        std::vector<std::size_t> sample;
        if (n_features_sampled >= d) {
            sample.resize(d);
            for (std::size_t j = 0; j < d; ++j) sample[j] = j;
        } else {
            const auto picks = rng->choose(d, n_features_sampled);
            sample.assign(picks.begin(), picks.end());
            std::sort(sample.begin(), sample.end());
        }

        double best_gain = params.min_gain;
        double best_threshold = 0.0;
        std::int64_t best_feature = -1;
        for (const auto f : sample) {
            ScanInput in{X->col(static_cast<Eigen::Index>(f)).data(), ord[f].data() + begin,
                         end - begin, g, h, mult};
            if (best_threshold_scan(in, params, crit, G, H, N, best_gain, best_threshold))
                best_feature = static_cast<std::int64_t>(f);
        }
        if (best_feature < 0) return idx;

        if (importance) (*importance)[static_cast<std::size_t>(best_feature)] += best_gain;

        const double* col = X->col(static_cast<Eigen::Index>(best_feature)).data();
        for (std::size_t i = begin; i < end; ++i)
            goes_left[rows[i]] = col[rows[i]] <= best_threshold ? 1 : 0;

        auto partition = [&](std::vector<std::uint32_t>& arr) {
            std::size_t write = begin;
            std::size_t spill = 0;
            for (std::size_t i = begin; i < end; ++i) {
                const std::uint32_t r = arr[i];
                if (goes_left[r]) arr[write++] = r;
                else scratch[spill++] = r;
            }
            std::copy(scratch.begin(), scratch.begin() + static_cast<long>(spill),
                      arr.begin() + static_cast<long>(write));
            return write;  // first right-side position
        };
        const std::size_t mid = partition(rows);
        for (auto& o : ord) partition(o);

        nodes[idx].feature_index = static_cast<std::int32_t>(best_feature);
        nodes[idx].threshold = best_threshold;
        const std::int32_t left = build(begin, mid, depth + 1);
        const std::int32_t right = build(mid, end, depth + 1);
        nodes[idx].left = left;
        nodes[idx].right = right;
        return idx;
    }
};

}  // namespace detail

// Greedy recursive growth. g/h are per-row statistics over all of X's rows;
// multiplicity (when given) weights each row and excludes zero-count rows,
// which is how bootstrap resamples and per-round subsampling are expressed
// without materializing row copies. presorted, when supplied, must be
// sort_features(X) and lets repeated fits on the same X skip the sort.
inline Tree grow(const Matrix& X, const std::vector<double>& g, const std::vector<double>& h,
                 const std::vector<std::uint32_t>* multiplicity, const GrowthParams& params,
                 const SplitCriterion& crit, Rng& rng, const SortedOrders* presorted = nullptr,
                 std::vector<double>* importance = nullptr) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto d = static_cast<std::size_t>(X.cols());
    if (g.size() != n || h.size() != n) throw Error("grow: statistic length mismatch");
    if (multiplicity && multiplicity->size() != n) throw Error("grow: multiplicity length mismatch");
    if (d == 0) throw Error("grow: no feature columns");
    if (importance && importance->size() != d) throw Error("grow: importance length mismatch");

    detail::GrowWorkspace ws;
    ws.X = &X;
    ws.g = g.data();
    ws.h = h.data();
    ws.mult = multiplicity ? multiplicity->data() : nullptr;
    ws.params = params;
    ws.crit = crit;
    ws.rng = &rng;
    ws.importance = importance;
    ws.n_features_sampled = params.max_features == 0 ? d : params.max_features;
    if (ws.n_features_sampled > d) throw Error("grow: max_features exceeds feature count");

    for (std::size_t i = 0; i < n; ++i)
        if (!multiplicity || (*multiplicity)[i] > 0) ws.rows.push_back(static_cast<std::uint32_t>(i));
    if (ws.rows.empty()) throw Error("grow: no rows");
    ws.scratch.resize(ws.rows.size());
    ws.goes_left.assign(n, 0);

    ws.ord.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        auto& o = ws.ord[j];
        if (presorted) {
            if (presorted->by_feature.size() != d || presorted->by_feature[j].size() != n)
                throw Error("grow: presorted orders do not match X");
            o.reserve(ws.rows.size());
            for (const auto r : presorted->by_feature[j])
                if (!multiplicity || (*multiplicity)[r] > 0) o.push_back(r);
        } else {
            o = ws.rows;
            const double* col = X.col(static_cast<Eigen::Index>(j)).data();
            std::sort(o.begin(), o.end(), [col](std::uint32_t a, std::uint32_t b) {
                if (col[a] != col[b]) return col[a] < col[b];
                return a < b;
            });
        }
    }

    ws.build(0, ws.rows.size(), 0);
    Tree tree;
    tree.nodes = std::move(ws.nodes);
    return tree;
}

// Variance-criterion regression tree: under stats g = -y, h = 1 the shared
// gain reduces to half the split's sum-of-squares reduction and the leaf
// value to the (multiplicity-weighted) mean.
inline Tree fit_cart(const Matrix& X, const Vector& y, const GrowthParams& params, Rng& rng,
                     const std::vector<std::uint32_t>* multiplicity = nullptr,
                     const SortedOrders* presorted = nullptr) {
    if (X.rows() != y.size()) throw Error("fit_cart: row count mismatch");
    if (!X.allFinite() || !y.allFinite()) throw Error("fit_cart: non-finite input");
    const auto n = static_cast<std::size_t>(X.rows());
    std::vector<double> g(n), h(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) g[i] = -y(static_cast<Eigen::Index>(i));
    return grow(X, g, h, multiplicity, params, SplitCriterion{}, rng, presorted);
}

}  // namespace regkit
