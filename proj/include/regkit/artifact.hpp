#pragma once

#include <zlib.h>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "regkit/common.hpp"
#include "regkit/csv.hpp"
#include "regkit/dataset.hpp"
#include "regkit/model.hpp"
#include "regkit/schema.hpp"
#include "regkit/tree.hpp"

namespace regkit {

inline std::string fnv1a64_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Everything needed to turn raw rows into model inputs at prediction time.
struct PreprocessRecord {
    std::string schema_digest;
    TargetTransform transform = TargetTransform::identity;
    std::vector<std::string> column_names;  // training-table order
    std::vector<Cell> impute_values;        // aligned with column_names
    std::vector<std::vector<std::string>> categories;
    std::vector<std::string> feature_names;
    bool scaled = false;
    Scaler scaler;
};

struct ArtifactMetadata {
    std::uint64_t seed = 0;
    std::string setup;
    double model_score = 0.0;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    double cv_score = 0.0;
};

struct ModelArtifact {
    std::uint32_t version = 1;
    ModelKind kind = ModelKind::linreg;
    PreprocessRecord preprocess;
    AnyModel model;
    ArtifactMetadata meta;
};

namespace detail {

struct ByteWriter {
    std::string buf;
    void u8(std::uint8_t v) { buf.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void str(const std::string& s) {
        u64(s.size());
        buf.append(s);
    }
    void str_list(const std::vector<std::string>& v) {
        u64(v.size());
        for (const auto& s : v) str(s);
    }
    void vec(const Vector& v) {
        u64(static_cast<std::uint64_t>(v.size()));
        for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
    }
    void mat(const Matrix& m) {
        u64(static_cast<std::uint64_t>(m.rows()));
        u64(static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
};

struct ByteReader {
    const std::string& buf;
    std::size_t at = 0;
    explicit ByteReader(const std::string& b) : buf(b) {}
    void need(std::size_t n) const {
        if (at + n > buf.size()) throw Error("artifact payload truncated");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[at++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[at++])) << (8 * i);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        const std::uint64_t n = u64();
        need(n);
        std::string s = buf.substr(at, n);
        at += n;
        return s;
    }
    std::vector<std::string> str_list() {
        const std::uint64_t n = u64();
        std::vector<std::string> v;
        v.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) v.push_back(str());
        return v;
    }
    Vector vec() {
        const std::uint64_t n = u64();
        Vector v(static_cast<Eigen::Index>(n));
        for (std::uint64_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = f64();
        return v;
    }
    Matrix mat() {
        const std::uint64_t r = u64();
        const std::uint64_t c = u64();
        Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        for (std::uint64_t i = 0; i < r; ++i)
            for (std::uint64_t j = 0; j < c; ++j)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f64();
        return m;
    }
};

// Trees travel as one text record per node, preorder:
// "feature threshold left right value n_samples", 17 significant digits.
inline std::string tree_to_text(const Tree& tree) {
    std::string out;
    char line[160];
    for (const auto& n : tree.nodes) {
        std::snprintf(line, sizeof line, "%d %.17g %d %d %.17g %llu\n", n.feature_index,
                      n.threshold, n.left, n.right, n.value,
                      static_cast<unsigned long long>(n.n_samples));
        out += line;
    }
    return out;
}

inline Tree tree_from_text(const std::string& text) {
    Tree tree;
    std::size_t pos = 0;
    auto next_token = [&](const char*& b, const char* end) {
        while (b < end && *b == ' ') ++b;
        return b < end;
    };
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        const char* b = text.data() + pos;
        const char* end = text.data() + eol;
        TreeNode node;
        long long fi, li, ri;
        auto read_ll = [&](long long& v) {
            if (!next_token(b, end)) throw Error("artifact tree record truncated");
            const auto r = std::from_chars(b, end, v);
            if (r.ec != std::errc{}) throw Error("artifact tree record malformed");
            b = r.ptr;
        };
        auto read_d = [&](double& v) {
            if (!next_token(b, end)) throw Error("artifact tree record truncated");
            char* stop = nullptr;
            v = std::strtod(b, &stop);
            if (stop == b) throw Error("artifact tree record malformed");
            b = stop;
        };
        read_ll(fi);
        read_d(node.threshold);
        read_ll(li);
        read_ll(ri);
        read_d(node.value);
        long long ns_tmp;
        read_ll(ns_tmp);
        node.feature_index = static_cast<std::int32_t>(fi);
        node.left = static_cast<std::int32_t>(li);
        node.right = static_cast<std::int32_t>(ri);
        node.n_samples = static_cast<std::uint64_t>(ns_tmp);
        tree.nodes.push_back(node);
        pos = eol + 1;
    }
    if (tree.nodes.empty()) throw Error("artifact tree record empty");
    return tree;
}

inline void write_cell(ByteWriter& w, const Cell& c) {
    if (c.is_missing()) {
        w.u8(0);
    } else if (c.is_number()) {
        w.u8(1);
        w.f64(c.number);
    } else {
        w.u8(2);
        w.str(c.text);
    }
}

inline Cell read_cell(ByteReader& r) {
    switch (r.u8()) {
        case 0: return Cell::missing();
        case 1: return Cell::num(r.f64());
        case 2: return Cell::str(r.str());
        default: throw Error("artifact cell tag malformed");
    }
}

inline void write_trees(ByteWriter& w, const std::vector<Tree>& trees) {
    w.u64(trees.size());
    for (const auto& t : trees) w.str(tree_to_text(t));
}

inline std::vector<Tree> read_trees(ByteReader& r) {
    const std::uint64_t n = r.u64();
    std::vector<Tree> trees;
    trees.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) trees.push_back(tree_from_text(r.str()));
    return trees;
}

inline std::string encode_preprocess(const PreprocessRecord& p) {
    ByteWriter w;
    w.str(p.schema_digest);
    w.u8(p.transform == TargetTransform::log1p ? 1 : 0);
    w.str_list(p.column_names);
    w.u64(p.impute_values.size());
    for (const auto& c : p.impute_values) write_cell(w, c);
    w.u64(p.categories.size());
    for (const auto& cats : p.categories) w.str_list(cats);
    w.str_list(p.feature_names);
    w.u8(p.scaled ? 1 : 0);
    w.vec(p.scaler.means);
    w.vec(p.scaler.stds);
    return w.buf;
}

inline PreprocessRecord decode_preprocess(const std::string& bytes) {
    ByteReader r(bytes);
    PreprocessRecord p;
    p.schema_digest = r.str();
    p.transform = r.u8() ? TargetTransform::log1p : TargetTransform::identity;
    p.column_names = r.str_list();
    const std::uint64_t n_cells = r.u64();
    for (std::uint64_t i = 0; i < n_cells; ++i) p.impute_values.push_back(read_cell(r));
    const std::uint64_t n_cats = r.u64();
    for (std::uint64_t i = 0; i < n_cats; ++i) p.categories.push_back(r.str_list());
    p.feature_names = r.str_list();
    p.scaled = r.u8() != 0;
    p.scaler.means = r.vec();
    p.scaler.stds = r.vec();
    return p;
}

inline std::string encode_model(const AnyModel& m) {
    ByteWriter w;
    switch (m.model.index()) {
        case 0: {
            const auto& lm = std::get<LinearModel>(m.model);
            w.f64(lm.intercept);
            w.vec(lm.coefficients);
            break;
        }
        case 1: {
            const auto& mm = std::get<MlpModel>(m.model);
            const auto& p = mm.params;
            w.u64(p.hidden_sizes.size());
            for (const auto s : p.hidden_sizes) w.u64(s);
            w.u8(static_cast<std::uint8_t>(p.activation));
            w.f64(p.alpha);
            w.u64(p.max_iter);
            w.u64(p.seed);
            w.u8(p.solver == MlpSolver::gd ? 0 : 1);
            w.f64(p.tol);
            w.u64(mm.weights.size());
            for (std::size_t l = 0; l < mm.weights.size(); ++l) {
                w.mat(mm.weights[l]);
                w.vec(mm.biases[l]);
            }
            break;
        }
        case 2: {
            const auto& fm = std::get<ForestModel>(m.model);
            const auto& p = fm.params;
            w.u64(p.n_estimators);
            w.u64(p.growth.max_depth);
            w.u64(p.growth.min_samples_leaf);
            w.u64(p.growth.max_features);
            w.f64(p.growth.min_gain);
            w.u8(p.bootstrap ? 1 : 0);
            w.u64(p.seed);
            write_trees(w, fm.trees);
            break;
        }
        case 3: {
            const auto& sm = std::get<SvrModel>(m.model);
            const auto& p = sm.params;
            w.f64(p.C);
            w.f64(p.epsilon);
            w.u8(p.kernel.kind == KernelKind::linear ? 0 : 1);
            w.f64(p.kernel.gamma);
            w.f64(p.tol);
            w.u64(p.max_passes);
            w.f64(sm.bias);
            w.mat(sm.support_rows);
            w.vec(sm.dual_coefs);
            w.u8(sm.diagnostics.converged ? 1 : 0);
            w.u64(sm.diagnostics.updates);
            w.f64(sm.diagnostics.final_gap);
            break;
        }
        default: {
            const auto& bm = std::get<BoostModel>(m.model);
            const auto& p = bm.params;
            w.u64(p.n_rounds);
            w.f64(p.learning_rate);
            w.f64(p.lambda);
            w.f64(p.gamma);
            w.u64(p.max_depth);
            w.f64(p.min_child_weight);
            w.f64(p.subsample);
            w.u8(p.base_score ? 1 : 0);
            w.f64(p.base_score ? *p.base_score : 0.0);
            w.u64(p.seed);
            w.f64(bm.base_score);
            write_trees(w, bm.trees);
            w.u64(bm.importance_raw.size());
            for (const auto v : bm.importance_raw) w.f64(v);
            break;
        }
    }
    return w.buf;
}

inline AnyModel decode_model(ModelKind kind, const std::string& bytes) {
    ByteReader r(bytes);
    AnyModel m;
    switch (kind) {
        case ModelKind::linreg: {
            LinearModel lm;
            lm.intercept = r.f64();
            lm.coefficients = r.vec();
            m.params = LinregParams{};
            m.model = std::move(lm);
            break;
        }
        case ModelKind::mlp: {
            MlpModel mm;
            MlpParams p;
            const std::uint64_t nh = r.u64();
            p.hidden_sizes.clear();
            for (std::uint64_t i = 0; i < nh; ++i) p.hidden_sizes.push_back(r.u64());
            p.activation = static_cast<Activation>(r.u8());
            p.alpha = r.f64();
            p.max_iter = r.u64();
            p.seed = r.u64();
            p.solver = r.u8() == 0 ? MlpSolver::gd : MlpSolver::lbfgs;
            p.tol = r.f64();
            mm.params = p;
            const std::uint64_t layers = r.u64();
            for (std::uint64_t l = 0; l < layers; ++l) {
                mm.weights.push_back(r.mat());
                mm.biases.push_back(r.vec());
            }
            m.params = p;
            m.model = std::move(mm);
            break;
        }
        case ModelKind::forest: {
            ForestParams p;
            p.n_estimators = r.u64();
            p.growth.max_depth = r.u64();
            p.growth.min_samples_leaf = r.u64();
            p.growth.max_features = r.u64();
            p.growth.min_gain = r.f64();
            p.bootstrap = r.u8() != 0;
            p.seed = r.u64();
            ForestModel fm;
            fm.params = p;
            fm.trees = read_trees(r);
            m.params = p;
            m.model = std::move(fm);
            break;
        }
        case ModelKind::svr: {
            SvrParams p;
            p.C = r.f64();
            p.epsilon = r.f64();
            p.kernel.kind = r.u8() == 0 ? KernelKind::linear : KernelKind::rbf;
            p.kernel.gamma = r.f64();
            p.tol = r.f64();
            p.max_passes = r.u64();
            SvrModel sm;
            sm.params = p;
            sm.kernel = p.kernel;
            sm.bias = r.f64();
            sm.support_rows = r.mat();
            sm.dual_coefs = r.vec();
            sm.diagnostics.converged = r.u8() != 0;
            sm.diagnostics.updates = r.u64();
            sm.diagnostics.final_gap = r.f64();
            m.params = p;
            m.model = std::move(sm);
            break;
        }
        case ModelKind::boost: {
            BoostParams p;
            p.n_rounds = r.u64();
            p.learning_rate = r.f64();
            p.lambda = r.f64();
            p.gamma = r.f64();
            p.max_depth = r.u64();
            p.min_child_weight = r.f64();
            p.subsample = r.f64();
            const bool has_base = r.u8() != 0;
            const double base = r.f64();
            if (has_base) p.base_score = base;
            p.seed = r.u64();
            BoostModel bm;
            bm.params = p;
            bm.base_score = r.f64();
            bm.trees = read_trees(r);
            const std::uint64_t ni = r.u64();
            for (std::uint64_t i = 0; i < ni; ++i) bm.importance_raw.push_back(r.f64());
            m.params = p;
            m.model = std::move(bm);
            break;
        }
    }
    return m;
}

inline std::string encode_metadata(const ArtifactMetadata& meta) {
    ByteWriter w;
    w.u64(meta.seed);
    w.str(meta.setup);
    w.f64(meta.model_score);
    w.f64(meta.r2);
    w.f64(meta.adj_r2);
    w.f64(meta.mse);
    w.f64(meta.rmse);
    w.f64(meta.mae);
    w.f64(meta.cv_score);
    return w.buf;
}

inline ArtifactMetadata decode_metadata(const std::string& bytes) {
    ByteReader r(bytes);
    ArtifactMetadata meta;
    meta.seed = r.u64();
    meta.setup = r.str();
    meta.model_score = r.f64();
    meta.r2 = r.f64();
    meta.adj_r2 = r.f64();
    meta.mse = r.f64();
    meta.rmse = r.f64();
    meta.mae = r.f64();
    meta.cv_score = r.f64();
    return meta;
}

inline constexpr char kArtifactMagic[8] = {'R', 'E', 'G', 'K', 'I', 'T', 'M', 'L'};

}  // namespace detail

inline void save_model(const ModelArtifact& artifact, const std::string& path) {
    detail::ByteWriter w;
    w.buf.append(detail::kArtifactMagic, sizeof detail::kArtifactMagic);
    w.u32(artifact.version);
    w.u32(static_cast<std::uint32_t>(artifact.kind));
    w.str(detail::encode_preprocess(artifact.preprocess));
    w.str(detail::encode_model(artifact.model));
    w.str(detail::encode_metadata(artifact.meta));
    const auto crc = static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(w.buf.data()), static_cast<uInt>(w.buf.size())));
    w.u32(crc);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("save_model: cannot open '" + path + "'");
    out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
    if (!out) throw Error("save_model: write failed for '" + path + "'");
}

inline ModelArtifact load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load_model: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof detail::kArtifactMagic + 4 + 4 + 4)
        throw Error("load_model: artifact truncated");
    const std::string body = bytes.substr(0, bytes.size() - 4);
    detail::ByteReader crc_reader(bytes);
    crc_reader.at = bytes.size() - 4;
    const std::uint32_t stored_crc = crc_reader.u32();
    const auto crc = static_cast<std::uint32_t>(::crc32(
        0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
    if (crc != stored_crc) throw Error("load_model: checksum mismatch (corrupted artifact)");
    if (std::memcmp(body.data(), detail::kArtifactMagic, sizeof detail::kArtifactMagic) != 0)
        throw Error("load_model: not a model artifact");

    detail::ByteReader r(body);
    r.at = sizeof detail::kArtifactMagic;
    ModelArtifact artifact;
    artifact.version = r.u32();
    if (artifact.version != 1)
        throw Error("load_model: unsupported artifact version " + std::to_string(artifact.version));
    const std::uint32_t kind_tag = r.u32();
    if (kind_tag > 4) throw Error("load_model: unknown model kind tag");
    artifact.kind = static_cast<ModelKind>(kind_tag);
    artifact.preprocess = detail::decode_preprocess(r.str());
    artifact.model = detail::decode_model(artifact.kind, r.str());
    artifact.meta = detail::decode_metadata(r.str());
    artifact.model.scaled = artifact.preprocess.scaled;
    if (artifact.model.scaled) artifact.model.scaler = artifact.preprocess.scaler;
    return artifact;
}

}  // namespace regkit
