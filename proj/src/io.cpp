#include "gas/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gas/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary dataset formats assume a little-endian host");

namespace gas {

namespace {

std::runtime_error parse_error(const std::string& path, std::size_t line, const std::string& what) {
    return std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::string strip_comment(const std::string& line) {
    auto pos = line.find('#');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

bool blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

std::vector<Edge> load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge list: " + path);
    std::vector<Edge> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body = strip_comment(line);
        if (blank(body)) continue;
        std::istringstream ss(body);
        long long u, v;
        if (!(ss >> u >> v)) throw parse_error(path, lineno, "expected 'u v'");
        std::string rest;
        if (ss >> rest) throw parse_error(path, lineno, "trailing content '" + rest + "'");
        if (u < 0 || v < 0) throw parse_error(path, lineno, "negative node id");
        edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
    return edges;
}

void save_edge_list(const std::string& path, const Graph& g) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write edge list: " + path);
    for (NodeId v = 0; v < g.num_nodes; ++v)
        for (NodeId w : g.neighbors(v)) {
            if (g.is_symmetric && w > v) continue;  // emit each undirected pair once
            out << w << " " << v << "\n";
        }
}

namespace {
constexpr char kFeatureMagic[4] = {'G', 'A', 'S', 'F'};
}

FeatureMatrix load_features(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open feature file: " + path);
    FeatureMatrix m;
    try {
        char magic[4];
        if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, kFeatureMagic, 4) != 0)
            throw std::runtime_error("feature file " + path + ": bad magic (want GASF)");
        std::uint32_t nodes = 0, dim = 0;
        if (std::fread(&nodes, 4, 1, f) != 1 || std::fread(&dim, 4, 1, f) != 1)
            throw std::runtime_error("feature file " + path + ": truncated header");
        m = FeatureMatrix(static_cast<std::int64_t>(nodes), static_cast<std::int64_t>(dim));
        const std::size_t want = m.values.size();
        const std::size_t got = std::fread(m.values.data(), sizeof(float), want, f);
        if (got != want)
            throw std::runtime_error("feature file " + path + ": expected " +
                                     std::to_string(want * sizeof(float)) + " payload bytes, got " +
                                     std::to_string(got * sizeof(float)));
        require_finite(m, "feature file");
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);
    return m;
}

void save_features(const std::string& path, const FeatureMatrix& m) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot write feature file: " + path);
    const std::uint32_t nodes = static_cast<std::uint32_t>(m.rows);
    const std::uint32_t dim = static_cast<std::uint32_t>(m.cols);
    bool ok = std::fwrite(kFeatureMagic, 1, 4, f) == 4 && std::fwrite(&nodes, 4, 1, f) == 1 &&
              std::fwrite(&dim, 4, 1, f) == 1 &&
              std::fwrite(m.values.data(), sizeof(float), m.values.size(), f) == m.values.size();
    std::fclose(f);
    if (!ok) throw std::runtime_error("failed writing feature file: " + path);
}

LabelSet load_labels(const std::string& path, NodeId num_nodes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open label file: " + path);
    LabelSet ls;
    ls.labels.assign(static_cast<std::size_t>(num_nodes), -1);
    ls.train_mask.assign(static_cast<std::size_t>(num_nodes), 0);
    ls.val_mask.assign(static_cast<std::size_t>(num_nodes), 0);
    ls.test_mask.assign(static_cast<std::size_t>(num_nodes), 0);

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body = strip_comment(line);
        if (blank(body)) continue;
        std::istringstream ss(body);
        long long node, label;
        std::string split;
        if (!(ss >> node >> label >> split))
            throw parse_error(path, lineno, "expected 'node_id label split'");
        if (node < 0 || node >= num_nodes) throw parse_error(path, lineno, "node id out of range");
        if (label < 0) throw parse_error(path, lineno, "negative label");
        const NodeId v = static_cast<NodeId>(node);
        ls.labels[v] = static_cast<std::int32_t>(label);
        ls.num_classes = std::max(ls.num_classes, static_cast<std::int32_t>(label) + 1);
        if (split == "train")
            ls.train_mask[v] = 1;
        else if (split == "val")
            ls.val_mask[v] = 1;
        else if (split == "test")
            ls.test_mask[v] = 1;
        else if (split != "none")
            throw parse_error(path, lineno, "unknown split '" + split + "'");
    }
    return ls;
}

void save_labels(const std::string& path, const LabelSet& labels) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write label file: " + path);
    for (std::size_t v = 0; v < labels.labels.size(); ++v) {
        if (labels.labels[v] < 0) continue;
        const char* split = labels.train_mask[v]  ? "train"
                            : labels.val_mask[v]  ? "val"
                            : labels.test_mask[v] ? "test"
                                                  : "none";
        out << v << " " << labels.labels[v] << " " << split << "\n";
    }
}

Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    Dataset ds;
    ds.features = load_features((fs::path(dir) / "features.bin").string());
    const NodeId n = static_cast<NodeId>(ds.features.rows);
    auto edges = load_edge_list((fs::path(dir) / "graph.txt").string());
    for (const auto& [u, v] : edges)
        if (u >= n || v >= n)
            throw std::runtime_error("dataset " + dir + ": edge (" + std::to_string(u) + "," +
                                     std::to_string(v) + ") exceeds feature row count " +
                                     std::to_string(n));
    ds.graph = build_graph(edges, n, /*symmetrize=*/true);
    ds.labels = load_labels((fs::path(dir) / "labels.txt").string(), n);
    if (static_cast<NodeId>(ds.labels.labels.size()) != n)
        throw std::runtime_error("dataset " + dir + ": label/feature node count mismatch");
    return ds;
}

void save_dataset(const std::string& dir, const Dataset& ds) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    save_edge_list((fs::path(dir) / "graph.txt").string(), ds.graph);
    save_features((fs::path(dir) / "features.bin").string(), ds.features);
    save_labels((fs::path(dir) / "labels.txt").string(), ds.labels);
}

void save_partition(const std::string& path, const Partitioning& p) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write partition file: " + path);
    for (std::size_t v = 0; v < p.assignment.size(); ++v)
        out << v << " " << p.assignment[v] << "\n";
}

Partitioning load_partition(const std::string& path, NodeId num_nodes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open partition file: " + path);
    std::vector<std::int32_t> assignment(static_cast<std::size_t>(num_nodes), -1);
    std::int32_t max_part = -1;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body = strip_comment(line);
        if (blank(body)) continue;
        std::istringstream ss(body);
        long long node, part;
        if (!(ss >> node >> part)) throw parse_error(path, lineno, "expected 'node_id part_id'");
        if (node < 0 || node >= num_nodes) throw parse_error(path, lineno, "node id out of range");
        if (part < 0) throw parse_error(path, lineno, "negative part id");
        assignment[node] = static_cast<std::int32_t>(part);
        max_part = std::max(max_part, static_cast<std::int32_t>(part));
    }
    for (std::size_t v = 0; v < assignment.size(); ++v)
        if (assignment[v] < 0)
            throw std::runtime_error(path + ": node " + std::to_string(v) + " unassigned");
    return partition_from_assignment(std::move(assignment), max_part + 1);
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

namespace {

void assign_splits(LabelSet& ls, double train_frac, double val_frac, std::uint64_t seed) {
    const std::size_t n = ls.labels.size();
    std::vector<NodeId> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<NodeId>(i);
    Rng rng(derive_seed(seed, 0x73706c69));  // "spli"
    rng.shuffle(order);
    const std::size_t n_train = static_cast<std::size_t>(train_frac * double(n));
    const std::size_t n_val = static_cast<std::size_t>(val_frac * double(n));
    ls.train_mask.assign(n, 0);
    ls.val_mask.assign(n, 0);
    ls.test_mask.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (i < n_train)
            ls.train_mask[order[i]] = 1;
        else if (i < n_train + n_val)
            ls.val_mask[order[i]] = 1;
        else
            ls.test_mask[order[i]] = 1;
    }
}

}  // namespace

Dataset gen_sbm(const SbmParams& params) {
    if (params.blocks <= 0 || params.nodes_per_block <= 0)
        throw std::invalid_argument("gen_sbm: blocks and nodes_per_block must be positive");
    if (params.p_in < 0.0 || params.p_in > 1.0 || params.p_out < 0.0 || params.p_out > 1.0)
        throw std::invalid_argument("gen_sbm: probabilities must be in [0,1]");

    const NodeId n = params.blocks * params.nodes_per_block;
    std::vector<std::int32_t> block(static_cast<std::size_t>(n));
    for (NodeId v = 0; v < n; ++v) block[v] = v / params.nodes_per_block;

    Rng edge_rng(derive_seed(params.seed, 0x73626d65));  // "sbme"
    std::vector<Edge> edges;
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j) {
            const double p = block[i] == block[j] ? params.p_in : params.p_out;
            if (edge_rng.next_double() < p) edges.emplace_back(i, j);
        }

    Dataset ds;
    ds.graph = build_graph(edges, n, /*symmetrize=*/true);

    const std::int32_t dim =
        params.feature_dim > 0 ? params.feature_dim
                               : (params.feature_mode == FeatureMode::kOneHotNoisy ? params.blocks : 16);
    ds.features = FeatureMatrix(n, dim);
    Rng feat_rng(derive_seed(params.seed, 0x73626d66));  // "sbmf"
    for (NodeId v = 0; v < n; ++v) {
        float* row = ds.features.row(v);
        if (params.feature_mode == FeatureMode::kOneHotNoisy) {
            for (std::int32_t j = 0; j < dim; ++j)
                row[j] = static_cast<float>(params.noise * feat_rng.next_normal());
            row[block[v] % dim] += 1.0f;
        } else {
            for (std::int32_t j = 0; j < dim; ++j)
                row[j] = static_cast<float>(feat_rng.next_normal());
        }
    }

    ds.labels.labels.assign(block.begin(), block.end());
    ds.labels.num_classes = params.blocks;
    assign_splits(ds.labels, params.train_frac, params.val_frac, params.seed);
    return ds;
}

Dataset gen_clustered(const ClusteredParams& params) {
    if (params.parts <= 0 || params.size <= 0)
        throw std::invalid_argument("gen_clustered: parts and size must be positive");
    if (params.intra_deg >= params.size)
        throw std::invalid_argument("gen_clustered: intra_deg must be below part size");

    const NodeId n_core = params.parts * params.size;
    const NodeId n = n_core + params.inter_nodes;
    Rng rng(derive_seed(params.seed, 0x636c6765));  // "clge"

    std::vector<Edge> edges;
    // Core nodes: intra_deg random partners inside the same group.
    for (NodeId v = 0; v < n_core; ++v) {
        const NodeId group = v / params.size;
        const NodeId base = group * params.size;
        std::set<NodeId> picked;
        while (static_cast<std::int32_t>(picked.size()) < params.intra_deg) {
            NodeId w = base + static_cast<NodeId>(rng.next_below(params.size));
            if (w != v) picked.insert(w);
        }
        for (NodeId w : picked) edges.emplace_back(v, w);
    }
    // Extra nodes: round-robin home group, wired to cores of other groups.
    for (NodeId e = 0; e < params.inter_nodes; ++e) {
        const NodeId v = n_core + e;
        const NodeId home = e % params.parts;
        std::set<NodeId> picked;
        const std::int32_t wanted =
            std::min<std::int32_t>(params.inter_deg, (params.parts - 1) * params.size);
        while (static_cast<std::int32_t>(picked.size()) < wanted && params.parts > 1) {
            NodeId group = static_cast<NodeId>(rng.next_below(params.parts));
            if (group == home) continue;
            NodeId w = group * params.size + static_cast<NodeId>(rng.next_below(params.size));
            picked.insert(w);
        }
        for (NodeId w : picked) edges.emplace_back(v, w);
    }

    Dataset ds;
    ds.graph = build_graph(edges, n, /*symmetrize=*/true);
    ds.features = FeatureMatrix(n, params.feature_dim);
    Rng feat_rng(derive_seed(params.seed, 0x636c6766));  // "clgf"
    for (float& v : ds.features.values) v = static_cast<float>(feat_rng.next_normal());

    ds.labels.labels.resize(static_cast<std::size_t>(n));
    for (NodeId v = 0; v < n_core; ++v) ds.labels.labels[v] = v / params.size;
    for (NodeId e = 0; e < params.inter_nodes; ++e)
        ds.labels.labels[n_core + e] = e % params.parts;
    ds.labels.num_classes = params.parts;
    assign_splits(ds.labels, 0.1, 0.1, params.seed);
    return ds;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

namespace {

const std::set<std::string>& allowed_config_keys() {
    static const std::set<std::string> keys = {
        "model.kind",       "model.layers",        "model.hidden",   "model.mlp_hidden",
        "model.dropout",    "model.alpha",         "model.beta",     "model.gin_eps",
        "model.gin_train_eps",
        "train.lr",         "train.epochs",        "train.parts",    "train.method",
        "train.warmup",     "train.prefetch",      "train.staleness",
        "reg.l2",           "reg.lipschitz_weight", "reg.delta",
        "clip.max_norm",    "seed",
        "paths.dataset",    "paths.out",
        "verify.cases",     "verify.seed",
    };
    return keys;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body = strip_comment(line);
        if (blank(body)) continue;
        auto eq = body.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config:" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(body.substr(0, eq));
        std::string value = trim(body.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::runtime_error("config:" + std::to_string(lineno) + ": empty key or value");
        if (!allowed_config_keys().count(key))
            throw std::invalid_argument("config:" + std::to_string(lineno) + ": unknown key '" +
                                        key + "'");
        cfg.entries_[key] = value;
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

bool ExperimentConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string ExperimentConfig::get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
        throw std::invalid_argument("config: missing required key '" + key + "'");
    return it->second;
}

std::string ExperimentConfig::get_or(const std::string& key, const std::string& def) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? def : it->second;
}

double ExperimentConfig::get_double(const std::string& key) const {
    try {
        return std::stod(get(key));
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("config: key '" + key + "' is not a number");
    }
}

double ExperimentConfig::get_double_or(const std::string& key, double def) const {
    return has(key) ? get_double(key) : def;
}

std::int64_t ExperimentConfig::get_int(const std::string& key) const {
    try {
        return std::stoll(get(key));
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("config: key '" + key + "' is not an integer");
    }
}

std::int64_t ExperimentConfig::get_int_or(const std::string& key, std::int64_t def) const {
    return has(key) ? get_int(key) : def;
}

bool ExperimentConfig::get_bool_or(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const std::string v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config: key '" + key + "' is not a boolean");
}

}  // namespace gas
