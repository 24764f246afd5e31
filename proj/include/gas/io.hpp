#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gas/graph.hpp"
#include "gas/partition.hpp"

namespace gas {

struct Dataset {
    Graph graph;
    FeatureMatrix features;
    LabelSet labels;
};

// ---- Dataset files -------------------------------------------------------
// graph.txt    : one "u v" pair per line, '#' comments allowed
// features.bin : magic "GASF", u32 num_nodes, u32 dim, f32 row-major (LE)
// labels.txt   : one "node_id label split" per line, split in {train,val,test,none}

std::vector<Edge> load_edge_list(const std::string& path);
void save_edge_list(const std::string& path, const Graph& g);

FeatureMatrix load_features(const std::string& path);
void save_features(const std::string& path, const FeatureMatrix& m);

LabelSet load_labels(const std::string& path, NodeId num_nodes);
void save_labels(const std::string& path, const LabelSet& labels);

// Loads graph.txt / features.bin / labels.txt from dir, checks node counts
// agree, and symmetrizes the graph.
Dataset load_dataset(const std::string& dir);
void save_dataset(const std::string& dir, const Dataset& ds);

// Partition file: one "node_id part_id" per line.
void save_partition(const std::string& path, const Partitioning& p);
Partitioning load_partition(const std::string& path, NodeId num_nodes);

// ---- Synthetic generators -------------------------------------------------

enum class FeatureMode { kOneHotNoisy, kRandom };

struct SbmParams {
    std::int32_t blocks = 4;
    std::int32_t nodes_per_block = 100;
    double p_in = 0.3;
    double p_out = 0.01;
    FeatureMode feature_mode = FeatureMode::kOneHotNoisy;
    std::int32_t feature_dim = 0;  // 0: one dim per block
    double noise = 1.0;            // one-hot-noisy feature noise scale
    double train_frac = 0.1;
    double val_frac = 0.1;
    std::uint64_t seed = 0;
};

Dataset gen_sbm(const SbmParams& params);

// Planted-cluster graph with a controllable inter/intra ratio: `parts` groups
// of `size` core nodes with random intra-group edges, plus `inter_nodes`
// extra nodes wired to cores of other groups. Labels carry the natural part id.
struct ClusteredParams {
    std::int32_t parts = 4;
    std::int32_t size = 500;
    std::int32_t intra_deg = 8;
    std::int32_t inter_nodes = 0;
    std::int32_t inter_deg = 8;
    std::int32_t feature_dim = 16;
    std::uint64_t seed = 0;
};

Dataset gen_clustered(const ClusteredParams& params);

// ---- Experiment configuration ---------------------------------------------
// Flat "key = value" file; '#' comments; unknown keys are rejected.

class ExperimentConfig {
  public:
    static ExperimentConfig parse_file(const std::string& path);
    static ExperimentConfig parse_text(const std::string& text);

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;  // throws if missing
    std::string get_or(const std::string& key, const std::string& def) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double def) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int_or(const std::string& key, std::int64_t def) const;
    bool get_bool_or(const std::string& key, bool def) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

  private:
    std::map<std::string, std::string> entries_;
};

}  // namespace gas
