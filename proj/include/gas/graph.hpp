#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gas/matrix.hpp"

namespace gas {

using NodeId = std::int32_t;
using Edge = std::pair<NodeId, NodeId>;

// Immutable CSR adjacency. Row v holds the sorted in-neighbors of v, i.e. the
// sources that feed v during aggregation. Undirected input is symmetrized at
// build time so row v equals N(v).
struct Graph {
    NodeId num_nodes = 0;
    bool is_symmetric = false;
    std::vector<std::int64_t> row_offsets;  // length num_nodes + 1
    std::vector<NodeId> col_indices;        // strictly increasing within a row

    std::int64_t num_edges() const { return static_cast<std::int64_t>(col_indices.size()); }

    std::span<const NodeId> neighbors(NodeId v) const {
        return {col_indices.data() + row_offsets[v],
                static_cast<std::size_t>(row_offsets[v + 1] - row_offsets[v])};
    }

    NodeId degree(NodeId v) const {
        return static_cast<NodeId>(row_offsets[v + 1] - row_offsets[v]);
    }

    bool has_edge(NodeId src, NodeId dst) const;

    // Directed edge list (dst, src) pairs expanded from CSR rows, as
    // (source, destination). Rebuilding from this list round-trips.
    std::vector<Edge> export_edges() const;
};

// Builds a CSR graph from an edge list. Edges are stored directed; when
// `symmetrize` is set the reverse of every edge is inserted too. Duplicate
// edges are dropped (logged at debug level); self-loops are kept as given.
Graph build_graph(std::span<const Edge> edges, NodeId num_nodes, bool symmetrize);

inline Graph build_graph(const std::vector<Edge>& edges, NodeId num_nodes, bool symmetrize) {
    return build_graph(std::span<const Edge>(edges.data(), edges.size()), num_nodes, symmetrize);
}

// Symmetric-normalization coefficient 1 / (sqrt(deg(w)+1) sqrt(deg(v)+1))
// with degrees taken from g (self-loops counted only if stored).
double gcn_norm(const Graph& g, NodeId w, NodeId v);

// Node labels plus train/val/test masks (pairwise disjoint).
struct LabelSet {
    std::vector<std::int32_t> labels;  // -1 where unlabeled
    std::int32_t num_classes = 0;
    std::vector<std::uint8_t> train_mask;
    std::vector<std::uint8_t> val_mask;
    std::vector<std::uint8_t> test_mask;

    std::size_t num_nodes() const { return labels.size(); }
    std::vector<NodeId> masked_nodes(const std::vector<std::uint8_t>& mask) const;
};

// One mini-batch of Algorithm-style execution: the batch nodes B_b, their
// 1-hop extension V_b, and the induced local graph over dense local indices.
// Halo nodes (V_b minus B_b) appear only as sources; their local rows are empty.
struct BatchPlan {
    std::vector<NodeId> batch_nodes;     // sorted global ids
    std::vector<NodeId> extended_nodes;  // sorted global ids, includes batch_nodes
    std::vector<NodeId> halo_nodes;      // sorted global ids, extended minus batch
    std::vector<std::uint8_t> is_halo;   // per extended node
    Graph local_graph;                   // |extended| nodes, in-edges of batch rows only
    std::unordered_map<NodeId, NodeId> global_to_local;

    std::vector<NodeId> batch_local_rows;  // local index of each batch node
    std::vector<NodeId> halo_local_rows;   // local index of each halo node

    NodeId num_batch() const { return static_cast<NodeId>(batch_nodes.size()); }
    NodeId num_extended() const { return static_cast<NodeId>(extended_nodes.size()); }
    NodeId num_halo() const { return static_cast<NodeId>(halo_nodes.size()); }
};

// batch_nodes must be sorted, unique and non-empty.
BatchPlan make_batch_plan(const Graph& g, std::span<const NodeId> batch_nodes);

inline BatchPlan make_batch_plan(const Graph& g, const std::vector<NodeId>& batch_nodes) {
    return make_batch_plan(g, std::span<const NodeId>(batch_nodes.data(), batch_nodes.size()));
}

}  // namespace gas
