#pragma once

#include <cstdint>
#include <vector>

#include "gas/graph.hpp"

namespace gas {

// Disjoint cover of the node set into num_parts non-empty parts.
struct Partitioning {
    std::int32_t num_parts = 0;
    std::vector<std::int32_t> assignment;   // per node part id
    std::vector<std::vector<NodeId>> parts; // sorted node lists

    bool valid_for(const Graph& g) const;
};

Partitioning partition_from_assignment(std::vector<std::int32_t> assignment,
                                       std::int32_t num_parts);

// Balanced random split: part sizes differ by at most one; deterministic per seed.
Partitioning random_partition(const Graph& g, std::int32_t num_parts, std::uint64_t seed);

// Multilevel scheme: heavy-edge-matching coarsening, greedy seeded growth on the
// coarsest graph, boundary Kernighan-Lin-style refinement during uncoarsening.
// Balance constraint: max part size <= 1.1 * ceil(n / num_parts).
Partitioning cluster_partition(const Graph& g, std::int32_t num_parts, std::uint64_t seed);

// Edges crossing a part boundary divided by edges inside a part. Stored
// (directed) edges are counted; the ratio is unaffected by symmetrization.
// Returns +infinity when there are inter edges but no intra edges, 0 when the
// graph has no edges.
double inter_intra_ratio(const Graph& g, const Partitioning& p);

// Number of unordered adjacent pairs with endpoints in different parts.
std::int64_t edge_cut(const Graph& g, const Partitioning& p);

}  // namespace gas
