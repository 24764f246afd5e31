#include "gas/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gas/log.hpp"

namespace gas {

bool Graph::has_edge(NodeId src, NodeId dst) const {
    auto row = neighbors(dst);
    return std::binary_search(row.begin(), row.end(), src);
}

std::vector<Edge> Graph::export_edges() const {
    std::vector<Edge> out;
    out.reserve(col_indices.size());
    for (NodeId v = 0; v < num_nodes; ++v)
        for (NodeId w : neighbors(v)) out.emplace_back(w, v);  // edge w -> v
    return out;
}

Graph build_graph(std::span<const Edge> edges, NodeId num_nodes, bool symmetrize) {
    if (num_nodes < 0) throw std::invalid_argument("build_graph: negative node count");
    for (const auto& [u, v] : edges) {
        if (u < 0 || u >= num_nodes || v < 0 || v >= num_nodes)
            throw std::invalid_argument("build_graph: edge (" + std::to_string(u) + "," +
                                        std::to_string(v) + ") out of range for " +
                                        std::to_string(num_nodes) + " nodes");
    }

    // Row v collects sources w of edges w -> v.
    std::vector<std::vector<NodeId>> rows(static_cast<std::size_t>(num_nodes));
    for (const auto& [u, v] : edges) {
        rows[v].push_back(u);
        if (symmetrize && u != v) rows[u].push_back(v);
    }

    Graph g;
    g.num_nodes = num_nodes;
    g.is_symmetric = symmetrize;
    g.row_offsets.assign(static_cast<std::size_t>(num_nodes) + 1, 0);

    std::int64_t dropped = 0;
    for (NodeId v = 0; v < num_nodes; ++v) {
        auto& row = rows[v];
        std::sort(row.begin(), row.end());
        auto last = std::unique(row.begin(), row.end());
        dropped += row.end() - last;
        row.erase(last, row.end());
        g.row_offsets[v + 1] = g.row_offsets[v] + static_cast<std::int64_t>(row.size());
    }
    if (dropped > 0) log::debug("build_graph: dropped %lld duplicate edges", (long long)dropped);

    g.col_indices.reserve(static_cast<std::size_t>(g.row_offsets[num_nodes]));
    for (NodeId v = 0; v < num_nodes; ++v)
        g.col_indices.insert(g.col_indices.end(), rows[v].begin(), rows[v].end());
    return g;
}

double gcn_norm(const Graph& g, NodeId w, NodeId v) {
    if (w < 0 || w >= g.num_nodes || v < 0 || v >= g.num_nodes)
        throw std::invalid_argument("gcn_norm: node id out of range");
    double dw = static_cast<double>(g.degree(w)) + 1.0;
    double dv = static_cast<double>(g.degree(v)) + 1.0;
    return 1.0 / (std::sqrt(dw) * std::sqrt(dv));
}

std::vector<NodeId> LabelSet::masked_nodes(const std::vector<std::uint8_t>& mask) const {
    std::vector<NodeId> out;
    for (std::size_t v = 0; v < mask.size(); ++v)
        if (mask[v]) out.push_back(static_cast<NodeId>(v));
    return out;
}

BatchPlan make_batch_plan(const Graph& g, std::span<const NodeId> batch_nodes) {
    if (batch_nodes.empty()) throw std::invalid_argument("make_batch_plan: empty batch");
    for (std::size_t i = 0; i < batch_nodes.size(); ++i) {
        NodeId v = batch_nodes[i];
        if (v < 0 || v >= g.num_nodes)
            throw std::invalid_argument("make_batch_plan: node id out of range");
        if (i > 0 && batch_nodes[i] <= batch_nodes[i - 1])
            throw std::invalid_argument("make_batch_plan: batch nodes must be sorted and unique");
    }

    BatchPlan plan;
    plan.batch_nodes.assign(batch_nodes.begin(), batch_nodes.end());

    // V_b = union of N(v) and {v} over the batch.
    std::vector<std::uint8_t> in_batch(static_cast<std::size_t>(g.num_nodes), 0);
    for (NodeId v : batch_nodes) in_batch[v] = 1;
    std::vector<std::uint8_t> in_ext = in_batch;
    for (NodeId v : batch_nodes)
        for (NodeId w : g.neighbors(v)) in_ext[w] = 1;

    for (NodeId v = 0; v < g.num_nodes; ++v)
        if (in_ext[v]) plan.extended_nodes.push_back(v);

    plan.is_halo.resize(plan.extended_nodes.size());
    plan.global_to_local.reserve(plan.extended_nodes.size() * 2);
    for (std::size_t i = 0; i < plan.extended_nodes.size(); ++i) {
        NodeId v = plan.extended_nodes[i];
        plan.is_halo[i] = !in_batch[v];
        plan.global_to_local.emplace(v, static_cast<NodeId>(i));
        if (in_batch[v])
            plan.batch_local_rows.push_back(static_cast<NodeId>(i));
        else {
            plan.halo_nodes.push_back(v);
            plan.halo_local_rows.push_back(static_cast<NodeId>(i));
        }
    }

    // Local CSR: in-edges for batch rows only; halo rows stay empty.
    Graph& lg = plan.local_graph;
    lg.num_nodes = plan.num_extended();
    lg.is_symmetric = false;
    lg.row_offsets.assign(static_cast<std::size_t>(lg.num_nodes) + 1, 0);
    for (std::size_t i = 0; i < plan.extended_nodes.size(); ++i) {
        if (plan.is_halo[i]) continue;
        lg.row_offsets[i + 1] = static_cast<std::int64_t>(g.degree(plan.extended_nodes[i]));
    }
    for (std::size_t i = 0; i < plan.extended_nodes.size(); ++i)
        lg.row_offsets[i + 1] += lg.row_offsets[i];
    lg.col_indices.resize(static_cast<std::size_t>(lg.row_offsets.back()));
    for (std::size_t i = 0; i < plan.extended_nodes.size(); ++i) {
        if (plan.is_halo[i]) continue;
        std::int64_t pos = lg.row_offsets[i];
        for (NodeId w : g.neighbors(plan.extended_nodes[i]))
            lg.col_indices[pos++] = plan.global_to_local.at(w);
    }
    return plan;
}

}  // namespace gas
