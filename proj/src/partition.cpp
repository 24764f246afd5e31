#include "gas/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "gas/rng.hpp"

namespace gas {

namespace {

// Weighted graph used on coarse levels. Self-loops are dropped; parallel
// edges produced by contraction are merged with summed weights.
struct LevelGraph {
    std::int32_t n = 0;
    std::vector<std::int64_t> xadj;
    std::vector<std::int32_t> adj;
    std::vector<std::int64_t> edge_w;
    std::vector<std::int64_t> node_w;
};

LevelGraph level_from_graph(const Graph& g) {
    LevelGraph lg;
    lg.n = g.num_nodes;
    lg.xadj.assign(static_cast<std::size_t>(g.num_nodes) + 1, 0);
    lg.node_w.assign(static_cast<std::size_t>(g.num_nodes), 1);
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        std::int64_t deg = 0;
        for (NodeId w : g.neighbors(v))
            if (w != v) ++deg;
        lg.xadj[v + 1] = lg.xadj[v] + deg;
    }
    lg.adj.resize(static_cast<std::size_t>(lg.xadj.back()));
    lg.edge_w.assign(static_cast<std::size_t>(lg.xadj.back()), 1);
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        std::int64_t pos = lg.xadj[v];
        for (NodeId w : g.neighbors(v))
            if (w != v) lg.adj[pos++] = w;
    }
    return lg;
}

struct Matching {
    std::vector<std::int32_t> coarse_of;  // fine node -> coarse id
    std::int32_t coarse_n = 0;
};

Matching heavy_edge_matching(const LevelGraph& lg, Rng& rng) {
    std::vector<std::int32_t> order(static_cast<std::size_t>(lg.n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    std::vector<std::int32_t> mate(static_cast<std::size_t>(lg.n), -1);
    for (std::int32_t v : order) {
        if (mate[v] >= 0) continue;
        std::int32_t best = -1;
        std::int64_t best_w = -1;
        for (std::int64_t e = lg.xadj[v]; e < lg.xadj[v + 1]; ++e) {
            std::int32_t u = lg.adj[e];
            if (mate[u] >= 0 || u == v) continue;
            if (lg.edge_w[e] > best_w || (lg.edge_w[e] == best_w && (best < 0 || u < best))) {
                best = u;
                best_w = lg.edge_w[e];
            }
        }
        if (best >= 0) {
            mate[v] = best;
            mate[best] = v;
        } else {
            mate[v] = v;
        }
    }

    Matching m;
    m.coarse_of.assign(static_cast<std::size_t>(lg.n), -1);
    for (std::int32_t v = 0; v < lg.n; ++v) {
        if (m.coarse_of[v] >= 0) continue;
        std::int32_t u = mate[v];
        m.coarse_of[v] = m.coarse_n;
        if (u != v && u >= 0) m.coarse_of[u] = m.coarse_n;
        ++m.coarse_n;
    }
    return m;
}

LevelGraph contract(const LevelGraph& lg, const Matching& m) {
    LevelGraph cg;
    cg.n = m.coarse_n;
    cg.node_w.assign(static_cast<std::size_t>(cg.n), 0);
    for (std::int32_t v = 0; v < lg.n; ++v) cg.node_w[m.coarse_of[v]] += lg.node_w[v];

    std::vector<std::vector<std::pair<std::int32_t, std::int64_t>>> rows(
        static_cast<std::size_t>(cg.n));
    for (std::int32_t v = 0; v < lg.n; ++v) {
        std::int32_t cv = m.coarse_of[v];
        for (std::int64_t e = lg.xadj[v]; e < lg.xadj[v + 1]; ++e) {
            std::int32_t cu = m.coarse_of[lg.adj[e]];
            if (cu != cv) rows[cv].emplace_back(cu, lg.edge_w[e]);
        }
    }
    cg.xadj.assign(static_cast<std::size_t>(cg.n) + 1, 0);
    for (std::int32_t c = 0; c < cg.n; ++c) {
        auto& row = rows[c];
        std::sort(row.begin(), row.end());
        std::size_t out = 0;
        for (std::size_t i = 0; i < row.size();) {
            std::int64_t w = 0;
            std::size_t j = i;
            while (j < row.size() && row[j].first == row[i].first) w += row[j++].second;
            row[out++] = {row[i].first, w};
            i = j;
        }
        row.resize(out);
        cg.xadj[c + 1] = cg.xadj[c] + static_cast<std::int64_t>(out);
    }
    cg.adj.resize(static_cast<std::size_t>(cg.xadj.back()));
    cg.edge_w.resize(static_cast<std::size_t>(cg.xadj.back()));
    for (std::int32_t c = 0; c < cg.n; ++c) {
        std::int64_t pos = cg.xadj[c];
        for (auto& [u, w] : rows[c]) {
            cg.adj[pos] = u;
            cg.edge_w[pos] = w;
            ++pos;
        }
    }
    return cg;
}

// Greedy seeded growth on the coarsest graph. The lightest part grows next,
// taking the unassigned boundary node with the highest connectivity to it.
// Chunky coarse nodes may overshoot the cap; refinement repairs that on the
// way back down.
std::vector<std::int32_t> grow_initial(const LevelGraph& lg, std::int32_t parts, Rng& rng) {
    std::vector<std::int32_t> part(static_cast<std::size_t>(lg.n), -1);
    std::vector<std::int64_t> load(static_cast<std::size_t>(parts), 0);

    std::vector<std::int32_t> order(static_cast<std::size_t>(lg.n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    // Seeds: first unassigned nodes in shuffled order, one per part.
    std::size_t cursor = 0;
    for (std::int32_t p = 0; p < parts; ++p) {
        while (cursor < order.size() && part[order[cursor]] >= 0) ++cursor;
        if (cursor >= order.size()) break;
        part[order[cursor]] = p;
        load[p] = lg.node_w[order[cursor]];
    }

    std::int32_t assigned = std::min<std::int32_t>(parts, lg.n);
    while (assigned < lg.n) {
        std::int32_t p = 0;
        for (std::int32_t q = 1; q < parts; ++q)
            if (load[q] < load[p]) p = q;

        std::int32_t best = -1;
        std::int64_t best_conn = -1;
        for (std::int32_t v = 0; v < lg.n; ++v) {
            if (part[v] >= 0) continue;
            std::int64_t conn = 0;
            bool touches = false;
            for (std::int64_t e = lg.xadj[v]; e < lg.xadj[v + 1]; ++e) {
                if (part[lg.adj[e]] == p) {
                    conn += lg.edge_w[e];
                    touches = true;
                }
            }
            if (touches && conn > best_conn) {
                best = v;
                best_conn = conn;
            }
        }
        if (best < 0) {  // disconnected remainder: take lowest-id unassigned node
            for (std::int32_t v = 0; v < lg.n; ++v)
                if (part[v] < 0) {
                    best = v;
                    break;
                }
        }
        part[best] = p;
        load[p] += lg.node_w[best];
        ++assigned;
    }
    return part;
}

// One boundary refinement sweep: move a node to the neighboring part with the
// highest connectivity gain, subject to the balance cap and non-empty parts.
// Ascending node id order keeps the result deterministic.
std::int64_t refine_pass(const LevelGraph& lg, std::vector<std::int32_t>& part,
                         std::vector<std::int64_t>& load, std::int64_t cap,
                         std::int32_t parts) {
    std::vector<std::int64_t> conn(static_cast<std::size_t>(parts), 0);
    std::vector<std::int64_t> part_count(static_cast<std::size_t>(parts), 0);
    for (std::int32_t v = 0; v < lg.n; ++v) ++part_count[part[v]];

    std::int64_t moves = 0;
    for (std::int32_t v = 0; v < lg.n; ++v) {
        std::int32_t a = part[v];
        if (part_count[a] <= 1) continue;
        std::fill(conn.begin(), conn.end(), 0);
        bool boundary = false;
        for (std::int64_t e = lg.xadj[v]; e < lg.xadj[v + 1]; ++e) {
            conn[part[lg.adj[e]]] += lg.edge_w[e];
            if (part[lg.adj[e]] != a) boundary = true;
        }
        if (!boundary) continue;
        std::int32_t best = a;
        std::int64_t best_gain = 0;
        for (std::int32_t p = 0; p < parts; ++p) {
            if (p == a || conn[p] == 0) continue;
            if (load[p] + lg.node_w[v] > cap) continue;
            std::int64_t gain = conn[p] - conn[a];
            if (gain > best_gain) {
                best = p;
                best_gain = gain;
            }
        }
        if (best != a) {
            load[a] -= lg.node_w[v];
            load[best] += lg.node_w[v];
            --part_count[a];
            ++part_count[best];
            part[v] = best;
            ++moves;
        }
    }
    return moves;
}

// Enforce the cap by evicting lowest-loss boundary nodes from overfull parts.
void repair_balance(const LevelGraph& lg, std::vector<std::int32_t>& part,
                    std::vector<std::int64_t>& load, std::int64_t cap,
                    std::int32_t parts) {
    for (std::int32_t a = 0; a < parts; ++a) {
        while (load[a] > cap) {
            std::int32_t best_v = -1, best_p = -1;
            std::int64_t best_score = std::numeric_limits<std::int64_t>::min();
            for (std::int32_t v = 0; v < lg.n; ++v) {
                if (part[v] != a) continue;
                for (std::int32_t p = 0; p < parts; ++p) {
                    if (p == a || load[p] + lg.node_w[v] > cap) continue;
                    std::int64_t conn_p = 0, conn_a = 0;
                    for (std::int64_t e = lg.xadj[v]; e < lg.xadj[v + 1]; ++e) {
                        if (part[lg.adj[e]] == p) conn_p += lg.edge_w[e];
                        if (part[lg.adj[e]] == a) conn_a += lg.edge_w[e];
                    }
                    std::int64_t score = conn_p - conn_a;
                    if (score > best_score) {
                        best_score = score;
                        best_v = v;
                        best_p = p;
                    }
                }
            }
            if (best_v < 0) break;  // cannot improve further
            load[a] -= lg.node_w[best_v];
            load[best_p] += lg.node_w[best_v];
            part[best_v] = best_p;
        }
    }
}

void ensure_nonempty(const LevelGraph& lg, std::vector<std::int32_t>& part,
                     std::vector<std::int64_t>& load, std::int32_t parts) {
    std::vector<std::int64_t> count(static_cast<std::size_t>(parts), 0);
    for (std::int32_t v = 0; v < lg.n; ++v) ++count[part[v]];
    for (std::int32_t p = 0; p < parts; ++p) {
        while (count[p] == 0) {
            // Steal a node from the most loaded part.
            std::int32_t donor = 0;
            for (std::int32_t q = 1; q < parts; ++q)
                if (load[q] > load[donor]) donor = q;
            for (std::int32_t v = 0; v < lg.n; ++v) {
                if (part[v] == donor && count[donor] > 1) {
                    part[v] = p;
                    --count[donor];
                    ++count[p];
                    load[donor] -= lg.node_w[v];
                    load[p] += lg.node_w[v];
                    break;
                }
            }
        }
    }
}

}  // namespace

bool Partitioning::valid_for(const Graph& g) const {
    if (num_parts <= 0) return false;
    if (static_cast<NodeId>(assignment.size()) != g.num_nodes) return false;
    if (static_cast<std::int32_t>(parts.size()) != num_parts) return false;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(g.num_nodes), 0);
    for (std::int32_t p = 0; p < num_parts; ++p) {
        if (parts[p].empty()) return false;
        for (std::size_t i = 0; i < parts[p].size(); ++i) {
            NodeId v = parts[p][i];
            if (v < 0 || v >= g.num_nodes || seen[v]) return false;
            if (i > 0 && parts[p][i] <= parts[p][i - 1]) return false;
            if (assignment[v] != p) return false;
            seen[v] = 1;
        }
    }
    for (auto s : seen)
        if (!s) return false;
    return true;
}

Partitioning partition_from_assignment(std::vector<std::int32_t> assignment,
                                       std::int32_t num_parts) {
    Partitioning p;
    p.num_parts = num_parts;
    p.parts.resize(static_cast<std::size_t>(num_parts));
    for (std::size_t v = 0; v < assignment.size(); ++v) {
        if (assignment[v] < 0 || assignment[v] >= num_parts)
            throw std::invalid_argument("partition_from_assignment: part id out of range");
        p.parts[assignment[v]].push_back(static_cast<NodeId>(v));
    }
    p.assignment = std::move(assignment);
    for (auto& part : p.parts)
        if (part.empty()) throw std::invalid_argument("partition_from_assignment: empty part");
    return p;
}

Partitioning random_partition(const Graph& g, std::int32_t num_parts, std::uint64_t seed) {
    if (num_parts <= 0) throw std::invalid_argument("random_partition: num_parts must be positive");
    if (num_parts > g.num_nodes)
        throw std::invalid_argument("random_partition: more parts than nodes");

    std::vector<NodeId> order(static_cast<std::size_t>(g.num_nodes));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 0x72616e64));  // "rand"
    rng.shuffle(order);

    std::vector<std::int32_t> assignment(static_cast<std::size_t>(g.num_nodes));
    for (std::size_t i = 0; i < order.size(); ++i)
        assignment[order[i]] = static_cast<std::int32_t>(i % num_parts);
    return partition_from_assignment(std::move(assignment), num_parts);
}

Partitioning cluster_partition(const Graph& g, std::int32_t num_parts, std::uint64_t seed) {
    if (num_parts <= 0) throw std::invalid_argument("cluster_partition: num_parts must be positive");
    if (num_parts > g.num_nodes)
        throw std::invalid_argument("cluster_partition: more parts than nodes");

    const std::int64_t cap = static_cast<std::int64_t>(
        std::floor(1.1 * std::ceil(static_cast<double>(g.num_nodes) / num_parts)));

    Rng rng(derive_seed(seed, 0x636c7573));  // "clus"

    // Coarsening phase.
    std::vector<LevelGraph> levels;
    std::vector<Matching> matchings;
    levels.push_back(level_from_graph(g));
    const std::int32_t coarse_target = std::max<std::int32_t>(num_parts * 8, 48);
    while (levels.back().n > coarse_target) {
        Matching m = heavy_edge_matching(levels.back(), rng);
        if (m.coarse_n >= levels.back().n * 0.95) break;  // stagnation
        levels.push_back(contract(levels.back(), m));
        matchings.push_back(std::move(m));
    }

    // Initial partition on the coarsest level.
    std::vector<std::int32_t> part = grow_initial(levels.back(), num_parts, rng);

    // Uncoarsen with refinement at every level.
    for (std::size_t li = levels.size(); li-- > 0;) {
        const LevelGraph& lg = levels[li];
        std::vector<std::int64_t> load(static_cast<std::size_t>(num_parts), 0);
        for (std::int32_t v = 0; v < lg.n; ++v) load[part[v]] += lg.node_w[v];
        repair_balance(lg, part, load, cap, num_parts);
        for (int pass = 0; pass < 8; ++pass)
            if (refine_pass(lg, part, load, cap, num_parts) == 0) break;
        ensure_nonempty(lg, part, load, num_parts);
        if (li > 0) {  // project to the next finer level
            const Matching& m = matchings[li - 1];
            std::vector<std::int32_t> finer(static_cast<std::size_t>(levels[li - 1].n));
            for (std::int32_t v = 0; v < levels[li - 1].n; ++v) finer[v] = part[m.coarse_of[v]];
            part = std::move(finer);
        }
    }
    return partition_from_assignment(std::move(part), num_parts);
}

double inter_intra_ratio(const Graph& g, const Partitioning& p) {
    std::int64_t inter = 0, intra = 0;
    for (NodeId v = 0; v < g.num_nodes; ++v)
        for (NodeId w : g.neighbors(v))
            (p.assignment[v] == p.assignment[w] ? intra : inter) += 1;
    if (inter == 0) return 0.0;
    if (intra == 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(inter) / static_cast<double>(intra);
}

std::int64_t edge_cut(const Graph& g, const Partitioning& p) {
    std::int64_t cut = 0;
    for (NodeId v = 0; v < g.num_nodes; ++v)
        for (NodeId w : g.neighbors(v)) {
            if (p.assignment[v] == p.assignment[w]) continue;
            if (g.is_symmetric && w > v) continue;  // count each pair once
            ++cut;
        }
    return cut;
}

}  // namespace gas
