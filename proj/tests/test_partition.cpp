#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "gas/io.hpp"
#include "gas/partition.hpp"
#include "oracles.hpp"

using namespace gas;

namespace {

// Two 10-cliques joined by a single bridge edge (0 -- 10).
Graph two_clique_bridge() {
    std::vector<Edge> edges;
    for (NodeId i = 0; i < 10; ++i)
        for (NodeId j = i + 1; j < 10; ++j) edges.emplace_back(i, j);
    for (NodeId i = 10; i < 20; ++i)
        for (NodeId j = i + 1; j < 20; ++j) edges.emplace_back(i, j);
    edges.emplace_back(0, 10);
    return build_graph(edges, 20, true);
}

// Exhaustive minimum cut over all 2-partitions within the balance cap.
std::int64_t brute_force_min_cut_2(const Graph& g, std::int64_t cap) {
    const NodeId n = g.num_nodes;
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        const int size1 = __builtin_popcount(mask);
        const int size0 = n - size1;
        if (size0 > cap || size1 > cap) continue;
        std::int64_t cut = 0;
        for (NodeId v = 0; v < n; ++v)
            for (NodeId w : g.neighbors(v)) {
                if (w > v) continue;
                const bool va = (mask >> v) & 1u, wa = (mask >> w) & 1u;
                if (va != wa) ++cut;
            }
        best = std::min(best, cut);
    }
    return best;
}

}  // namespace

TEST_CASE("random_partition: balance, identity, determinism") {
    Graph g = oracle::random_graph(4, 0.5, 1);
    Partitioning p = random_partition(g, 2, 42);
    CHECK(p.parts[0].size() == 2);
    CHECK(p.parts[1].size() == 2);

    Partitioning whole = random_partition(g, 1, 42);
    CHECK(whole.parts[0].size() == 4);

    Partitioning again = random_partition(g, 2, 42);
    CHECK(again.assignment == p.assignment);
    CHECK_THROWS_AS(random_partition(g, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(random_partition(g, 5, 1), std::invalid_argument);
}

TEST_CASE("random_partition: sizes differ by at most one") {
    Graph g = oracle::random_graph(23, 0.1, 3);
    Partitioning p = random_partition(g, 5, 9);
    std::size_t mn = g.num_nodes, mx = 0;
    for (const auto& part : p.parts) {
        mn = std::min(mn, part.size());
        mx = std::max(mx, part.size());
    }
    CHECK(mx - mn <= 1);
    CHECK(p.valid_for(g));
}

TEST_CASE("cluster_partition: two-clique bridge graph splits at the bridge") {
    Graph g = two_clique_bridge();
    Partitioning p = cluster_partition(g, 2, 0);
    CHECK(p.valid_for(g));
    CHECK(edge_cut(g, p) == 1);
    // Each clique ends up in one part.
    for (NodeId v = 1; v < 10; ++v) CHECK(p.assignment[v] == p.assignment[0]);
    for (NodeId v = 11; v < 20; ++v) CHECK(p.assignment[v] == p.assignment[10]);
    CHECK(p.assignment[0] != p.assignment[10]);

    // Exhaustive oracle: no balanced 2-partition beats cut 1.
    const std::int64_t cap = static_cast<std::int64_t>(1.1 * 10);
    CHECK(brute_force_min_cut_2(g, cap) == 1);
}

TEST_CASE("cluster_partition: B=1 single part, zero cut") {
    Graph g = oracle::random_graph(15, 0.3, 2);
    Partitioning p = cluster_partition(g, 1, 5);
    CHECK(p.num_parts == 1);
    CHECK(p.parts[0].size() == 15);
    CHECK(edge_cut(g, p) == 0);
    CHECK(inter_intra_ratio(g, p) == 0.0);
}

TEST_CASE("cluster_partition: recovers planted 4-block SBM blocks") {
    SbmParams params;
    params.blocks = 4;
    params.nodes_per_block = 50;
    params.p_in = 0.3;
    params.p_out = 0.01;
    params.seed = 77;
    Dataset ds = gen_sbm(params);
    Partitioning p = cluster_partition(ds.graph, 4, 3);

    // Agreement with planted labels up to the best of the 4! relabelings.
    std::vector<std::int32_t> perm{0, 1, 2, 3};
    std::int64_t best = 0;
    do {
        std::int64_t agree = 0;
        for (NodeId v = 0; v < ds.graph.num_nodes; ++v)
            if (perm[p.assignment[v]] == ds.labels.labels[v]) ++agree;
        best = std::max(best, agree);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(best >= 0.95 * ds.graph.num_nodes);
}

TEST_CASE("cluster_partition: deterministic and balance-capped") {
    Graph g = oracle::random_graph(120, 0.06, 4);
    Partitioning a = cluster_partition(g, 5, 11);
    Partitioning b = cluster_partition(g, 5, 11);
    CHECK(a.assignment == b.assignment);
    const std::int64_t cap =
        static_cast<std::int64_t>(std::floor(1.1 * std::ceil(120.0 / 5.0)));
    for (const auto& part : a.parts) {
        CHECK(!part.empty());
        CHECK(static_cast<std::int64_t>(part.size()) <= cap);
    }
    CHECK_THROWS_AS(cluster_partition(g, 121, 0), std::invalid_argument);
}

TEST_CASE("cluster_partition: works on disconnected graphs") {
    // Two components plus an isolated node.
    std::vector<Edge> edges{{0, 1}, {1, 2}, {3, 4}, {4, 5}};
    Graph g = build_graph(edges, 7, true);
    Partitioning p = cluster_partition(g, 3, 1);
    CHECK(p.valid_for(g));
}

TEST_CASE("inter_intra_ratio: hand-counted values") {
    Graph g = two_clique_bridge();
    Partitioning split = cluster_partition(g, 2, 0);
    CHECK(inter_intra_ratio(g, split) == doctest::Approx(1.0 / 90.0));

    // All nodes in one part: no inter edges.
    Partitioning one = cluster_partition(g, 1, 0);
    CHECK(inter_intra_ratio(g, one) == 0.0);

    // Star split so that every edge crosses: infinite marker.
    Graph star = build_graph({{0, 1}, {0, 2}}, 3, true);
    Partitioning p = partition_from_assignment({0, 1, 1}, 2);
    CHECK(std::isinf(inter_intra_ratio(star, p)));
}

TEST_CASE("partitioning property: inter plus intra equals total edges") {
    Graph g = oracle::random_graph(60, 0.1, 8);
    Partitioning p = random_partition(g, 4, 17);
    std::int64_t inter = 0, intra = 0;
    for (NodeId v = 0; v < g.num_nodes; ++v)
        for (NodeId w : g.neighbors(v)) (p.assignment[v] == p.assignment[w] ? intra : inter)++;
    CHECK(inter + intra == g.num_edges());
}

TEST_CASE("cluster beats random by 4x on seeded planted-cluster graphs") {
    double cluster_sum = 0.0, random_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SbmParams params;
        params.blocks = 4;
        params.nodes_per_block = 40;
        params.p_in = 0.25;
        params.p_out = 0.02;
        params.seed = derive_seed(100, seed);
        Dataset ds = gen_sbm(params);
        cluster_sum += inter_intra_ratio(ds.graph, cluster_partition(ds.graph, 4, seed));
        random_sum += inter_intra_ratio(ds.graph, random_partition(ds.graph, 4, seed));
    }
    CHECK(cluster_sum / 20.0 <= random_sum / 20.0 / 4.0);
}
