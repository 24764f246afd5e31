#include <doctest.h>

#include <set>

#include "gas/graph.hpp"
#include "oracles.hpp"

using namespace gas;

namespace {

Graph path3() { return build_graph({{0, 1}, {1, 2}}, 3, true); }

}  // namespace

TEST_CASE("build_graph: P3 path degrees") {
    Graph g = path3();
    CHECK(g.num_nodes == 3);
    CHECK(g.degree(0) == 1);
    CHECK(g.degree(1) == 2);
    CHECK(g.degree(2) == 1);
    CHECK(g.is_symmetric);
}

TEST_CASE("build_graph: empty edge list gives isolated nodes") {
    Graph g = build_graph(std::vector<Edge>{}, 2, true);
    CHECK(g.num_nodes == 2);
    CHECK(g.num_edges() == 0);
    CHECK(g.row_offsets == std::vector<std::int64_t>{0, 0, 0});
}

TEST_CASE("build_graph: out-of-range id is an input error") {
    CHECK_THROWS_AS(build_graph({{0, 5}}, 3, true), std::invalid_argument);
}

TEST_CASE("build_graph: duplicates dropped, self-loops kept") {
    Graph g = build_graph({{0, 1}, {0, 1}, {1, 0}, {2, 2}}, 3, true);
    CHECK(g.degree(0) == 1);
    CHECK(g.degree(1) == 1);
    CHECK(g.degree(2) == 1);
    CHECK(g.has_edge(2, 2));
}

TEST_CASE("build_graph: random edges round-trip against set oracle") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(derive_seed(seed, 1));
        const NodeId n = 30;
        std::vector<Edge> edges;
        std::set<std::pair<NodeId, NodeId>> undirected;
        for (int i = 0; i < 100; ++i) {
            NodeId u = static_cast<NodeId>(rng.next_below(n));
            NodeId v = static_cast<NodeId>(rng.next_below(n));
            edges.emplace_back(u, v);
            undirected.emplace(std::min(u, v), std::max(u, v));
        }
        Graph g = build_graph(edges, n, true);
        // Every stored directed edge corresponds to an input pair and vice versa.
        std::set<std::pair<NodeId, NodeId>> stored;
        for (NodeId v = 0; v < n; ++v)
            for (NodeId w : g.neighbors(v)) stored.emplace(std::min(w, v), std::max(w, v));
        CHECK(stored == undirected);

        // Rebuilding from the exported edge list is an identical structure.
        Graph g2 = build_graph(g.export_edges(), n, false);
        CHECK(g2.row_offsets == g.row_offsets);
        CHECK(g2.col_indices == g.col_indices);
    }
}

TEST_CASE("degree: matches edge recount on random graph") {
    Graph g = oracle::random_graph(40, 0.2, 11);
    std::vector<int> count(40, 0);
    for (const auto& [u, v] : g.export_edges()) count[v] += 1;
    std::int64_t total = 0;
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        CHECK(g.degree(v) == count[v]);
        total += g.degree(v);
    }
    CHECK(total == g.num_edges());
}

TEST_CASE("gcn_norm: direct formula values") {
    Graph g = path3();
    CHECK(gcn_norm(g, 0, 1) == doctest::Approx(1.0 / (std::sqrt(2.0) * std::sqrt(3.0))));
    Graph iso = build_graph(std::vector<Edge>{}, 1, true);
    CHECK(gcn_norm(iso, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("gcn_norm: symmetric over random pairs") {
    Graph g = oracle::random_graph(25, 0.3, 5);
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        NodeId a = static_cast<NodeId>(rng.next_below(25));
        NodeId b = static_cast<NodeId>(rng.next_below(25));
        CHECK(gcn_norm(g, a, b) == doctest::Approx(gcn_norm(g, b, a)));
    }
}

TEST_CASE("make_batch_plan: single node batch on P3") {
    Graph g = path3();
    BatchPlan plan = make_batch_plan(g, std::vector<NodeId>{0});
    CHECK(plan.batch_nodes == std::vector<NodeId>{0});
    CHECK(plan.extended_nodes == std::vector<NodeId>{0, 1});
    CHECK(plan.is_halo == std::vector<std::uint8_t>{0, 1});
    CHECK(plan.halo_nodes == std::vector<NodeId>{1});
    // Only the in-edge 1 -> 0 survives in the local graph.
    CHECK(plan.local_graph.num_edges() == 1);
    CHECK(plan.local_graph.degree(0) == 1);
    CHECK(plan.local_graph.neighbors(0)[0] == 1);
    CHECK(plan.local_graph.degree(1) == 0);
}

TEST_CASE("make_batch_plan: full batch is the graph itself") {
    Graph g = oracle::random_graph(20, 0.25, 9);
    std::vector<NodeId> all(20);
    std::iota(all.begin(), all.end(), 0);
    BatchPlan plan = make_batch_plan(g, all);
    CHECK(plan.num_halo() == 0);
    CHECK(plan.extended_nodes == all);
    CHECK(plan.local_graph.row_offsets == g.row_offsets);
    CHECK(plan.local_graph.col_indices == g.col_indices);
}

TEST_CASE("make_batch_plan: extension matches brute-force neighborhood union") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Graph g = oracle::random_graph(50, 0.08, seed);
        Rng rng(derive_seed(seed, 2));
        std::set<NodeId> batch_set;
        while (batch_set.size() < 12) batch_set.insert(static_cast<NodeId>(rng.next_below(50)));
        std::vector<NodeId> batch(batch_set.begin(), batch_set.end());
        BatchPlan plan = make_batch_plan(g, batch);

        std::set<NodeId> expected(batch.begin(), batch.end());
        for (NodeId v : batch)
            for (NodeId w : g.neighbors(v)) expected.insert(w);
        CHECK(std::vector<NodeId>(expected.begin(), expected.end()) == plan.extended_nodes);

        // Halo rows have no in-edges; batch rows keep all global in-edges.
        for (std::size_t i = 0; i < plan.extended_nodes.size(); ++i) {
            if (plan.is_halo[i])
                CHECK(plan.local_graph.degree(static_cast<NodeId>(i)) == 0);
            else
                CHECK(plan.local_graph.degree(static_cast<NodeId>(i)) ==
                      g.degree(plan.extended_nodes[i]));
        }
    }
}

TEST_CASE("make_batch_plan: empty batch is an input error") {
    Graph g = path3();
    CHECK_THROWS_AS(make_batch_plan(g, std::vector<NodeId>{}), std::invalid_argument);
    CHECK_THROWS_AS(make_batch_plan(g, std::vector<NodeId>{1, 0}), std::invalid_argument);
}
