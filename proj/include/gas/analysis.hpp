#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gas/graph.hpp"
#include "gas/history.hpp"
#include "gas/partition.hpp"
#include "gas/trainer.hpp"

namespace gas {

// ---- Closed-form error bounds ---------------------------------------------

// Single-layer output error bound: delta*k2 + (delta+eps)*k1*k2*|N(v)|.
// For mean or max aggregation the |N(v)| factor drops (aggregation Lipschitz 1).
double lemma1_bound(double delta, double eps, double k1, double k2, std::int64_t degree,
                    bool mean_aggregation = false);

// L-layer bound: sum over ell of eps[ell] * (k1 k2 |N(v)|)^(L-ell); eps is
// indexed 0..L-2 for history layers 1..L-1. Mean aggregation drops the degree
// factor.
double theorem1_bound(std::span<const double> eps_per_layer, double k1, double k2,
                      std::int64_t degree, std::int32_t num_layers,
                      bool mean_aggregation = false);

// ---- Empirical bound verification ------------------------------------------
// Linear message-passing model h_v = W_u (h_v + agg_w W_m h_w), with sum or
// mean aggregation, so that k1 and k2 are exactly the spectral norms of W_m
// and W_u.

struct LinearMsgModel {
    std::int32_t num_layers = 2;
    std::int32_t dim = 4;
    bool mean_aggregation = false;
    std::vector<DenseMatrix> w_msg;  // per layer, dim x dim
    std::vector<DenseMatrix> w_upd;

    static LinearMsgModel random(std::int32_t num_layers, std::int32_t dim, double weight_scale,
                                 bool mean_aggregation, std::uint64_t seed);
    // Measured Lipschitz constants (largest spectral norm across layers).
    double measure_k1(std::int32_t iters, std::uint64_t seed) const;
    double measure_k2(std::int32_t iters, std::uint64_t seed) const;

    // Exact full-batch forward; returns per-layer embeddings (index ell-1).
    std::vector<DenseMatrix> full_forward(const Graph& g, const DenseMatrix& x) const;
};

struct BoundCheckResult {
    std::vector<double> eps;         // per history layer: max over pulls of
                                     // ||pulled value - epoch h_tilde||
    std::vector<double> node_error;  // per node ||h_tilde^L - h^L||
    std::vector<double> node_bound;  // theorem bound with supplied constants
    std::int64_t violations = 0;     // node_error > node_bound count
    bool nontrivial = false;         // some eps > 0
};

// One frozen GAS epoch of the linear model over the given partitioning with
// zero-initialized histories; checks the per-node Theorem-style bound using
// the supplied (already safety-scaled) constants.
BoundCheckResult gas_bound_check(const Graph& g, const DenseMatrix& x,
                                 const LinearMsgModel& model, const Partitioning& parts,
                                 double k1, double k2);

struct Lemma1Case {
    double measured = 0.0;  // max over nodes of single-layer output error
    double worst_bound = 0.0;
    std::int64_t violations = 0;
};

// Single layer with explicitly injected input perturbations: closeness delta
// and staleness eps, checked per node against the lemma bound.
Lemma1Case lemma1_empirical(const Graph& g, const DenseMatrix& x, const LinearMsgModel& model,
                            double delta, double eps, double k1, double k2, std::uint64_t seed);

// ---- Weisfeiler-Lehman color refinement ------------------------------------

struct WLColoring {
    std::vector<std::vector<std::int32_t>> colors;  // per round, per node
    std::int32_t stable_round = -1;                 // first round where classes stop changing

    std::int32_t rounds() const { return static_cast<std::int32_t>(colors.size()) - 1; }
    std::span<const std::int32_t> at_round(std::int32_t r) const { return colors[r]; }
    std::span<const std::int32_t> final() const { return colors.back(); }
};

// Standard 1-WL: new color = interned (old color, sorted multiset of neighbor
// colors). Interning is collision-free by construction.
WLColoring wl_refine(const Graph& g, std::span<const std::int32_t> init_colors,
                     std::int32_t rounds);

// Initial colors from exact feature-row equality.
std::vector<std::int32_t> colors_from_features(const FeatureMatrix& features);

// All connected graphs with 1..max_nodes nodes, one representative per
// isomorphism class (practical for max_nodes <= 7).
std::vector<Graph> enumerate_connected_graphs(std::int32_t max_nodes);

// ---- Expressiveness (separation consequence of the WL equivalence) ---------

struct ExpressivenessReport {
    std::int64_t distinct_pairs = 0;   // pairs with different WL colors
    std::int64_t separated_pairs = 0;  // of those, GAS output distance > margin
    double tau = 0.0;                  // min GAS-output distance over distinct pairs
    bool voronoi_ok = true;  // nearest exact output carries the node's own color
    bool pass = false;       // all distinct pairs separated and voronoi_ok
};

// Compares GAS outputs (from the model's histories) against WL colors after
// `rounds` refinements, and validates the nearest-exact-output assignment.
ExpressivenessReport expressiveness_check(const Model& model, const HistoryStore& store,
                                          const Dataset& ds, const BatchSchedule& sched,
                                          std::int32_t rounds, double margin);

// ---- Proposition-3 style sampling counterexample ----------------------------

// Uniformly sampled neighbor sets with rescaled weights |N(v)| / |sampled(v)|.
struct SampledAdjacency {
    std::vector<std::vector<NodeId>> neighbors;  // per node, sorted
    std::vector<double> weight;                  // per node rescale factor
};
SampledAdjacency sampled_adjacency(const Graph& g, std::int32_t sample_size, std::uint64_t seed);

struct Prop3Witness {
    bool found = false;
    Graph graph;
    std::vector<std::int32_t> colors;
    NodeId v = -1, w = -1;
    std::int32_t sample_size = 1;
    std::uint64_t seed = 0;
    double sampled_distance = 0.0;  // sampled-aggregation output distance
    double exact_distance = 0.0;    // always 0 for a witness
};

// Smallest colored graph (by node count, then enumeration order) where
// one-round WL-equivalent nodes get different sampled-aggregation outputs.
Prop3Witness prop3_counterexample_search(std::int32_t max_nodes);

// Output of the 1-layer sum-aggregation reference model used in the search:
// rows are concat(onehot(color_v), sum_w a_vw * onehot(color_w)).
DenseMatrix prop3_model_outputs(const Graph& g, std::span<const std::int32_t> colors,
                                const SampledAdjacency* sampled);

// ---- Gradient error bound ---------------------------------------------------

struct GradientCheckReport {
    struct PerParam {
        double grad_diff = 0.0;  // ||grad(perturbed) - grad(exact)||
        double lambda_est = 0.0; // probed Lipschitz constant (with safety factor)
        double bound = 0.0;      // lambda_est * ||delta||_F
        bool pass = false;
    };
    std::vector<PerParam> params;
    double delta_norm = 0.0;  // ||H_gas^L - H_full^L||_F
    bool all_pass = true;
};

// Probes the Lipschitz constant of the map (final-output perturbation ->
// parameter gradient) by finite differences and checks the gradient error
// inequality for the perturbation actually induced by GAS histories.
GradientCheckReport gradient_error_check(const Model& model, const Dataset& ds,
                                         const BatchSchedule& sched, const HistoryStore& store,
                                         double safety, std::int32_t probes, std::uint64_t seed);

}  // namespace gas
