#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gas/graph.hpp"
#include "gas/tensor.hpp"

namespace gas {

enum class LayerKind { kGcn, kGin, kAppnp, kGcnii };

const char* layer_kind_name(LayerKind k);
std::optional<LayerKind> layer_kind_from_name(const std::string& name);

struct LayerConfig {
    LayerKind kind = LayerKind::kGcn;
    std::int32_t in_dim = 0;
    std::int32_t out_dim = 0;
    float alpha = 0.1f;        // APPNP / GCNII teleport probability
    float beta = 0.5f;         // GCNII identity-map mix
    float gin_eps = 0.0f;      // GIN epsilon (initial value)
    bool gin_train_eps = false;
    std::int32_t mlp_hidden = 0;  // GIN MLP hidden width

    void validate() const;
};

// Aggregation stencils for one batch plan. Normalization coefficients always
// use global degrees, so the batch operator approximates the full-graph
// operator rather than a subgraph one.
struct PlanAggregation {
    AggPattern gcn;  // 1/c_{w,v} over N(v) plus the self-loop term, batch rows as dst
    AggPattern sum;  // unit coefficients over N(v), no added self term
};

PlanAggregation build_plan_aggregation(const Graph& global, const BatchPlan& plan);

// Inputs for a layer forward over one batch: embeddings for all extended
// nodes (halo rows enter as constants via the composing op) and, for the
// residual operators, the batch's initial embeddings.
struct LayerContext {
    const BatchPlan* plan = nullptr;
    const PlanAggregation* agg = nullptr;
    Tensor h_in;  // |V_b| x in_dim
    Tensor h0;    // |V_b| x dim, required by APPNP / GCNII
};

// One message-passing layer; owns its parameters.
class Layer {
  public:
    static Layer build(const LayerConfig& cfg, std::uint64_t seed);

    const LayerConfig& config() const { return cfg_; }
    std::vector<Tensor> params() const;

    // Returns |B_b| x out_dim embeddings for the batch rows.
    Tensor forward(Tape* tape, const LayerContext& ctx) const;

  private:
    LayerConfig cfg_;
    Tensor w_;                                // GCN / GCNII weight
    Tensor identity_;                         // GCNII constant I
    Tensor mlp_w1_, mlp_b1_, mlp_w2_, mlp_b2_;  // GIN MLP
    Tensor eps_;                              // GIN epsilon (1x1)

    Tensor gcn_forward(Tape* tape, const LayerContext& ctx) const;
    Tensor gin_forward(Tape* tape, const LayerContext& ctx) const;
    Tensor appnp_forward(Tape* tape, const LayerContext& ctx) const;
    Tensor gcnii_forward(Tape* tape, const LayerContext& ctx) const;
};

// Auxiliary loss ||f(h) - f(h + e)||_F with e drawn per row uniformly from the
// closed ball of radius delta. delta == 0 forces e = 0 and a zero loss.
Tensor lipschitz_reg_loss(Tape* tape, const Layer& layer, const LayerContext& ctx,
                          float delta, std::uint64_t seed);

}  // namespace gas
