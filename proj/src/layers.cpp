#include "gas/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gas/nn.hpp"
#include "gas/rng.hpp"

namespace gas {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::kGcn: return "gcn";
        case LayerKind::kGin: return "gin";
        case LayerKind::kAppnp: return "appnp";
        case LayerKind::kGcnii: return "gcnii";
    }
    return "?";
}

std::optional<LayerKind> layer_kind_from_name(const std::string& name) {
    if (name == "gcn") return LayerKind::kGcn;
    if (name == "gin") return LayerKind::kGin;
    if (name == "appnp") return LayerKind::kAppnp;
    if (name == "gcnii") return LayerKind::kGcnii;
    return std::nullopt;
}

void LayerConfig::validate() const {
    if (in_dim <= 0 || out_dim <= 0) throw std::invalid_argument("LayerConfig: dims must be positive");
    if (alpha < 0.0f || alpha > 1.0f) throw std::invalid_argument("LayerConfig: alpha out of [0,1]");
    if (beta < 0.0f || beta > 1.0f) throw std::invalid_argument("LayerConfig: beta out of [0,1]");
    if (kind == LayerKind::kGin && mlp_hidden <= 0)
        throw std::invalid_argument("LayerConfig: GIN needs mlp_hidden");
    if (kind == LayerKind::kGcnii && in_dim != out_dim && beta > 0.0f)
        throw std::invalid_argument("LayerConfig: GCNII identity map needs square dims");
    if (kind == LayerKind::kAppnp && in_dim != out_dim)
        throw std::invalid_argument("LayerConfig: APPNP propagation keeps the dimension");
}

PlanAggregation build_plan_aggregation(const Graph& global, const BatchPlan& plan) {
    PlanAggregation out;
    const std::size_t nb = plan.batch_nodes.size();
    out.gcn.row_ptr.assign(nb + 1, 0);
    out.sum.row_ptr.assign(nb + 1, 0);

    for (std::size_t i = 0; i < nb; ++i) {
        const NodeId v = plan.batch_nodes[i];
        const NodeId lv = plan.batch_local_rows[i];
        const double cv = std::sqrt(double(global.degree(v)) + 1.0);
        bool self_seen = false;
        for (NodeId w : global.neighbors(v)) {
            const NodeId lw = plan.global_to_local.at(w);
            const double cw = std::sqrt(double(global.degree(w)) + 1.0);
            out.gcn.cols.push_back(lw);
            out.gcn.coeffs.push_back(static_cast<float>(1.0 / (cw * cv)));
            out.sum.cols.push_back(lw);
            out.sum.coeffs.push_back(1.0f);
            if (w == v) self_seen = true;
        }
        if (!self_seen) {  // GCN-family operators aggregate over N(v) plus v itself
            out.gcn.cols.push_back(lv);
            out.gcn.coeffs.push_back(static_cast<float>(1.0 / (cv * cv)));
        }
        out.gcn.row_ptr[i + 1] = static_cast<std::int64_t>(out.gcn.cols.size());
        out.sum.row_ptr[i + 1] = static_cast<std::int64_t>(out.sum.cols.size());
    }
    return out;
}

Layer Layer::build(const LayerConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Layer layer;
    layer.cfg_ = cfg;
    switch (cfg.kind) {
        case LayerKind::kGcn:
            layer.w_ = Tensor::zeros(cfg.in_dim, cfg.out_dim, true);
            glorot_init(layer.w_, derive_seed(seed, 1));
            break;
        case LayerKind::kGin:
            layer.mlp_w1_ = Tensor::zeros(cfg.in_dim, cfg.mlp_hidden, true);
            layer.mlp_b1_ = Tensor::zeros(1, cfg.mlp_hidden, true);
            layer.mlp_w2_ = Tensor::zeros(cfg.mlp_hidden, cfg.out_dim, true);
            layer.mlp_b2_ = Tensor::zeros(1, cfg.out_dim, true);
            glorot_init(layer.mlp_w1_, derive_seed(seed, 1));
            glorot_init(layer.mlp_w2_, derive_seed(seed, 2));
            layer.eps_ = Tensor::scalar(cfg.gin_eps, cfg.gin_train_eps);
            break;
        case LayerKind::kAppnp:
            break;  // propagation is parameter-free
        case LayerKind::kGcnii:
            layer.w_ = Tensor::zeros(cfg.in_dim, cfg.out_dim, true);
            glorot_init(layer.w_, derive_seed(seed, 1));
            layer.identity_ = Tensor::zeros(cfg.in_dim, cfg.out_dim);
            for (std::int32_t i = 0; i < std::min(cfg.in_dim, cfg.out_dim); ++i)
                layer.identity_.at(i, i) = 1.0f;
            break;
    }
    return layer;
}

std::vector<Tensor> Layer::params() const {
    std::vector<Tensor> out;
    switch (cfg_.kind) {
        case LayerKind::kGcn:
        case LayerKind::kGcnii:
            out.push_back(w_);
            break;
        case LayerKind::kGin:
            out.insert(out.end(), {mlp_w1_, mlp_b1_, mlp_w2_, mlp_b2_});
            if (cfg_.gin_train_eps) out.push_back(eps_);
            break;
        case LayerKind::kAppnp:
            break;
    }
    return out;
}

Tensor Layer::forward(Tape* tape, const LayerContext& ctx) const {
    if (!ctx.plan || !ctx.agg) throw std::invalid_argument("Layer: missing plan context");
    if (ctx.h_in.cols() != cfg_.in_dim)
        throw std::invalid_argument("Layer: input dim mismatch, got " +
                                    std::to_string(ctx.h_in.cols()) + " expected " +
                                    std::to_string(cfg_.in_dim));
    if (ctx.h_in.rows() != ctx.plan->num_extended())
        throw std::invalid_argument("Layer: input rows != extended nodes");
    switch (cfg_.kind) {
        case LayerKind::kGcn: return gcn_forward(tape, ctx);
        case LayerKind::kGin: return gin_forward(tape, ctx);
        case LayerKind::kAppnp: return appnp_forward(tape, ctx);
        case LayerKind::kGcnii: return gcnii_forward(tape, ctx);
    }
    throw std::logic_error("Layer: unknown kind");
}

Tensor Layer::gcn_forward(Tape* tape, const LayerContext& ctx) const {
    Tensor agg = aggregate(tape, ctx.agg->gcn, ctx.h_in);
    return matmul(tape, agg, w_);
}

Tensor Layer::gin_forward(Tape* tape, const LayerContext& ctx) const {
    Tensor neigh = aggregate(tape, ctx.agg->sum, ctx.h_in);
    Tensor self = select_rows(tape, ctx.h_in,
                              std::span<const NodeId>(ctx.plan->batch_local_rows));
    Tensor one_plus_eps = scalar_add_const(tape, eps_, 1.0f);
    Tensor pre = add(tape, neigh, scale_by_scalar(tape, self, one_plus_eps));
    Tensor hidden = relu(tape, add_rowvec(tape, matmul(tape, pre, mlp_w1_), mlp_b1_));
    return add_rowvec(tape, matmul(tape, hidden, mlp_w2_), mlp_b2_);
}

Tensor Layer::appnp_forward(Tape* tape, const LayerContext& ctx) const {
    if (!ctx.h0.defined()) throw std::invalid_argument("APPNP: missing h0");
    Tensor prop = aggregate(tape, ctx.agg->gcn, ctx.h_in);
    Tensor h0b = select_rows(tape, ctx.h0,
                             std::span<const NodeId>(ctx.plan->batch_local_rows));
    return add(tape, scale(tape, h0b, cfg_.alpha), scale(tape, prop, 1.0f - cfg_.alpha));
}

Tensor Layer::gcnii_forward(Tape* tape, const LayerContext& ctx) const {
    if (!ctx.h0.defined()) throw std::invalid_argument("GCNII: missing h0");
    Tensor prop = aggregate(tape, ctx.agg->gcn, ctx.h_in);
    Tensor h0b = select_rows(tape, ctx.h0,
                             std::span<const NodeId>(ctx.plan->batch_local_rows));
    Tensor mixed = add(tape, scale(tape, h0b, cfg_.alpha), scale(tape, prop, 1.0f - cfg_.alpha));
    Tensor w_tilde = add(tape, scale(tape, identity_, 1.0f - cfg_.beta), scale(tape, w_, cfg_.beta));
    return matmul(tape, mixed, w_tilde);
}

Tensor lipschitz_reg_loss(Tape* tape, const Layer& layer, const LayerContext& ctx,
                          float delta, std::uint64_t seed) {
    if (delta < 0.0f) throw std::invalid_argument("lipschitz_reg_loss: negative delta");
    if (delta == 0.0f) return Tensor::scalar(0.0f);

    const std::int64_t rows = ctx.h_in.rows(), d = ctx.h_in.cols();
    Tensor e = Tensor::zeros(rows, d);
    Rng rng(derive_seed(seed, 0x6c697073));  // "lips"
    for (std::int64_t r = 0; r < rows; ++r) {
        double norm2 = 0.0;
        std::vector<double> dir(static_cast<std::size_t>(d));
        for (auto& x : dir) {
            x = rng.next_normal();
            norm2 += x * x;
        }
        const double norm = std::sqrt(norm2);
        const double radius =
            delta * std::pow(rng.next_double(), 1.0 / static_cast<double>(d));
        for (std::int64_t j = 0; j < d; ++j)
            e.at(r, j) = norm > 0.0 ? static_cast<float>(dir[j] / norm * radius) : 0.0f;
    }

    LayerContext perturbed = ctx;
    perturbed.h_in = add(tape, ctx.h_in, e);
    Tensor out_clean = layer.forward(tape, ctx);
    Tensor out_pert = layer.forward(tape, perturbed);
    return frobenius_norm(tape, sub(tape, out_clean, out_pert));
}

}  // namespace gas
