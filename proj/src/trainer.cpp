#include "gas/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "gas/log.hpp"
#include "gas/rng.hpp"

namespace gas {

namespace {

constexpr std::uint64_t kDropTag = 0x64726f70;   // "drop"
constexpr std::uint64_t kLipTag = 0x6c697073;    // "lips"
constexpr std::uint64_t kOrderTag = 0x6f726472;  // "ordr"

Tensor gather_features(const FeatureMatrix& features, std::span<const NodeId> nodes) {
    Tensor t = Tensor::zeros(static_cast<std::int64_t>(nodes.size()), features.cols);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const float* src = features.row(nodes[i]);
        std::copy(src, src + features.cols, t.data() + static_cast<std::int64_t>(i) * features.cols);
    }
    return t;
}

void scatter_rows(DenseMatrix& dst, std::span<const NodeId> nodes, const Tensor& rows) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const float* src = rows.data() + static_cast<std::int64_t>(i) * rows.cols();
        std::copy(src, src + rows.cols(), dst.row(nodes[i]));
    }
}

bool layer_uses_relu(LayerKind kind) {
    return kind == LayerKind::kGcn || kind == LayerKind::kGcnii;
}

bool layer_has_params(LayerKind kind) { return kind != LayerKind::kAppnp; }

}  // namespace

void ModelSpec::validate() const {
    if (num_layers < 1) throw std::invalid_argument("ModelSpec: need at least one layer");
    if (hidden <= 0) throw std::invalid_argument("ModelSpec: hidden must be positive");
    if (dropout < 0.0f || dropout >= 1.0f)
        throw std::invalid_argument("ModelSpec: dropout must be in [0,1)");
    if (l2_weight < 0.0f) throw std::invalid_argument("ModelSpec: negative l2 weight");
    if (lipschitz_weight < 0.0f) throw std::invalid_argument("ModelSpec: negative lipschitz weight");
    if (lipschitz_delta < 0.0f) throw std::invalid_argument("ModelSpec: negative delta");
    if (epochs < 0) throw std::invalid_argument("ModelSpec: negative epochs");
}

Model Model::build(const ModelSpec& spec, std::int32_t in_dim, std::int32_t num_classes) {
    spec.validate();
    if (in_dim <= 0 || num_classes <= 0)
        throw std::invalid_argument("Model: in_dim and num_classes must be positive");

    Model m;
    m.spec_ = spec;
    m.in_dim_ = in_dim;
    m.num_classes_ = num_classes;
    const std::int32_t L = spec.num_layers;
    const std::int32_t mlp_hidden = spec.mlp_hidden > 0 ? spec.mlp_hidden : spec.hidden;

    auto seed_for = [&](std::uint64_t tag, std::uint64_t idx) {
        return derive_seed(spec.seed, tag, idx);
    };

    switch (spec.kind) {
        case LayerKind::kGcn:
        case LayerKind::kGin:
            for (std::int32_t l = 1; l <= L; ++l) {
                LayerConfig cfg;
                cfg.kind = spec.kind;
                cfg.in_dim = (l == 1) ? in_dim : spec.hidden;
                cfg.out_dim = (l == L) ? num_classes : spec.hidden;
                cfg.gin_eps = spec.gin_eps;
                cfg.gin_train_eps = spec.gin_train_eps;
                cfg.mlp_hidden = mlp_hidden;
                m.layers_.push_back(Layer::build(cfg, seed_for(10, l)));
            }
            break;
        case LayerKind::kAppnp: {
            m.head_w1_ = Tensor::zeros(in_dim, spec.hidden, true);
            m.head_b1_ = Tensor::zeros(1, spec.hidden, true);
            m.head_w2_ = Tensor::zeros(spec.hidden, num_classes, true);
            m.head_b2_ = Tensor::zeros(1, num_classes, true);
            glorot_init(m.head_w1_, seed_for(20, 1));
            glorot_init(m.head_w2_, seed_for(20, 2));
            for (std::int32_t l = 1; l <= L; ++l) {
                LayerConfig cfg;
                cfg.kind = LayerKind::kAppnp;
                cfg.in_dim = num_classes;
                cfg.out_dim = num_classes;
                cfg.alpha = spec.alpha;
                m.layers_.push_back(Layer::build(cfg, seed_for(10, l)));
            }
            break;
        }
        case LayerKind::kGcnii: {
            m.head_w1_ = Tensor::zeros(in_dim, spec.hidden, true);
            m.head_b1_ = Tensor::zeros(1, spec.hidden, true);
            glorot_init(m.head_w1_, seed_for(20, 1));
            for (std::int32_t l = 1; l <= L; ++l) {
                LayerConfig cfg;
                cfg.kind = LayerKind::kGcnii;
                cfg.in_dim = spec.hidden;
                cfg.out_dim = spec.hidden;
                cfg.alpha = spec.alpha;
                cfg.beta = spec.beta;
                m.layers_.push_back(Layer::build(cfg, seed_for(10, l)));
            }
            m.out_w_ = Tensor::zeros(spec.hidden, num_classes, true);
            m.out_b_ = Tensor::zeros(1, num_classes, true);
            glorot_init(m.out_w_, seed_for(30, 1));
            break;
        }
    }

    for (Tensor t : {m.head_w1_, m.head_b1_, m.head_w2_, m.head_b2_})
        if (t.defined()) m.params_.push_back(t);
    for (const Layer& layer : m.layers_)
        for (const Tensor& t : layer.params()) m.params_.push_back(t);
    for (Tensor t : {m.out_w_, m.out_b_})
        if (t.defined()) m.params_.push_back(t);
    return m;
}

std::int32_t Model::history_dim() const {
    if (spec_.num_layers < 2) return 0;
    switch (spec_.kind) {
        case LayerKind::kGcn:
        case LayerKind::kGin:
        case LayerKind::kGcnii: return spec_.hidden;
        case LayerKind::kAppnp: return num_classes_;
    }
    return 0;
}

Tensor Model::head_forward(Tape* tape, const Tensor& x, bool training, std::int64_t epoch,
                           std::int64_t batch_index) const {
    auto drop_seed = [&](std::uint64_t slot) {
        return derive_seed(spec_.seed ^ kDropTag, static_cast<std::uint64_t>(epoch),
                           static_cast<std::uint64_t>(batch_index), slot);
    };
    switch (spec_.kind) {
        case LayerKind::kAppnp: {
            Tensor z = x;
            if (training && spec_.dropout > 0.0f) z = dropout(tape, z, spec_.dropout, drop_seed(100));
            z = relu(tape, add_rowvec(tape, matmul(tape, z, head_w1_), head_b1_));
            if (training && spec_.dropout > 0.0f) z = dropout(tape, z, spec_.dropout, drop_seed(101));
            return add_rowvec(tape, matmul(tape, z, head_w2_), head_b2_);
        }
        case LayerKind::kGcnii: {
            Tensor z = x;
            if (training && spec_.dropout > 0.0f) z = dropout(tape, z, spec_.dropout, drop_seed(100));
            return relu(tape, add_rowvec(tape, matmul(tape, z, head_w1_), head_b1_));
        }
        default: return x;
    }
}

Tensor Model::final_layer_forward(Tape* tape, const LayerContext& ctx) const {
    Tensor out = layers_.back().forward(tape, ctx);
    if (spec_.kind == LayerKind::kGcnii) {
        out = relu(tape, out);
        out = add_rowvec(tape, matmul(tape, out, out_w_), out_b_);
    }
    return out;
}

Tensor Model::forward(Tape* tape, const FeatureMatrix& features, const BatchPlan& plan,
                      const PlanAggregation& agg, const ForwardOptions& opt) const {
    const std::int32_t L = spec_.num_layers;
    const bool needs_history = L >= 2 && plan.num_halo() > 0;
    if (needs_history && !opt.store && !opt.prefetch)
        throw std::invalid_argument("Model::forward: batch has halo nodes but no history source");

    auto drop_seed = [&](std::uint64_t slot) {
        return derive_seed(spec_.seed ^ kDropTag, static_cast<std::uint64_t>(opt.epoch),
                           static_cast<std::uint64_t>(opt.batch_index), slot);
    };
    auto lip_seed = [&](std::uint64_t slot) {
        return derive_seed(spec_.seed ^ kLipTag, static_cast<std::uint64_t>(opt.epoch),
                           static_cast<std::uint64_t>(opt.batch_index), slot);
    };

    Tensor x_ext = gather_features(features, plan.extended_nodes);
    Tensor h0;  // APPNP / GCNII residual basis, recomputed for halos
    Tensor h;
    if (spec_.kind == LayerKind::kAppnp || spec_.kind == LayerKind::kGcnii) {
        h0 = head_forward(tape, x_ext, opt.training, opt.epoch, opt.batch_index);
        h = h0;
    } else {
        h = x_ext;
    }

    Tensor logits;
    for (std::int32_t l = 1; l <= L; ++l) {
        Tensor input = h;
        if (opt.training && spec_.dropout > 0.0f)
            input = dropout(tape, input, spec_.dropout, drop_seed(static_cast<std::uint64_t>(l)));

        LayerContext ctx;
        ctx.plan = &plan;
        ctx.agg = &agg;
        ctx.h_in = input;
        ctx.h0 = h0;

        Tensor out = layers_[l - 1].forward(tape, ctx);

        if (opt.training && opt.reg_loss && spec_.lipschitz_weight > 0.0f && l < L &&
            layer_has_params(spec_.kind)) {
            Tensor li = lipschitz_reg_loss(tape, layers_[l - 1], ctx, spec_.lipschitz_delta,
                                           lip_seed(static_cast<std::uint64_t>(l)));
            *opt.reg_loss = opt.reg_loss->defined() ? add(tape, *opt.reg_loss, li) : li;
        }

        if (l == L) {
            if (spec_.kind == LayerKind::kGcnii) {
                out = relu(tape, out);
                if (opt.training && spec_.dropout > 0.0f)
                    out = dropout(tape, out, spec_.dropout, drop_seed(9000));
                out = add_rowvec(tape, matmul(tape, out, out_w_), out_b_);
            }
            logits = out;
            break;
        }

        Tensor act = layer_uses_relu(spec_.kind) ? relu(tape, out) : out;

        if (opt.capture.layer_out)
            scatter_rows((*opt.capture.layer_out)[l - 1], plan.batch_nodes, act);
        if (opt.store && opt.push) opt.store->push(l, plan.batch_nodes, act.values());

        Tensor halo;
        if (plan.num_halo() > 0) {
            DenseMatrix rows = opt.prefetch ? opt.prefetch->wait(l)
                                            : opt.store->pull(l, plan.halo_nodes);
            halo = Tensor::from_matrix(rows);
        }
        h = compose_rows(tape, plan.num_extended(),
                         std::span<const NodeId>(plan.batch_local_rows), act,
                         std::span<const NodeId>(plan.halo_local_rows), halo);
    }

    if (opt.capture.final_out) scatter_rows(*opt.capture.final_out, plan.batch_nodes, logits);
    return logits;
}

BatchSchedule BatchSchedule::build(const Graph& g, const Partitioning& parts) {
    BatchSchedule sched;
    sched.plans.reserve(parts.parts.size());
    sched.aggs.reserve(parts.parts.size());
    for (const auto& nodes : parts.parts) {
        sched.plans.push_back(make_batch_plan(g, nodes));
        sched.aggs.push_back(build_plan_aggregation(g, sched.plans.back()));
    }
    return sched;
}

BatchSchedule BatchSchedule::full_batch(const Graph& g) {
    std::vector<NodeId> all(static_cast<std::size_t>(g.num_nodes));
    std::iota(all.begin(), all.end(), 0);
    BatchSchedule sched;
    sched.plans.push_back(make_batch_plan(g, all));
    sched.aggs.push_back(build_plan_aggregation(g, sched.plans.front()));
    return sched;
}

namespace {

// Training-mask rows of one plan as (local row, label) pairs.
void batch_train_rows(const BatchPlan& plan, const LabelSet& labels,
                      std::vector<std::int32_t>& rows, std::vector<std::int32_t>& lab) {
    rows.clear();
    lab.clear();
    for (std::size_t i = 0; i < plan.batch_nodes.size(); ++i) {
        const NodeId v = plan.batch_nodes[i];
        if (labels.train_mask[v]) {
            rows.push_back(static_cast<std::int32_t>(i));
            lab.push_back(labels.labels[v]);
        }
    }
}

struct BatchOutcome {
    double loss = 0.0;
    bool stepped = false;
};

// Forward + loss + one optimizer step for a single batch.
BatchOutcome run_batch(Model& model, AdamState& opt, const Dataset& ds, const BatchPlan& plan,
                       const PlanAggregation& agg, Tape& tape, std::int64_t epoch,
                       std::int64_t batch_index, HistoryStore* store, bool push,
                       PrefetchHandle* prefetch, bool train) {
    const ModelSpec& spec = model.spec();
    Model::ForwardOptions fwd;
    fwd.training = train;
    fwd.epoch = epoch;
    fwd.batch_index = batch_index;
    fwd.store = store;
    fwd.push = push;
    fwd.prefetch = prefetch;
    Tensor reg;
    fwd.reg_loss = &reg;

    Tape* tp = train ? &tape : nullptr;
    Tensor logits = model.forward(tp, ds.features, plan, agg, fwd);

    std::vector<std::int32_t> rows, labels;
    batch_train_rows(plan, ds.labels, rows, labels);

    BatchOutcome outcome;
    if (rows.empty()) return outcome;  // nothing to optimize in this batch

    Tensor loss = softmax_cross_entropy(tp, logits, rows, labels);
    if (train) {
        auto params = model.params();
        if (spec.l2_weight > 0.0f)
            loss = add(tp, loss, l2_penalty(tp, params, spec.l2_weight));
        if (spec.lipschitz_weight > 0.0f && reg.defined())
            loss = add(tp, loss, scale(tp, reg, spec.lipschitz_weight));
    }
    outcome.loss = loss.scalar_value();

    if (train) {
        tape.backward(loss);
        auto params = model.params();
        if (spec.clip_max_norm > 0.0f)
            grad_clip(std::span<Tensor>(params), spec.clip_max_norm);
        opt.step();
        opt.zero_grad();
        outcome.stepped = true;
    }
    return outcome;
}

void finish_report(EpochReport& report, const Model& model, const Dataset& ds,
                   const BatchSchedule* full_for_eval, const EpochOptions& options) {
    if (options.evaluate) {
        BatchSchedule local;
        const BatchSchedule* full = full_for_eval;
        if (!full) {
            local = BatchSchedule::full_batch(ds.graph);
            full = &local;
        }
        Accuracy acc = evaluate(model, ds, *full);
        report.train_acc = acc.train;
        report.val_acc = acc.val;
        report.test_acc = acc.test;
    }
}

}  // namespace

EpochReport full_batch_epoch(Model& model, AdamState& opt, const Dataset& ds,
                             const BatchSchedule& full, std::int64_t epoch,
                             const EpochOptions& options) {
    if (full.plans.size() != 1 || full.plans[0].num_halo() != 0)
        throw std::invalid_argument("full_batch_epoch: schedule is not a full-batch plan");

    EpochReport report;
    report.epoch = epoch;
    Tape tape;
    activation_meter::reset_peak();
    const std::int64_t baseline = activation_meter::current();
    {
        BatchOutcome out = run_batch(model, opt, ds, full.plans[0], full.aggs[0], tape, epoch,
                                     /*batch_index=*/0, /*store=*/nullptr, /*push=*/false,
                                     /*prefetch=*/nullptr, options.train);
        if (!out.stepped && options.train)
            throw std::invalid_argument("full_batch_epoch: no labeled training nodes");
        report.loss = out.loss;
        tape.reset();
    }
    report.batch_peak_floats.push_back(activation_meter::peak() - baseline);
    report.peak_floats = report.batch_peak_floats.back();
    report.edges_per_layer = full.plans[0].local_graph.num_edges();
    finish_report(report, model, ds, &full, options);
    return report;
}

EpochReport gas_epoch(Model& model, AdamState& opt, const Dataset& ds,
                      const BatchSchedule& sched, HistoryStore& store, std::int64_t epoch,
                      const EpochOptions& options) {
    const std::int32_t L = model.num_layers();
    if (L >= 2 && store.num_layers() != L - 1)
        throw std::invalid_argument("gas_epoch: history store has " +
                                    std::to_string(store.num_layers()) + " layers, model needs " +
                                    std::to_string(L - 1));

    std::vector<std::int32_t> order(sched.plans.size());
    std::iota(order.begin(), order.end(), 0);
    if (options.shuffle) {
        Rng rng(derive_seed(model.spec().seed ^ kOrderTag, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);
    }

    EpochReport report;
    report.epoch = epoch;
    Tape tape;
    double loss_sum = 0.0;
    std::int64_t loss_batches = 0;

    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const std::int32_t b = order[oi];
        const BatchPlan& plan = sched.plans[b];
        activation_meter::reset_peak();
        const std::int64_t baseline = activation_meter::current();
        {
            PrefetchHandle handle;
            PrefetchHandle* ph = nullptr;
            if (options.prefetcher && L >= 2) {
                handle = options.prefetcher->begin(plan);
                ph = &handle;
            }
            BatchOutcome out = run_batch(model, opt, ds, plan, sched.aggs[b], tape, epoch, b,
                                         &store, options.push, ph, options.train);
            if (out.stepped || !options.train) {
                loss_sum += out.loss;
                ++loss_batches;
            }
            store.advance_step();
            tape.reset();
        }
        report.batch_peak_floats.push_back(activation_meter::peak() - baseline);
        report.peak_floats = std::max(report.peak_floats, report.batch_peak_floats.back());
        report.edges_per_layer += plan.local_graph.num_edges();
    }
    report.loss = loss_batches > 0 ? loss_sum / static_cast<double>(loss_batches) : 0.0;

    if (options.measure_staleness && L >= 2) {
        GasForwardSnapshot snap = gas_forward_snapshot(model, ds, sched, store);
        StalenessReport st = store.measure_staleness(snap.layer_values);
        for (const auto& layer : st.layers) report.eps_max.push_back(layer.eps_max);
    }
    finish_report(report, model, ds, nullptr, options);
    return report;
}

Accuracy evaluate(const Model& model, const Dataset& ds, const BatchSchedule& full) {
    Model::ForwardOptions fwd;
    Tensor logits = model.forward(nullptr, ds.features, full.plans[0], full.aggs[0], fwd);

    Accuracy acc;
    const auto count = [&](const std::vector<std::uint8_t>& mask) -> double {
        std::int64_t total = 0, correct = 0;
        for (NodeId v = 0; v < ds.graph.num_nodes; ++v) {
            if (!mask[v]) continue;
            ++total;
            auto row = std::span<const float>(logits.data() + std::int64_t(v) * logits.cols(),
                                              static_cast<std::size_t>(logits.cols()));
            if (argmax_row(row) == ds.labels.labels[v]) ++correct;
        }
        return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    };
    acc.train = count(ds.labels.train_mask);
    acc.val = count(ds.labels.val_mask);
    acc.test = count(ds.labels.test_mask);
    return acc;
}

GasForwardSnapshot gas_forward_snapshot(const Model& model, const Dataset& ds,
                                        const BatchSchedule& sched, const HistoryStore& store) {
    const std::int32_t L = model.num_layers();
    GasForwardSnapshot snap;
    snap.layer_values.assign(static_cast<std::size_t>(std::max(0, L - 1)),
                             DenseMatrix(ds.graph.num_nodes, model.history_dim()));
    snap.final_out = DenseMatrix(ds.graph.num_nodes, model.num_classes());

    for (std::size_t b = 0; b < sched.plans.size(); ++b) {
        Model::ForwardOptions fwd;
        fwd.batch_index = static_cast<std::int64_t>(b);
        fwd.store = const_cast<HistoryStore*>(&store);  // read-only: push stays false
        fwd.push = false;
        fwd.capture.layer_out = &snap.layer_values;
        fwd.capture.final_out = &snap.final_out;
        model.forward(nullptr, ds.features, sched.plans[b], sched.aggs[b], fwd);
    }
    return snap;
}

GasForwardSnapshot full_forward_snapshot(const Model& model, const Dataset& ds,
                                         const BatchSchedule& full) {
    const std::int32_t L = model.num_layers();
    GasForwardSnapshot snap;
    snap.layer_values.assign(static_cast<std::size_t>(std::max(0, L - 1)),
                             DenseMatrix(ds.graph.num_nodes, model.history_dim()));
    snap.final_out = DenseMatrix(ds.graph.num_nodes, model.num_classes());

    Model::ForwardOptions fwd;
    fwd.capture.layer_out = &snap.layer_values;
    fwd.capture.final_out = &snap.final_out;
    model.forward(nullptr, ds.features, full.plans[0], full.aggs[0], fwd);
    return snap;
}

InferenceResult infer_from_history(const Model& model, const HistoryStore& store,
                                   const Dataset& ds) {
    const std::int32_t L = model.num_layers();
    if (L >= 2 && store.num_layers() != L - 1)
        throw std::invalid_argument("infer_from_history: store layer count mismatch");

    BatchSchedule full = BatchSchedule::full_batch(ds.graph);
    InferenceResult result;
    Tensor logits;
    if (L == 1) {
        Model::ForwardOptions fwd;
        logits = model.forward(nullptr, ds.features, full.plans[0], full.aggs[0], fwd);
    } else {
        LayerContext ctx;
        ctx.plan = &full.plans[0];
        ctx.agg = &full.aggs[0];
        ctx.h_in = Tensor::from_matrix(store.layer_matrix(L - 1));
        if (model.spec().kind == LayerKind::kAppnp || model.spec().kind == LayerKind::kGcnii) {
            Tensor x = gather_features(ds.features, full.plans[0].extended_nodes);
            ctx.h0 = model.head_forward(nullptr, x, false, 0, 0);
        }
        logits = model.final_layer_forward(nullptr, ctx);
        for (NodeId v = 0; v < ds.graph.num_nodes; ++v)
            if (store.last_push_step(L - 1, v) < 0) {
                result.stale = true;
                break;
            }
    }
    result.predictions.resize(static_cast<std::size_t>(ds.graph.num_nodes));
    for (NodeId v = 0; v < ds.graph.num_nodes; ++v) {
        auto row = std::span<const float>(logits.data() + std::int64_t(v) * logits.cols(),
                                          static_cast<std::size_t>(logits.cols()));
        result.predictions[v] = argmax_row(row);
    }
    return result;
}

TrainResult train_model(const Dataset& ds, const ModelSpec& spec, const TrainSettings& settings) {
    TrainResult result;
    if (settings.method == "random")
        result.partitioning = random_partition(ds.graph, settings.parts, settings.partition_seed);
    else if (settings.method == "cluster")
        result.partitioning = cluster_partition(ds.graph, settings.parts, settings.partition_seed);
    else
        throw std::invalid_argument("train_model: unknown partition method '" + settings.method +
                                    "'");

    BatchSchedule sched = BatchSchedule::build(ds.graph, result.partitioning);
    BatchSchedule full = BatchSchedule::full_batch(ds.graph);
    Model model = Model::build(spec, static_cast<std::int32_t>(ds.features.cols),
                               ds.labels.num_classes);
    AdamState opt(model.params(), spec.opt);
    HistoryStore store(std::max(0, spec.num_layers - 1), ds.graph.num_nodes, model.history_dim());

    if (settings.warmup_full_batch && spec.num_layers >= 2) {
        GasForwardSnapshot snap = full_forward_snapshot(model, ds, full);
        for (std::int32_t l = 1; l < spec.num_layers; ++l)
            store.fill_layer(l, snap.layer_values[l - 1]);
    }

    std::optional<Prefetcher> prefetcher;
    if (settings.use_prefetch) prefetcher.emplace(store);

    for (std::int32_t epoch = 0; epoch < spec.epochs; ++epoch) {
        EpochOptions options;
        options.measure_staleness = settings.measure_staleness;
        options.prefetcher = prefetcher ? &*prefetcher : nullptr;
        EpochReport report = gas_epoch(model, opt, ds, sched, store, epoch, options);
        log::info("epoch %d loss %.4f train %.4f val %.4f test %.4f", (int)epoch, report.loss,
                  report.train_acc, report.val_acc, report.test_acc);
        result.epochs.push_back(std::move(report));
    }
    return result;
}

void write_report_csv(const std::string& path, const std::vector<EpochReport>& epochs,
                      std::int32_t num_history_layers) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write report: " + path);
    std::fprintf(f, "epoch,train_acc,val_acc,test_acc,loss,peak_floats");
    for (std::int32_t l = 1; l <= num_history_layers; ++l) std::fprintf(f, ",eps_max_l%d", l);
    std::fprintf(f, "\n");
    for (const auto& row : epochs) {
        std::fprintf(f, "%lld,%.6f,%.6f,%.6f,%.6f,%lld", (long long)row.epoch, row.train_acc,
                     row.val_acc, row.test_acc, row.loss, (long long)row.peak_floats);
        for (std::int32_t l = 0; l < num_history_layers; ++l)
            std::fprintf(f, ",%.9g", l < (std::int32_t)row.eps_max.size() ? row.eps_max[l] : 0.0);
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

}  // namespace gas
