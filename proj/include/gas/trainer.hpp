#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gas/history.hpp"
#include "gas/io.hpp"
#include "gas/layers.hpp"
#include "gas/nn.hpp"
#include "gas/partition.hpp"

namespace gas {

struct ModelSpec {
    LayerKind kind = LayerKind::kGcn;
    std::int32_t num_layers = 2;  // L
    std::int32_t hidden = 16;
    std::int32_t mlp_hidden = 0;  // GIN; 0 means same as hidden
    float dropout = 0.0f;
    float alpha = 0.1f;  // APPNP / GCNII
    float beta = 0.5f;   // GCNII
    float gin_eps = 0.0f;
    bool gin_train_eps = false;
    float l2_weight = 0.0f;
    float lipschitz_weight = 0.0f;
    float lipschitz_delta = 0.1f;
    float clip_max_norm = 0.0f;  // 0 disables clipping
    AdamConfig opt;
    std::int32_t epochs = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

// Per-layer embeddings scattered into global node rows during a forward pass.
struct LayerCapture {
    std::vector<DenseMatrix>* layer_out = nullptr;  // size L-1, post-activation
    DenseMatrix* final_out = nullptr;               // n x num_classes
};

// The model: input head (APPNP/GCNII), L message-passing layers, output head
// (GCNII). Parameters are seeded from the spec.
class Model {
  public:
    static Model build(const ModelSpec& spec, std::int32_t in_dim, std::int32_t num_classes);

    const ModelSpec& spec() const { return spec_; }
    std::int32_t num_layers() const { return spec_.num_layers; }
    std::int32_t num_classes() const { return num_classes_; }
    std::int32_t in_dim() const { return in_dim_; }
    // Dimension of the embeddings stored in the history (layers 1..L-1).
    std::int32_t history_dim() const;
    std::vector<Tensor> params() const { return params_; }
    const Layer& layer(std::int32_t ell) const { return layers_[ell - 1]; }  // 1-based

    struct ForwardOptions {
        bool training = false;
        std::int64_t epoch = 0;
        std::int64_t batch_index = 0;
        HistoryStore* store = nullptr;       // halo pulls (and pushes when push=true)
        bool push = false;
        PrefetchHandle* prefetch = nullptr;  // overrides synchronous pulls
        Tensor* reg_loss = nullptr;          // accumulates the Lipschitz auxiliary loss
        LayerCapture capture;
    };

    // Logits for the batch rows (|B_b| x num_classes).
    Tensor forward(Tape* tape, const FeatureMatrix& features, const BatchPlan& plan,
                   const PlanAggregation& agg, const ForwardOptions& opt) const;

    // Prediction-head output for the plan's extended rows (APPNP/GCNII); the
    // identity on features for GCN/GIN (never needed).
    Tensor head_forward(Tape* tape, const Tensor& x, bool training, std::int64_t epoch,
                        std::int64_t batch_index) const;
    // Applies only layer L (plus the GCNII output head) to the given inputs.
    Tensor final_layer_forward(Tape* tape, const LayerContext& ctx) const;

  private:
    ModelSpec spec_;
    std::int32_t in_dim_ = 0;
    std::int32_t num_classes_ = 0;
    std::vector<Layer> layers_;
    Tensor head_w1_, head_b1_, head_w2_, head_b2_;  // APPNP (2-layer), GCNII (w1 only)
    Tensor out_w_, out_b_;                          // GCNII classifier
    std::vector<Tensor> params_;
};

// Plans plus aggregation stencils for every partition of a schedule.
struct BatchSchedule {
    std::vector<BatchPlan> plans;
    std::vector<PlanAggregation> aggs;
    static BatchSchedule build(const Graph& g, const Partitioning& parts);
    static BatchSchedule full_batch(const Graph& g);
};

struct EpochOptions {
    bool train = true;      // optimizer steps, dropout, regularizers
    bool push = true;       // write batch rows into the history (gas only)
    bool shuffle = true;    // reshuffle batch order per epoch (gas only)
    bool evaluate = true;   // full-batch accuracy eval after the epoch
    bool measure_staleness = false;  // frozen no-push pass, eps per layer
    Prefetcher* prefetcher = nullptr;
};

struct EpochReport {
    std::int64_t epoch = 0;
    double train_acc = 0.0, val_acc = 0.0, test_acc = 0.0;
    double loss = 0.0;                       // mean batch objective
    std::int64_t peak_floats = 0;            // max over batches
    std::vector<std::int64_t> batch_peak_floats;
    std::vector<double> eps_max;             // per history layer, if measured
    std::int64_t edges_per_layer = 0;        // aggregated graph edges per layer
};

// One optimization step over all labeled training nodes (exact layers).
EpochReport full_batch_epoch(Model& model, AdamState& opt, const Dataset& ds,
                             const BatchSchedule& full, std::int64_t epoch,
                             const EpochOptions& options);

// Algorithm-style mini-batch epoch: per batch, compute layers from in-batch
// values plus pulled histories, push batch rows, one optimizer step per batch.
EpochReport gas_epoch(Model& model, AdamState& opt, const Dataset& ds,
                      const BatchSchedule& sched, HistoryStore& store, std::int64_t epoch,
                      const EpochOptions& options);

struct Accuracy {
    double train = 0.0, val = 0.0, test = 0.0;
};
Accuracy evaluate(const Model& model, const Dataset& ds, const BatchSchedule& full);

// Runs a frozen, push-free GAS pass and returns per-layer embeddings plus the
// final logits, all scattered to global rows.
struct GasForwardSnapshot {
    std::vector<DenseMatrix> layer_values;  // size L-1
    DenseMatrix final_out;
};
GasForwardSnapshot gas_forward_snapshot(const Model& model, const Dataset& ds,
                                        const BatchSchedule& sched, const HistoryStore& store);
GasForwardSnapshot full_forward_snapshot(const Model& model, const Dataset& ds,
                                         const BatchSchedule& full);

struct InferenceResult {
    std::vector<std::int32_t> predictions;
    bool stale = false;  // some layer-(L-1) rows were never pushed
};
// Predictions for all nodes from one final-layer application over the pulled
// layer-(L-1) histories; no recursion through earlier layers.
InferenceResult infer_from_history(const Model& model, const HistoryStore& store,
                                   const Dataset& ds);

// Full experiment orchestration used by the CLI.
struct TrainSettings {
    std::int32_t parts = 1;
    std::string method = "cluster";  // or "random"
    bool warmup_full_batch = false;  // fill histories with one exact pass
    bool use_prefetch = false;
    bool measure_staleness = true;
    std::uint64_t partition_seed = 0;
};

struct TrainResult {
    std::vector<EpochReport> epochs;
    Partitioning partitioning;
};

TrainResult train_model(const Dataset& ds, const ModelSpec& spec, const TrainSettings& settings);

void write_report_csv(const std::string& path, const std::vector<EpochReport>& epochs,
                      std::int32_t num_history_layers);

}  // namespace gas
