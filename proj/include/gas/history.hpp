#pragma once

#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "gas/graph.hpp"
#include "gas/matrix.hpp"

namespace gas {

struct StalenessReport {
    struct LayerStats {
        double eps_max = 0.0;   // max_v ||stored_v - reference_v||_2
        double eps_mean = 0.0;
        std::int64_t age_max = 0;  // steps since last push
        double age_mean = 0.0;
    };
    std::vector<LayerStats> layers;  // index 0 corresponds to history layer 1
};

// Host-resident per-layer embedding matrices for layers 1..L-1, with push/pull
// access and staleness accounting. Rows start at zero; never-pushed rows pull
// the zero initialization. Concurrent pulls are safe; pushes must target rows
// no concurrent reader touches (the partition schedule guarantees this).
class HistoryStore {
  public:
    HistoryStore() = default;
    HistoryStore(std::int32_t num_layers, NodeId num_nodes, std::int32_t dim);

    std::int32_t num_layers() const { return static_cast<std::int32_t>(layers_.size()); }
    NodeId num_nodes() const { return num_nodes_; }
    std::int32_t dim() const { return dim_; }

    // layer is 1-based (history of layer ell feeds layer ell+1).
    void push(std::int32_t layer, std::span<const NodeId> node_ids,
              std::span<const float> embeddings);
    DenseMatrix pull(std::int32_t layer, std::span<const NodeId> node_ids) const;
    const DenseMatrix& layer_matrix(std::int32_t layer) const;
    void fill_layer(std::int32_t layer, const DenseMatrix& values);  // warm start

    void advance_step() { ++step_; }
    std::int64_t step() const { return step_; }
    std::int64_t last_push_step(std::int32_t layer, NodeId v) const;

    // Row-norm distance of every stored row to a reference embedding matrix
    // per layer, plus age statistics.
    StalenessReport measure_staleness(const std::vector<DenseMatrix>& reference) const;

    void reset();  // zero matrices, clear push steps and step counter

    // Binary checkpoint: magic "GASH", u32 layers/nodes/dim, then matrices.
    void save_checkpoint(const std::string& path) const;
    static HistoryStore load_checkpoint(const std::string& path);

  private:
    void check_layer(std::int32_t layer) const;
    NodeId num_nodes_ = 0;
    std::int32_t dim_ = 0;
    std::vector<DenseMatrix> layers_;
    std::vector<std::vector<std::int64_t>> last_push_;
    std::int64_t step_ = 0;
};

class Prefetcher;

// Ticket for one batch's asynchronous halo pulls. wait() blocks until the
// requested layer is materialized; results equal a synchronous pull issued at
// begin() time because pushes and pulls of one batch touch disjoint rows.
class PrefetchHandle {
  public:
    const DenseMatrix& wait(std::int32_t layer);

  private:
    friend class Prefetcher;
    Prefetcher* owner_ = nullptr;
    std::uint64_t generation_ = 0;
};

// One transfer worker per training context. At batch start the trainer hands
// over the plan; the worker snapshots halo rows layer by layer while the
// trainer computes.
class Prefetcher {
  public:
    explicit Prefetcher(const HistoryStore& store);
    ~Prefetcher();
    Prefetcher(const Prefetcher&) = delete;
    Prefetcher& operator=(const Prefetcher&) = delete;

    PrefetchHandle begin(const BatchPlan& plan);

  private:
    friend class PrefetchHandle;
    const DenseMatrix& wait(std::uint64_t generation, std::int32_t layer);
    void worker_loop();

    const HistoryStore& store_;
    std::thread worker_;
    std::mutex mu_;
    std::condition_variable cv_job_;
    std::condition_variable cv_ready_;
    std::vector<NodeId> job_halos_;
    std::vector<DenseMatrix> buffers_;
    std::vector<std::uint8_t> ready_;
    std::uint64_t generation_ = 0;
    bool job_pending_ = false;
    bool stop_ = false;
};

}  // namespace gas
