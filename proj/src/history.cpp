#include "gas/history.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace gas {

HistoryStore::HistoryStore(std::int32_t num_layers, NodeId num_nodes, std::int32_t dim)
    : num_nodes_(num_nodes), dim_(dim) {
    if (num_layers < 0 || num_nodes < 0 || dim < 0)
        throw std::invalid_argument("HistoryStore: negative shape");
    layers_.reserve(static_cast<std::size_t>(num_layers));
    last_push_.reserve(static_cast<std::size_t>(num_layers));
    for (std::int32_t l = 0; l < num_layers; ++l) {
        layers_.emplace_back(num_nodes, dim, 0.0f);
        last_push_.emplace_back(static_cast<std::size_t>(num_nodes), -1);
    }
}

void HistoryStore::check_layer(std::int32_t layer) const {
    if (layer < 1 || layer > num_layers())
        throw std::invalid_argument("HistoryStore: layer " + std::to_string(layer) +
                                    " out of range [1," + std::to_string(num_layers()) + "]");
}

void HistoryStore::push(std::int32_t layer, std::span<const NodeId> node_ids,
                        std::span<const float> embeddings) {
    check_layer(layer);
    if (embeddings.size() != node_ids.size() * static_cast<std::size_t>(dim_))
        throw std::invalid_argument("HistoryStore::push: row count mismatch");
    DenseMatrix& mat = layers_[layer - 1];
    auto& stamps = last_push_[layer - 1];
    for (std::size_t i = 0; i < node_ids.size(); ++i) {
        const NodeId v = node_ids[i];
        if (v < 0 || v >= num_nodes_)
            throw std::invalid_argument("HistoryStore::push: node id out of range");
        std::memcpy(mat.row(v), embeddings.data() + i * dim_, sizeof(float) * dim_);
        stamps[v] = step_;
    }
}

DenseMatrix HistoryStore::pull(std::int32_t layer, std::span<const NodeId> node_ids) const {
    check_layer(layer);
    DenseMatrix out(static_cast<std::int64_t>(node_ids.size()), dim_);
    const DenseMatrix& mat = layers_[layer - 1];
    for (std::size_t i = 0; i < node_ids.size(); ++i) {
        const NodeId v = node_ids[i];
        if (v < 0 || v >= num_nodes_)
            throw std::invalid_argument("HistoryStore::pull: node id out of range");
        std::memcpy(out.row(static_cast<std::int64_t>(i)), mat.row(v), sizeof(float) * dim_);
    }
    return out;
}

const DenseMatrix& HistoryStore::layer_matrix(std::int32_t layer) const {
    check_layer(layer);
    return layers_[layer - 1];
}

void HistoryStore::fill_layer(std::int32_t layer, const DenseMatrix& values) {
    check_layer(layer);
    if (values.rows != num_nodes_ || values.cols != dim_)
        throw std::invalid_argument("HistoryStore::fill_layer: shape mismatch");
    layers_[layer - 1] = values;
    for (auto& s : last_push_[layer - 1]) s = step_;
}

std::int64_t HistoryStore::last_push_step(std::int32_t layer, NodeId v) const {
    check_layer(layer);
    if (v < 0 || v >= num_nodes_)
        throw std::invalid_argument("HistoryStore: node id out of range");
    return last_push_[layer - 1][v];
}

StalenessReport HistoryStore::measure_staleness(const std::vector<DenseMatrix>& reference) const {
    if (reference.size() != layers_.size())
        throw std::invalid_argument("measure_staleness: need one reference matrix per layer");
    StalenessReport report;
    report.layers.resize(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseMatrix& ref = reference[l];
        if (ref.rows != num_nodes_ || ref.cols != dim_)
            throw std::invalid_argument("measure_staleness: reference shape mismatch");
        double sum = 0.0, mx = 0.0;
        double age_sum = 0.0;
        std::int64_t age_max = 0;
        for (NodeId v = 0; v < num_nodes_; ++v) {
            double acc = 0.0;
            const float* a = layers_[l].row(v);
            const float* b = ref.row(v);
            for (std::int32_t j = 0; j < dim_; ++j) {
                const double d = double(a[j]) - double(b[j]);
                acc += d * d;
            }
            const double norm = std::sqrt(acc);
            sum += norm;
            mx = std::max(mx, norm);
            const std::int64_t stamp = last_push_[l][v];
            const std::int64_t age = stamp < 0 ? step_ + 1 : step_ - stamp;
            age_sum += static_cast<double>(age);
            age_max = std::max(age_max, age);
        }
        auto& stats = report.layers[l];
        stats.eps_max = mx;
        stats.eps_mean = num_nodes_ > 0 ? sum / num_nodes_ : 0.0;
        stats.age_max = age_max;
        stats.age_mean = num_nodes_ > 0 ? age_sum / num_nodes_ : 0.0;
    }
    return report;
}

void HistoryStore::reset() {
    for (auto& m : layers_) std::fill(m.values.begin(), m.values.end(), 0.0f);
    for (auto& s : last_push_) std::fill(s.begin(), s.end(), -1);
    step_ = 0;
}

namespace {
constexpr char kMagic[4] = {'G', 'A', 'S', 'H'};

void write_u32(std::FILE* f, std::uint32_t v) {
    if (std::fwrite(&v, sizeof(v), 1, f) != 1) throw std::runtime_error("checkpoint: write failed");
}
std::uint32_t read_u32(std::FILE* f) {
    std::uint32_t v = 0;
    if (std::fread(&v, sizeof(v), 1, f) != 1) throw std::runtime_error("checkpoint: truncated header");
    return v;
}
}  // namespace

void HistoryStore::save_checkpoint(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    try {
        if (std::fwrite(kMagic, 1, 4, f) != 4) throw std::runtime_error("checkpoint: write failed");
        write_u32(f, static_cast<std::uint32_t>(num_layers()));
        write_u32(f, static_cast<std::uint32_t>(num_nodes_));
        write_u32(f, static_cast<std::uint32_t>(dim_));
        for (const auto& m : layers_)
            if (!m.values.empty() &&
                std::fwrite(m.values.data(), sizeof(float), m.values.size(), f) != m.values.size())
                throw std::runtime_error("checkpoint: write failed");
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);
}

HistoryStore HistoryStore::load_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    HistoryStore store;
    try {
        char magic[4];
        if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, kMagic, 4) != 0)
            throw std::runtime_error("checkpoint: bad magic in " + path);
        const std::uint32_t layers = read_u32(f);
        const std::uint32_t nodes = read_u32(f);
        const std::uint32_t dim = read_u32(f);
        store = HistoryStore(static_cast<std::int32_t>(layers), static_cast<NodeId>(nodes),
                             static_cast<std::int32_t>(dim));
        for (std::uint32_t l = 0; l < layers; ++l) {
            auto& m = store.layers_[l];
            if (!m.values.empty() &&
                std::fread(m.values.data(), sizeof(float), m.values.size(), f) != m.values.size())
                throw std::runtime_error("checkpoint: truncated matrix in " + path);
            for (auto& s : store.last_push_[l]) s = 0;
        }
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);
    return store;
}

// ---------------------------------------------------------------------------
// Prefetcher
// ---------------------------------------------------------------------------

Prefetcher::Prefetcher(const HistoryStore& store) : store_(store) {
    buffers_.resize(static_cast<std::size_t>(store.num_layers()));
    ready_.assign(buffers_.size(), 0);
    worker_ = std::thread([this] { worker_loop(); });
}

Prefetcher::~Prefetcher() {
    {
        std::lock_guard<std::mutex> lock(mu_);
        stop_ = true;
    }
    cv_job_.notify_all();
    worker_.join();
}

PrefetchHandle Prefetcher::begin(const BatchPlan& plan) {
    PrefetchHandle handle;
    {
        std::lock_guard<std::mutex> lock(mu_);
        job_halos_ = plan.halo_nodes;
        std::fill(ready_.begin(), ready_.end(), 0);
        ++generation_;
        job_pending_ = true;
        handle.owner_ = this;
        handle.generation_ = generation_;
    }
    cv_job_.notify_one();
    return handle;
}

void Prefetcher::worker_loop() {
    for (;;) {
        std::vector<NodeId> halos;
        std::uint64_t gen;
        {
            std::unique_lock<std::mutex> lock(mu_);
            cv_job_.wait(lock, [this] { return job_pending_ || stop_; });
            if (stop_) return;
            job_pending_ = false;
            halos = job_halos_;
            gen = generation_;
        }
        for (std::int32_t layer = 1; layer <= store_.num_layers(); ++layer) {
            DenseMatrix rows = store_.pull(layer, halos);
            std::unique_lock<std::mutex> lock(mu_);
            if (gen != generation_ || stop_) break;  // superseded job
            buffers_[layer - 1] = std::move(rows);
            ready_[layer - 1] = 1;
            lock.unlock();
            cv_ready_.notify_all();
        }
    }
}

const DenseMatrix& Prefetcher::wait(std::uint64_t generation, std::int32_t layer) {
    if (layer < 1 || layer > store_.num_layers())
        throw std::invalid_argument("Prefetcher: layer " + std::to_string(layer) +
                                    " was never requested");
    std::unique_lock<std::mutex> lock(mu_);
    if (generation != generation_)
        throw std::logic_error("Prefetcher: handle does not match the active batch");
    cv_ready_.wait(lock, [&] { return ready_[layer - 1] != 0; });
    return buffers_[layer - 1];
}

const DenseMatrix& PrefetchHandle::wait(std::int32_t layer) {
    if (!owner_) throw std::logic_error("PrefetchHandle: empty handle");
    return owner_->wait(generation_, layer);
}

}  // namespace gas
