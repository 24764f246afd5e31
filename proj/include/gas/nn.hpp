#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gas/tensor.hpp"

namespace gas {

struct AdamConfig {
    float lr = 0.01f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

// Standard Adam with bias correction. Parameters with unallocated gradients
// are treated as having zero gradient.
class AdamState {
  public:
    AdamState() = default;
    AdamState(std::vector<Tensor> params, AdamConfig cfg);

    void step();
    void zero_grad();
    std::int64_t step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }
    std::span<Tensor> params() { return params_; }

  private:
    std::vector<Tensor> params_;
    std::vector<std::vector<float>> m_;
    std::vector<std::vector<float>> v_;
    AdamConfig cfg_;
    std::int64_t t_ = 0;
};

// Rescales the global gradient norm to at most max_norm; returns the pre-clip
// norm. Identity when the norm is already within bounds.
double grad_clip(std::span<Tensor> params, double max_norm);

// Uniform Glorot: +-sqrt(6 / (fan_in + fan_out)), seeded.
void glorot_init(Tensor& w, std::uint64_t seed);

// Largest singular value via power iteration on W^T W.
double spectral_norm_estimate(const Tensor& w, int iters, std::uint64_t seed);

std::int32_t argmax_row(std::span<const float> row);

}  // namespace gas
