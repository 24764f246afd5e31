#include "gas/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "gas/rng.hpp"

namespace gas {

AdamState::AdamState(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Tensor& p : params_) {
        m_.emplace_back(static_cast<std::size_t>(p.size()), 0.0f);
        v_.emplace_back(static_cast<std::size_t>(p.size()), 0.0f);
    }
}

void AdamState::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(double(cfg_.beta1), double(t_));
    const double bc2 = 1.0 - std::pow(double(cfg_.beta2), double(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        const std::int64_t sz = p.size();
        const float* g = p.has_grad() ? p.grad() : nullptr;
        float* val = p.data();
        for (std::int64_t e = 0; e < sz; ++e) {
            const double ge = g ? g[e] : 0.0;
            const double m = double(cfg_.beta1) * m_[i][e] + (1.0 - double(cfg_.beta1)) * ge;
            const double v = double(cfg_.beta2) * v_[i][e] + (1.0 - double(cfg_.beta2)) * ge * ge;
            m_[i][e] = static_cast<float>(m);
            v_[i][e] = static_cast<float>(v);
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            val[e] = static_cast<float>(val[e] - double(cfg_.lr) * mhat /
                                                     (std::sqrt(vhat) + double(cfg_.eps)));
        }
    }
}

void AdamState::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

double grad_clip(std::span<Tensor> params, double max_norm) {
    if (max_norm <= 0.0) throw std::invalid_argument("grad_clip: max_norm must be positive");
    double acc = 0.0;
    for (Tensor& p : params) {
        if (!p.has_grad()) continue;
        for (float g : p.grad_span()) acc += double(g) * g;
    }
    const double norm = std::sqrt(acc);
    if (norm > max_norm) {
        const float s = static_cast<float>(max_norm / norm);
        for (Tensor& p : params) {
            if (!p.has_grad()) continue;
            for (float& g : p.grad_span()) g *= s;
        }
    }
    return norm;
}

void glorot_init(Tensor& w, std::uint64_t seed) {
    const double bound = std::sqrt(6.0 / double(w.rows() + w.cols()));
    Rng rng(seed);
    for (float& v : w.values())
        v = static_cast<float>((rng.next_double() * 2.0 - 1.0) * bound);
}

double spectral_norm_estimate(const Tensor& w, int iters, std::uint64_t seed) {
    const std::int64_t m = w.rows(), n = w.cols();
    if (m == 0 || n == 0) return 0.0;
    Rng rng(derive_seed(seed, 0x736e6f72));  // "snor"
    std::vector<double> v(static_cast<std::size_t>(n)), u(static_cast<std::size_t>(m));
    for (double& x : v) x = rng.next_normal();

    double sigma = 0.0;
    for (int it = 0; it < iters; ++it) {
        // u = W v
        for (std::int64_t i = 0; i < m; ++i) {
            double acc = 0.0;
            const float* row = w.data() + i * n;
            for (std::int64_t j = 0; j < n; ++j) acc += double(row[j]) * v[j];
            u[i] = acc;
        }
        double un = 0.0;
        for (double x : u) un += x * x;
        un = std::sqrt(un);
        if (un == 0.0) return 0.0;
        sigma = un;
        // v = W^T u / |W^T u|
        for (std::int64_t j = 0; j < n; ++j) v[j] = 0.0;
        for (std::int64_t i = 0; i < m; ++i) {
            const float* row = w.data() + i * n;
            for (std::int64_t j = 0; j < n; ++j) v[j] += double(row[j]) * u[i];
        }
        double vn = 0.0;
        for (double x : v) vn += x * x;
        vn = std::sqrt(vn);
        if (vn == 0.0) return 0.0;
        for (double& x : v) x /= vn;
    }
    // After normalizing v, |W v| is the Rayleigh estimate of sigma_max.
    for (std::int64_t i = 0; i < m; ++i) {
        double acc = 0.0;
        const float* row = w.data() + i * n;
        for (std::int64_t j = 0; j < n; ++j) acc += double(row[j]) * v[j];
        u[i] = acc;
    }
    double un = 0.0;
    for (double x : u) un += x * x;
    return std::sqrt(un);
}

std::int32_t argmax_row(std::span<const float> row) {
    std::int32_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
        if (row[j] > row[best]) best = static_cast<std::int32_t>(j);
    return best;
}

}  // namespace gas
