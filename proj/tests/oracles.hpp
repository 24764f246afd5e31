#pragma once

// Test-only oracles, independent of the library's implementation paths:
// brute-force dense layer references, a central finite-difference gradient
// checker, a string-interned WL reimplementation and small random generators.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "gas/graph.hpp"
#include "gas/matrix.hpp"
#include "gas/rng.hpp"
#include "gas/tensor.hpp"

namespace oracle {

using gas::DenseMatrix;
using gas::Edge;
using gas::Graph;
using gas::NodeId;
using gas::Tensor;

inline Graph random_graph(NodeId n, double edge_prob, std::uint64_t seed) {
    gas::Rng rng(gas::derive_seed(seed, 0x6f726163));
    std::vector<Edge> edges;
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j)
            if (rng.next_double() < edge_prob) edges.emplace_back(i, j);
    return gas::build_graph(edges, n, /*symmetrize=*/true);
}

inline DenseMatrix random_matrix(std::int64_t rows, std::int64_t cols, std::uint64_t seed,
                                 double scale = 1.0) {
    DenseMatrix m(rows, cols);
    gas::Rng rng(gas::derive_seed(seed, 0x6d617472));
    for (float& v : m.values) v = static_cast<float>(scale * rng.next_normal());
    return m;
}

// Dense adjacency with self-loops and symmetric normalization:
// Y = D^{-1/2} (A+I) D^{-1/2} H W, evaluated with plain double loops.
inline DenseMatrix dense_gcn_reference(const Graph& g, const DenseMatrix& h,
                                       const DenseMatrix& w) {
    const std::int64_t n = g.num_nodes;
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (NodeId v = 0; v < n; ++v) {
        for (NodeId src : g.neighbors(v)) a[v][src] = 1.0;
        a[v][v] = 1.0;
    }
    std::vector<double> dhat(n);
    for (NodeId v = 0; v < n; ++v) dhat[v] = double(g.degree(v)) + 1.0;

    DenseMatrix out(n, w.cols);
    for (NodeId v = 0; v < n; ++v)
        for (std::int64_t c = 0; c < w.cols; ++c) {
            double acc = 0.0;
            for (NodeId u = 0; u < n; ++u) {
                if (a[v][u] == 0.0) continue;
                double hw = 0.0;
                for (std::int64_t k = 0; k < h.cols; ++k) hw += double(h.at(u, k)) * w.at(k, c);
                acc += hw / (std::sqrt(dhat[u]) * std::sqrt(dhat[v]));
            }
            out.at(v, c) = static_cast<float>(acc);
        }
    return out;
}

// GIN pre-MLP reference: (A + (1+eps) I) H.
inline DenseMatrix dense_gin_pre_reference(const Graph& g, const DenseMatrix& h, double eps) {
    DenseMatrix out(g.num_nodes, h.cols);
    for (NodeId v = 0; v < g.num_nodes; ++v)
        for (std::int64_t c = 0; c < h.cols; ++c) {
            double acc = (1.0 + eps) * double(h.at(v, c));
            for (NodeId u : g.neighbors(v)) acc += double(h.at(u, c));
            out.at(v, c) = static_cast<float>(acc);
        }
    return out;
}

// One personalized-PageRank propagation step on dense matrices.
inline DenseMatrix dense_appnp_step(const Graph& g, const DenseMatrix& h, const DenseMatrix& h0,
                                    double alpha) {
    const std::int64_t n = g.num_nodes;
    DenseMatrix out(n, h.cols);
    for (NodeId v = 0; v < n; ++v)
        for (std::int64_t c = 0; c < h.cols; ++c) {
            double acc = 0.0;
            const double dv = std::sqrt(double(g.degree(v)) + 1.0);
            for (NodeId u : g.neighbors(v))
                acc += double(h.at(u, c)) / (std::sqrt(double(g.degree(u)) + 1.0) * dv);
            acc += double(h.at(v, c)) / (dv * dv);
            out.at(v, c) = static_cast<float>(alpha * double(h0.at(v, c)) + (1.0 - alpha) * acc);
        }
    return out;
}

// GCNII layer reference: (alpha H0 + (1-alpha) P H) ((1-beta) I + beta W),
// with P the normalized adjacency with self-loops.
inline DenseMatrix dense_gcnii_reference(const Graph& g, const DenseMatrix& h,
                                         const DenseMatrix& h0, const DenseMatrix& w,
                                         double alpha, double beta) {
    const std::int64_t n = g.num_nodes;
    const std::int64_t d = w.cols;
    DenseMatrix mixed(n, h.cols);
    for (NodeId v = 0; v < n; ++v)
        for (std::int64_t c = 0; c < h.cols; ++c) {
            double acc = 0.0;
            const double dv = std::sqrt(double(g.degree(v)) + 1.0);
            for (NodeId u : g.neighbors(v))
                acc += double(h.at(u, c)) / (std::sqrt(double(g.degree(u)) + 1.0) * dv);
            acc += double(h.at(v, c)) / (dv * dv);
            mixed.at(v, c) =
                static_cast<float>(alpha * double(h0.at(v, c)) + (1.0 - alpha) * acc);
        }
    DenseMatrix out(n, d);
    for (NodeId v = 0; v < n; ++v)
        for (std::int64_t c = 0; c < d; ++c) {
            double acc = 0.0;
            for (std::int64_t k = 0; k < w.rows; ++k) {
                const double wt = (k == c ? 1.0 - beta : 0.0) + beta * double(w.at(k, c));
                acc += double(mixed.at(v, k)) * wt;
            }
            out.at(v, c) = static_cast<float>(acc);
        }
    return out;
}

inline double max_abs_diff(const Tensor& a, const DenseMatrix& b) {
    double mx = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i)
        mx = std::max(mx, std::abs(double(a.data()[i]) - double(b.values[i])));
    return mx;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    double mx = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        mx = std::max(mx, std::abs(double(a.values[i]) - double(b.values[i])));
    return mx;
}

// Central finite differences on the given leaves against analytic gradients.
// `eval` must rebuild the computation from the leaf tensors' current values
// and return the scalar loss. Returns max |fd - analytic| / max(1, |g|_inf).
inline double fd_max_rel_err(const std::function<double()>& eval, std::vector<Tensor> leaves,
                             const std::vector<DenseMatrix>& analytic, double h = 5e-3) {
    double scale = 1.0;
    for (const auto& g : analytic)
        for (float v : g.values) scale = std::max(scale, std::abs(double(v)));
    double worst = 0.0;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        Tensor& leaf = leaves[li];
        for (std::int64_t e = 0; e < leaf.size(); ++e) {
            const float saved = leaf.data()[e];
            leaf.data()[e] = static_cast<float>(saved + h);
            const double fp = eval();
            leaf.data()[e] = static_cast<float>(saved - h);
            const double fm = eval();
            leaf.data()[e] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - double(analytic[li].values[e])) / scale);
        }
    }
    return worst;
}

// Independent WL implementation: colors encoded as strings, interned via map.
inline std::vector<std::int32_t> wl_reference(const Graph& g,
                                              std::span<const std::int32_t> init,
                                              std::int32_t rounds) {
    std::vector<std::string> color(static_cast<std::size_t>(g.num_nodes));
    for (NodeId v = 0; v < g.num_nodes; ++v) color[v] = std::to_string(init[v]);
    for (std::int32_t r = 0; r < rounds; ++r) {
        std::vector<std::string> next(color.size());
        for (NodeId v = 0; v < g.num_nodes; ++v) {
            std::vector<std::string> ms;
            for (NodeId w : g.neighbors(v)) ms.push_back(color[w]);
            std::sort(ms.begin(), ms.end());
            std::ostringstream key;
            key << color[v] << "|";
            for (const auto& s : ms) key << s << ",";
            next[v] = key.str();
        }
        color = std::move(next);
    }
    std::map<std::string, std::int32_t> intern;
    std::vector<std::int32_t> out(color.size());
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        auto [it, fresh] = intern.emplace(color[v], static_cast<std::int32_t>(intern.size()));
        out[v] = it->second;
    }
    return out;
}

// Partition equality up to relabeling.
inline bool same_partition(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
    if (a.size() != b.size()) return false;
    std::map<std::int32_t, std::int32_t> fwd, bwd;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto f = fwd.emplace(a[i], b[i]);
        if (!f.second && f.first->second != b[i]) return false;
        auto r = bwd.emplace(b[i], a[i]);
        if (!r.second && r.first->second != a[i]) return false;
    }
    return true;
}

}  // namespace oracle
