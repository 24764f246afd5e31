#include "gas/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "gas/nn.hpp"
#include "gas/rng.hpp"

namespace gas {

namespace {

DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix y(a.rows, b.cols);
    std::vector<double> acc(static_cast<std::size_t>(b.cols));
    for (std::int64_t i = 0; i < a.rows; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::int64_t t = 0; t < a.cols; ++t) {
            const double av = a.at(i, t);
            if (av == 0.0) continue;
            const float* brow = b.row(t);
            for (std::int64_t j = 0; j < b.cols; ++j) acc[j] += av * brow[j];
        }
        for (std::int64_t j = 0; j < b.cols; ++j) y.at(i, j) = static_cast<float>(acc[j]);
    }
    return y;
}

double row_distance(const float* a, const float* b, std::int64_t dim) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < dim; ++j) {
        const double d = double(a[j]) - double(b[j]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

double frob_norm(const DenseMatrix& m) {
    double acc = 0.0;
    for (float v : m.values) acc += double(v) * v;
    return std::sqrt(acc);
}

void sample_in_ball(Rng& rng, float* row, std::int64_t dim, double radius) {
    std::vector<double> dir(static_cast<std::size_t>(dim));
    double norm2 = 0.0;
    for (auto& x : dir) {
        x = rng.next_normal();
        norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    const double r = radius * std::pow(rng.next_double(), 1.0 / double(dim));
    for (std::int64_t j = 0; j < dim; ++j)
        row[j] = norm > 0.0 ? static_cast<float>(dir[j] / norm * r) : 0.0f;
}

}  // namespace

double lemma1_bound(double delta, double eps, double k1, double k2, std::int64_t degree,
                    bool mean_aggregation) {
    if (delta < 0 || eps < 0 || k1 < 0 || k2 < 0 || degree < 0)
        throw std::invalid_argument("lemma1_bound: inputs must be non-negative");
    const double agg_factor = mean_aggregation ? 1.0 : static_cast<double>(degree);
    return delta * k2 + (delta + eps) * k1 * k2 * agg_factor;
}

double theorem1_bound(std::span<const double> eps_per_layer, double k1, double k2,
                      std::int64_t degree, std::int32_t num_layers, bool mean_aggregation) {
    if (num_layers < 2) throw std::invalid_argument("theorem1_bound: needs at least 2 layers");
    if (static_cast<std::int32_t>(eps_per_layer.size()) != num_layers - 1)
        throw std::invalid_argument("theorem1_bound: need one eps per history layer");
    const double agg_factor = mean_aggregation ? 1.0 : static_cast<double>(degree);
    double total = 0.0;
    for (std::int32_t ell = 1; ell <= num_layers - 1; ++ell) {
        const double base = k1 * k2 * agg_factor;
        total += eps_per_layer[ell - 1] * std::pow(base, double(num_layers - ell));
    }
    return total;
}

// ---------------------------------------------------------------------------
// Linear message model + GAS bound harness
// ---------------------------------------------------------------------------

LinearMsgModel LinearMsgModel::random(std::int32_t num_layers, std::int32_t dim,
                                      double weight_scale, bool mean_aggregation,
                                      std::uint64_t seed) {
    LinearMsgModel m;
    m.num_layers = num_layers;
    m.dim = dim;
    m.mean_aggregation = mean_aggregation;
    for (std::int32_t l = 0; l < num_layers; ++l) {
        for (int which = 0; which < 2; ++which) {
            DenseMatrix w(dim, dim);
            Rng rng(derive_seed(seed, 0x6c6d6d + which, l));
            for (float& v : w.values) v = static_cast<float>(rng.next_normal());
            // Rescale so the spectral norm equals weight_scale.
            Tensor t = Tensor::from_matrix(w);
            const double sigma = spectral_norm_estimate(t, 100, derive_seed(seed, 7, l));
            if (sigma > 0.0)
                for (float& v : w.values) v = static_cast<float>(v * weight_scale / sigma);
            (which == 0 ? m.w_msg : m.w_upd).push_back(std::move(w));
        }
    }
    return m;
}

double LinearMsgModel::measure_k1(std::int32_t iters, std::uint64_t seed) const {
    double k = 0.0;
    for (const auto& w : w_msg)
        k = std::max(k, spectral_norm_estimate(Tensor::from_matrix(w), iters, seed));
    return k;
}

double LinearMsgModel::measure_k2(std::int32_t iters, std::uint64_t seed) const {
    double k = 0.0;
    for (const auto& w : w_upd)
        k = std::max(k, spectral_norm_estimate(Tensor::from_matrix(w), iters, seed));
    return k;
}

std::vector<DenseMatrix> LinearMsgModel::full_forward(const Graph& g,
                                                      const DenseMatrix& x) const {
    std::vector<DenseMatrix> out;
    DenseMatrix h = x;
    for (std::int32_t l = 0; l < num_layers; ++l) {
        DenseMatrix msg = dense_matmul(h, w_msg[l]);
        DenseMatrix pre(g.num_nodes, dim);
        for (NodeId v = 0; v < g.num_nodes; ++v) {
            std::vector<double> acc(static_cast<std::size_t>(dim), 0.0);
            for (NodeId w : g.neighbors(v))
                for (std::int32_t j = 0; j < dim; ++j) acc[j] += msg.at(w, j);
            const double scale =
                mean_aggregation && g.degree(v) > 0 ? 1.0 / double(g.degree(v)) : 1.0;
            for (std::int32_t j = 0; j < dim; ++j)
                pre.at(v, j) = static_cast<float>(double(h.at(v, j)) + acc[j] * scale);
        }
        h = dense_matmul(pre, w_upd[l]);
        out.push_back(h);
    }
    return out;
}

BoundCheckResult gas_bound_check(const Graph& g, const DenseMatrix& x,
                                 const LinearMsgModel& model, const Partitioning& parts,
                                 double k1, double k2) {
    const std::int32_t L = model.num_layers;
    const std::int32_t dim = model.dim;
    if (L < 2) throw std::invalid_argument("gas_bound_check: needs at least 2 layers");

    std::vector<DenseMatrix> history(static_cast<std::size_t>(L - 1),
                                     DenseMatrix(g.num_nodes, dim));
    std::vector<DenseMatrix> h_tilde(static_cast<std::size_t>(L), DenseMatrix(g.num_nodes, dim));

    struct Pull {
        std::int32_t layer;
        NodeId node;
        std::vector<float> value;
    };
    std::vector<Pull> pulls;

    for (const auto& nodes : parts.parts) {
        BatchPlan plan = make_batch_plan(g, nodes);
        const std::int64_t ext = plan.num_extended();

        DenseMatrix h_prev(ext, dim);
        for (std::int64_t i = 0; i < ext; ++i) {
            const float* src = x.row(plan.extended_nodes[i]);
            std::copy(src, src + dim, h_prev.row(i));
        }

        for (std::int32_t l = 1; l <= L; ++l) {
            DenseMatrix msg = dense_matmul(h_prev, model.w_msg[l - 1]);
            DenseMatrix out(static_cast<std::int64_t>(plan.batch_nodes.size()), dim);
            for (std::size_t i = 0; i < plan.batch_nodes.size(); ++i) {
                const NodeId v = plan.batch_nodes[i];
                const NodeId lv = plan.batch_local_rows[i];
                std::vector<double> acc(static_cast<std::size_t>(dim), 0.0);
                for (NodeId lw : plan.local_graph.neighbors(lv))
                    for (std::int32_t j = 0; j < dim; ++j) acc[j] += msg.at(lw, j);
                const double scale = model.mean_aggregation && g.degree(v) > 0
                                         ? 1.0 / double(g.degree(v))
                                         : 1.0;
                for (std::int32_t j = 0; j < dim; ++j)
                    out.at(static_cast<std::int64_t>(i), j) =
                        static_cast<float>(double(h_prev.at(lv, j)) + acc[j] * scale);
            }
            out = dense_matmul(out, model.w_upd[l - 1]);
            for (std::size_t i = 0; i < plan.batch_nodes.size(); ++i)
                std::copy(out.row(i), out.row(i) + dim, h_tilde[l - 1].row(plan.batch_nodes[i]));

            if (l == L) break;
            // Push batch rows, then pull halos for the next layer.
            for (std::size_t i = 0; i < plan.batch_nodes.size(); ++i)
                std::copy(out.row(i), out.row(i) + dim, history[l - 1].row(plan.batch_nodes[i]));

            DenseMatrix next(ext, dim);
            for (std::size_t i = 0; i < plan.batch_nodes.size(); ++i)
                std::copy(out.row(i), out.row(i) + dim, next.row(plan.batch_local_rows[i]));
            for (std::size_t i = 0; i < plan.halo_nodes.size(); ++i) {
                const NodeId w = plan.halo_nodes[i];
                const float* row = history[l - 1].row(w);
                std::copy(row, row + dim, next.row(plan.halo_local_rows[i]));
                pulls.push_back({l, w, std::vector<float>(row, row + dim)});
            }
            h_prev = std::move(next);
        }
    }

    BoundCheckResult result;
    result.eps.assign(static_cast<std::size_t>(L - 1), 0.0);
    for (const Pull& p : pulls) {
        const double d = row_distance(p.value.data(), h_tilde[p.layer - 1].row(p.node), dim);
        result.eps[p.layer - 1] = std::max(result.eps[p.layer - 1], d);
        if (d > 0.0) result.nontrivial = true;
    }

    std::vector<DenseMatrix> exact = model.full_forward(g, x);
    result.node_error.resize(static_cast<std::size_t>(g.num_nodes));
    result.node_bound.resize(static_cast<std::size_t>(g.num_nodes));
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        result.node_error[v] = row_distance(h_tilde[L - 1].row(v), exact[L - 1].row(v), dim);
        result.node_bound[v] = theorem1_bound(result.eps, k1, k2, g.degree(v), L,
                                              model.mean_aggregation);
        if (result.node_error[v] > result.node_bound[v]) ++result.violations;
    }
    return result;
}

Lemma1Case lemma1_empirical(const Graph& g, const DenseMatrix& x, const LinearMsgModel& model,
                            double delta, double eps, double k1, double k2, std::uint64_t seed) {
    const std::int32_t dim = model.dim;
    DenseMatrix h_tilde = x;   // delta-close inputs
    DenseMatrix h_bar = x;     // eps-stale histories around h_tilde
    Rng rng(derive_seed(seed, 0x6c31));
    std::vector<float> noise(static_cast<std::size_t>(dim));
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        sample_in_ball(rng, noise.data(), dim, delta);
        for (std::int32_t j = 0; j < dim; ++j) h_tilde.at(v, j) += noise[j];
        sample_in_ball(rng, noise.data(), dim, eps);
        for (std::int32_t j = 0; j < dim; ++j)
            h_bar.at(v, j) = h_tilde.at(v, j) + noise[j];
    }

    auto layer_out = [&](const DenseMatrix& self, const DenseMatrix& neigh) {
        DenseMatrix msg = dense_matmul(neigh, model.w_msg[0]);
        DenseMatrix pre(g.num_nodes, dim);
        for (NodeId v = 0; v < g.num_nodes; ++v) {
            std::vector<double> acc(static_cast<std::size_t>(dim), 0.0);
            for (NodeId w : g.neighbors(v))
                for (std::int32_t j = 0; j < dim; ++j) acc[j] += msg.at(w, j);
            const double scale =
                model.mean_aggregation && g.degree(v) > 0 ? 1.0 / double(g.degree(v)) : 1.0;
            for (std::int32_t j = 0; j < dim; ++j)
                pre.at(v, j) = static_cast<float>(double(self.at(v, j)) + acc[j] * scale);
        }
        return dense_matmul(pre, model.w_upd[0]);
    };

    DenseMatrix out_gas = layer_out(h_tilde, h_bar);
    DenseMatrix out_exact = layer_out(x, x);

    Lemma1Case result;
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        const double err = row_distance(out_gas.row(v), out_exact.row(v), dim);
        const double bound = lemma1_bound(delta, eps, k1, k2, g.degree(v),
                                          model.mean_aggregation);
        result.measured = std::max(result.measured, err);
        result.worst_bound = std::max(result.worst_bound, bound);
        if (err > bound) ++result.violations;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Weisfeiler-Lehman
// ---------------------------------------------------------------------------

namespace {

std::vector<std::int32_t> relabel_dense(std::span<const std::int32_t> colors) {
    std::map<std::int32_t, std::int32_t> ids;
    std::vector<std::int32_t> out(colors.size());
    for (std::size_t v = 0; v < colors.size(); ++v) {
        auto [it, fresh] = ids.emplace(colors[v], static_cast<std::int32_t>(ids.size()));
        out[v] = it->second;
    }
    return out;
}

std::int32_t count_classes(std::span<const std::int32_t> colors) {
    std::int32_t mx = -1;
    for (auto c : colors) mx = std::max(mx, c);
    return mx + 1;
}

}  // namespace

WLColoring wl_refine(const Graph& g, std::span<const std::int32_t> init_colors,
                     std::int32_t rounds) {
    if (static_cast<NodeId>(init_colors.size()) != g.num_nodes)
        throw std::invalid_argument("wl_refine: one init color per node required");
    if (rounds < 0) throw std::invalid_argument("wl_refine: negative rounds");

    WLColoring wl;
    wl.colors.push_back(relabel_dense(init_colors));

    for (std::int32_t r = 1; r <= rounds; ++r) {
        const auto& prev = wl.colors.back();
        if (wl.stable_round >= 0) {  // partition can no longer change
            wl.colors.push_back(prev);
            continue;
        }
        std::map<std::pair<std::int32_t, std::vector<std::int32_t>>, std::int32_t> intern;
        std::vector<std::int32_t> next(prev.size());
        for (NodeId v = 0; v < g.num_nodes; ++v) {
            std::vector<std::int32_t> multiset;
            multiset.reserve(g.degree(v));
            for (NodeId w : g.neighbors(v)) multiset.push_back(prev[w]);
            std::sort(multiset.begin(), multiset.end());
            auto key = std::make_pair(prev[v], std::move(multiset));
            auto [it, fresh] = intern.emplace(std::move(key), static_cast<std::int32_t>(intern.size()));
            next[v] = it->second;
        }
        if (count_classes(next) == count_classes(prev)) wl.stable_round = r;
        wl.colors.push_back(std::move(next));
    }
    return wl;
}

std::vector<std::int32_t> colors_from_features(const FeatureMatrix& features) {
    std::map<std::vector<float>, std::int32_t> intern;
    std::vector<std::int32_t> colors(static_cast<std::size_t>(features.rows));
    for (std::int64_t v = 0; v < features.rows; ++v) {
        std::vector<float> key(features.row(v), features.row(v) + features.cols);
        auto [it, fresh] = intern.emplace(std::move(key), static_cast<std::int32_t>(intern.size()));
        colors[v] = it->second;
    }
    return colors;
}

std::vector<Graph> enumerate_connected_graphs(std::int32_t max_nodes) {
    if (max_nodes < 1 || max_nodes > 7)
        throw std::invalid_argument("enumerate_connected_graphs: supported range is 1..7");

    std::vector<Graph> out;
    for (std::int32_t n = 1; n <= max_nodes; ++n) {
        // Pair index table for the upper triangle.
        std::vector<std::pair<int, int>> pairs;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
        const int num_pairs = static_cast<int>(pairs.size());
        std::vector<std::vector<int>> pair_index(static_cast<std::size_t>(n),
                                                 std::vector<int>(static_cast<std::size_t>(n), -1));
        for (int e = 0; e < num_pairs; ++e) {
            pair_index[pairs[e].first][pairs[e].second] = e;
            pair_index[pairs[e].second][pairs[e].first] = e;
        }

        // Edge-index remap for every node permutation.
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<std::vector<int>> remaps;
        do {
            std::vector<int> remap(static_cast<std::size_t>(num_pairs));
            for (int e = 0; e < num_pairs; ++e)
                remap[e] = pair_index[perm[pairs[e].first]][perm[pairs[e].second]];
            remaps.push_back(std::move(remap));
        } while (std::next_permutation(perm.begin(), perm.end()));

        const std::uint32_t limit = num_pairs >= 31 ? 0 : (1u << num_pairs);
        for (std::uint32_t mask = 0; mask < limit || (num_pairs == 0 && mask == 0); ++mask) {
            // Canonical representative: the smallest mask over all permutations.
            bool canonical = true;
            for (const auto& remap : remaps) {
                std::uint32_t mapped = 0;
                for (int e = 0; e < num_pairs; ++e)
                    if (mask & (1u << e)) mapped |= 1u << remap[e];
                if (mapped < mask) {
                    canonical = false;
                    break;
                }
            }
            if (!canonical) {
                if (num_pairs == 0) break;
                continue;
            }

            // Connectivity via union-find.
            std::vector<int> parent(static_cast<std::size_t>(n));
            std::iota(parent.begin(), parent.end(), 0);
            auto find = [&](int a) {
                while (parent[a] != a) a = parent[a] = parent[parent[a]];
                return a;
            };
            std::vector<Edge> edges;
            for (int e = 0; e < num_pairs; ++e)
                if (mask & (1u << e)) {
                    edges.emplace_back(pairs[e].first, pairs[e].second);
                    parent[find(pairs[e].first)] = find(pairs[e].second);
                }
            bool connected = true;
            for (int v = 1; v < n; ++v)
                if (find(v) != find(0)) connected = false;
            if (!connected) {
                if (num_pairs == 0) break;
                continue;
            }
            out.push_back(build_graph(edges, n, /*symmetrize=*/true));
            if (num_pairs == 0) break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Expressiveness
// ---------------------------------------------------------------------------

ExpressivenessReport expressiveness_check(const Model& model, const HistoryStore& store,
                                          const Dataset& ds, const BatchSchedule& sched,
                                          std::int32_t rounds, double margin) {
    WLColoring wl = wl_refine(ds.graph, colors_from_features(ds.features), rounds);
    std::span<const std::int32_t> colors = wl.at_round(rounds);

    GasForwardSnapshot gas = gas_forward_snapshot(model, ds, sched, store);
    BatchSchedule full = BatchSchedule::full_batch(ds.graph);
    GasForwardSnapshot exact = full_forward_snapshot(model, ds, full);

    ExpressivenessReport report;
    report.tau = std::numeric_limits<double>::infinity();
    const std::int64_t dim = gas.final_out.cols;
    for (NodeId v = 0; v < ds.graph.num_nodes; ++v)
        for (NodeId w = v + 1; w < ds.graph.num_nodes; ++w) {
            if (colors[v] == colors[w]) continue;
            ++report.distinct_pairs;
            const double d = row_distance(gas.final_out.row(v), gas.final_out.row(w), dim);
            report.tau = std::min(report.tau, d);
            if (d > margin) ++report.separated_pairs;
        }
    if (report.distinct_pairs == 0) report.tau = 0.0;

    for (NodeId v = 0; v < ds.graph.num_nodes && report.voronoi_ok; ++v) {
        NodeId best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (NodeId u = 0; u < ds.graph.num_nodes; ++u) {
            const double d = row_distance(gas.final_out.row(v), exact.final_out.row(u), dim);
            if (d < best_d) {
                best_d = d;
                best = u;
            }
        }
        if (colors[best] != colors[v]) report.voronoi_ok = false;
    }
    report.pass = report.voronoi_ok && report.separated_pairs == report.distinct_pairs;
    return report;
}

// ---------------------------------------------------------------------------
// Sampling counterexample
// ---------------------------------------------------------------------------

SampledAdjacency sampled_adjacency(const Graph& g, std::int32_t sample_size, std::uint64_t seed) {
    if (sample_size < 1) throw std::invalid_argument("sampled_adjacency: sample_size must be >= 1");
    SampledAdjacency out;
    out.neighbors.resize(static_cast<std::size_t>(g.num_nodes));
    out.weight.resize(static_cast<std::size_t>(g.num_nodes), 1.0);
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        auto nb = g.neighbors(v);
        const std::int64_t deg = static_cast<std::int64_t>(nb.size());
        if (deg <= sample_size) {
            out.neighbors[v].assign(nb.begin(), nb.end());
            out.weight[v] = 1.0;
            continue;
        }
        std::vector<NodeId> pool(nb.begin(), nb.end());
        Rng rng(derive_seed(seed, 0x73616d70, static_cast<std::uint64_t>(v)));
        for (std::int32_t i = 0; i < sample_size; ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(static_cast<std::size_t>(sample_size));
        std::sort(pool.begin(), pool.end());
        out.neighbors[v] = std::move(pool);
        out.weight[v] = static_cast<double>(deg) / static_cast<double>(sample_size);
    }
    return out;
}

DenseMatrix prop3_model_outputs(const Graph& g, std::span<const std::int32_t> colors,
                                const SampledAdjacency* sampled) {
    const std::int32_t k = count_classes(relabel_dense(colors));
    std::vector<std::int32_t> dense = relabel_dense(colors);
    DenseMatrix out(g.num_nodes, 2 * k);
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        out.at(v, dense[v]) = 1.0f;
        if (sampled) {
            for (NodeId w : sampled->neighbors[v])
                out.at(v, k + dense[w]) += static_cast<float>(sampled->weight[v]);
        } else {
            for (NodeId w : g.neighbors(v)) out.at(v, k + dense[w]) += 1.0f;
        }
    }
    return out;
}

Prop3Witness prop3_counterexample_search(std::int32_t max_nodes) {
    if (max_nodes > 8) throw std::invalid_argument("prop3_counterexample_search: max_nodes <= 8");
    Prop3Witness witness;

    for (std::int32_t n = 2; n <= max_nodes && !witness.found; ++n) {
        std::vector<std::pair<int, int>> pairs;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
        const int num_pairs = static_cast<int>(pairs.size());
        const std::int64_t num_colorings = static_cast<std::int64_t>(std::pow(3.0, n));

        for (std::uint32_t mask = 1; mask < (1u << num_pairs) && !witness.found; ++mask) {
            std::vector<Edge> edges;
            for (int e = 0; e < num_pairs; ++e)
                if (mask & (1u << e)) edges.emplace_back(pairs[e].first, pairs[e].second);
            Graph g = build_graph(edges, n, /*symmetrize=*/true);

            for (std::int64_t code = 0; code < num_colorings && !witness.found; ++code) {
                std::vector<std::int32_t> colors(static_cast<std::size_t>(n));
                std::int64_t c = code;
                for (std::int32_t v = 0; v < n; ++v) {
                    colors[v] = static_cast<std::int32_t>(c % 3);
                    c /= 3;
                }
                DenseMatrix exact = prop3_model_outputs(g, colors, nullptr);

                // WL-equivalent pairs after one round have equal exact outputs.
                for (NodeId v = 0; v < n && !witness.found; ++v)
                    for (NodeId w = v + 1; w < n && !witness.found; ++w) {
                        if (g.degree(v) < 2 && g.degree(w) < 2) continue;
                        if (row_distance(exact.row(v), exact.row(w), exact.cols) != 0.0) continue;
                        for (std::uint64_t seed = 0; seed < 64 && !witness.found; ++seed) {
                            SampledAdjacency sa = sampled_adjacency(g, 1, seed);
                            DenseMatrix sampled_out = prop3_model_outputs(g, colors, &sa);
                            const double d =
                                row_distance(sampled_out.row(v), sampled_out.row(w), sampled_out.cols);
                            if (d > 0.0) {
                                witness.found = true;
                                witness.graph = g;
                                witness.colors = colors;
                                witness.v = v;
                                witness.w = w;
                                witness.sample_size = 1;
                                witness.seed = seed;
                                witness.sampled_distance = d;
                                witness.exact_distance = 0.0;
                            }
                        }
                    }
            }
        }
    }
    return witness;
}

// ---------------------------------------------------------------------------
// Gradient error bound
// ---------------------------------------------------------------------------

namespace {

std::vector<DenseMatrix> loss_gradient_with_offset(const Model& model, const Dataset& ds,
                                                   const BatchSchedule& full,
                                                   const DenseMatrix* offset) {
    Tape tape;
    Model::ForwardOptions fwd;
    Tensor logits = model.forward(&tape, ds.features, full.plans[0], full.aggs[0], fwd);
    if (offset) logits = add(&tape, logits, Tensor::from_matrix(*offset));

    std::vector<std::int32_t> rows, labels;
    for (NodeId v = 0; v < ds.graph.num_nodes; ++v)
        if (ds.labels.train_mask[v]) {
            rows.push_back(v);
            labels.push_back(ds.labels.labels[v]);
        }
    Tensor loss = softmax_cross_entropy(&tape, logits, rows, labels);
    tape.backward(loss);

    std::vector<DenseMatrix> grads;
    auto params = model.params();
    for (Tensor& p : params) {
        grads.push_back(p.grad_matrix());
        p.zero_grad();
    }
    return grads;
}

}  // namespace

GradientCheckReport gradient_error_check(const Model& model, const Dataset& ds,
                                         const BatchSchedule& sched, const HistoryStore& store,
                                         double safety, std::int32_t probes, std::uint64_t seed) {
    BatchSchedule full = BatchSchedule::full_batch(ds.graph);

    GasForwardSnapshot gas = gas_forward_snapshot(model, ds, sched, store);
    GasForwardSnapshot exact = full_forward_snapshot(model, ds, full);

    DenseMatrix delta(ds.graph.num_nodes, gas.final_out.cols);
    for (std::size_t i = 0; i < delta.values.size(); ++i)
        delta.values[i] = gas.final_out.values[i] - exact.final_out.values[i];

    GradientCheckReport report;
    report.delta_norm = frob_norm(delta);

    std::vector<DenseMatrix> g0 = loss_gradient_with_offset(model, ds, full, nullptr);
    std::vector<DenseMatrix> g_delta = loss_gradient_with_offset(model, ds, full, &delta);

    // Probe the Lipschitz constant of the perturbation -> gradient map at the
    // magnitude of the actual GAS-induced perturbation.
    std::vector<double> lambda(g0.size(), 0.0);
    const double probe_norm = report.delta_norm > 0.0 ? report.delta_norm : 1e-3;
    for (std::int32_t p = 0; p < probes; ++p) {
        DenseMatrix u(delta.rows, delta.cols);
        Rng rng(derive_seed(seed, 0x67726164, static_cast<std::uint64_t>(p)));
        for (float& x : u.values) x = static_cast<float>(rng.next_normal());
        const double un = frob_norm(u);
        if (un == 0.0) continue;
        for (float& x : u.values) x = static_cast<float>(x * probe_norm / un);
        std::vector<DenseMatrix> gp = loss_gradient_with_offset(model, ds, full, &u);
        for (std::size_t i = 0; i < g0.size(); ++i) {
            DenseMatrix diff = gp[i];
            for (std::size_t e = 0; e < diff.values.size(); ++e)
                diff.values[e] -= g0[i].values[e];
            lambda[i] = std::max(lambda[i], frob_norm(diff) / probe_norm);
        }
    }

    for (std::size_t i = 0; i < g0.size(); ++i) {
        GradientCheckReport::PerParam pp;
        DenseMatrix diff = g_delta[i];
        for (std::size_t e = 0; e < diff.values.size(); ++e) diff.values[e] -= g0[i].values[e];
        pp.grad_diff = frob_norm(diff);
        pp.lambda_est = lambda[i] * safety;
        pp.bound = pp.lambda_est * report.delta_norm;
        pp.pass = pp.grad_diff <= pp.bound + 1e-12;
        report.all_pass = report.all_pass && pp.pass;
        report.params.push_back(pp);
    }
    return report;
}

}  // namespace gas
