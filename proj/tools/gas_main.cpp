#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>

#include <CLI11.hpp>

#include "gas/analysis.hpp"
#include "gas/io.hpp"
#include "gas/log.hpp"
#include "gas/partition.hpp"
#include "gas/rng.hpp"
#include "gas/trainer.hpp"

namespace {

using namespace gas;

void apply_log_level(const std::string& level) {
    if (level == "error")
        log::set_level(log::Level::kError);
    else if (level == "info")
        log::set_level(log::Level::kInfo);
    else if (level == "debug")
        log::set_level(log::Level::kDebug);
    else
        throw std::invalid_argument("unknown log level '" + level + "'");
}

ModelSpec spec_from_config(const ExperimentConfig& cfg) {
    ModelSpec spec;
    auto kind = layer_kind_from_name(cfg.get("model.kind"));
    if (!kind) throw std::invalid_argument("config: unknown model.kind '" + cfg.get("model.kind") + "'");
    spec.kind = *kind;
    spec.num_layers = static_cast<std::int32_t>(cfg.get_int("model.layers"));
    spec.hidden = static_cast<std::int32_t>(cfg.get_int_or("model.hidden", 16));
    spec.mlp_hidden = static_cast<std::int32_t>(cfg.get_int_or("model.mlp_hidden", 0));
    spec.dropout = static_cast<float>(cfg.get_double_or("model.dropout", 0.0));
    spec.alpha = static_cast<float>(cfg.get_double_or("model.alpha", 0.1));
    spec.beta = static_cast<float>(cfg.get_double_or("model.beta", 0.5));
    spec.gin_eps = static_cast<float>(cfg.get_double_or("model.gin_eps", 0.0));
    spec.gin_train_eps = cfg.get_bool_or("model.gin_train_eps", false);
    spec.l2_weight = static_cast<float>(cfg.get_double_or("reg.l2", 0.0));
    spec.lipschitz_weight = static_cast<float>(cfg.get_double_or("reg.lipschitz_weight", 0.0));
    spec.lipschitz_delta = static_cast<float>(cfg.get_double_or("reg.delta", 0.1));
    spec.clip_max_norm = static_cast<float>(cfg.get_double_or("clip.max_norm", 0.0));
    spec.opt.lr = static_cast<float>(cfg.get_double("train.lr"));
    spec.epochs = static_cast<std::int32_t>(cfg.get_int("train.epochs"));
    spec.seed = static_cast<std::uint64_t>(cfg.get_int_or("seed", 0));
    return spec;
}

int cmd_gen(const std::string& kind, const SbmParams& sbm, const ClusteredParams& clustered,
            const std::string& out_dir) {
    Dataset ds = kind == "sbm" ? gen_sbm(sbm) : gen_clustered(clustered);
    save_dataset(out_dir, ds);
    log::info("gen: %s dataset with %d nodes, %lld edges -> %s", kind.c_str(),
              (int)ds.graph.num_nodes, (long long)ds.graph.num_edges(), out_dir.c_str());
    return 0;
}

int cmd_partition(const std::string& graph_path, std::int32_t parts, const std::string& method,
                  std::uint64_t seed, const std::string& out_path) {
    auto edges = load_edge_list(graph_path);
    NodeId n = 0;
    for (const auto& [u, v] : edges) n = std::max({n, u + 1, v + 1});
    Graph g = build_graph(edges, n, /*symmetrize=*/true);
    Partitioning p = method == "random" ? random_partition(g, parts, seed)
                                        : cluster_partition(g, parts, seed);
    save_partition(out_path, p);
    log::info("partition: %d nodes into %d parts, cut=%lld ratio=%.4f", (int)n, (int)parts,
              (long long)edge_cut(g, p), inter_intra_ratio(g, p));
    return 0;
}

int cmd_train(const std::string& config_path) {
    ExperimentConfig cfg = ExperimentConfig::parse_file(config_path);
    Dataset ds = load_dataset(cfg.get("paths.dataset"));
    ModelSpec spec = spec_from_config(cfg);

    TrainSettings settings;
    settings.parts = static_cast<std::int32_t>(cfg.get_int_or("train.parts", 1));
    settings.method = cfg.get_or("train.method", "cluster");
    settings.warmup_full_batch = cfg.get_or("train.warmup", "none") == "full-batch";
    settings.use_prefetch = cfg.get_bool_or("train.prefetch", false);
    settings.measure_staleness = cfg.get_bool_or("train.staleness", true);
    settings.partition_seed = spec.seed;

    TrainResult result = train_model(ds, spec, settings);

    const std::string out_dir = cfg.get("paths.out");
    std::filesystem::create_directories(out_dir);
    write_report_csv((std::filesystem::path(out_dir) / "report.csv").string(), result.epochs,
                     std::max(0, spec.num_layers - 1));
    log::info("train: wrote %s/report.csv (%zu epochs)", out_dir.c_str(), result.epochs.size());
    return 0;
}

void write_verify_header(std::FILE* f) { std::fprintf(f, "case,measured,bound,pass\n"); }

void write_verify_row(std::FILE* f, const std::string& name, double measured, double bound,
                      bool pass) {
    std::fprintf(f, "%s,%.9g,%.9g,%d\n", name.c_str(), measured, bound, pass ? 1 : 0);
}

Graph random_small_graph(std::int32_t max_nodes, double edge_prob, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x67726170));
    const NodeId n = 4 + static_cast<NodeId>(rng.next_below(std::max(1, max_nodes - 3)));
    std::vector<Edge> edges;
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j)
            if (rng.next_double() < edge_prob) edges.emplace_back(i, j);
    return build_graph(edges, n, /*symmetrize=*/true);
}

int cmd_verify(const std::string& suite, const std::string& config_path,
               const std::string& out_path) {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = ExperimentConfig::parse_file(config_path);
    const std::int64_t cases = cfg.get_int_or("verify.cases", 30);
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int_or("verify.seed", 7));

    std::FILE* f = std::fopen(out_path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + out_path);
    write_verify_header(f);
    bool all_pass = true;

    if (suite == "bounds") {
        for (std::int64_t i = 0; i < cases; ++i) {
            for (bool mean : {false, true}) {
                const std::uint64_t s = derive_seed(seed, i, mean);
                Graph g = random_small_graph(8, 0.45, s);
                const std::int32_t L = 2 + static_cast<std::int32_t>(i % 2);
                LinearMsgModel model =
                    LinearMsgModel::random(L, 4, 0.7 + 0.05 * double(i % 10), mean, s);
                DenseMatrix x(g.num_nodes, 4);
                Rng rng(derive_seed(s, 0x78));
                for (float& v : x.values) v = static_cast<float>(rng.next_normal());
                Partitioning parts = random_partition(g, 2, s);
                const double k1 = model.measure_k1(200, s) * 1.5;
                const double k2 = model.measure_k2(200, s) * 1.5;
                BoundCheckResult r = gas_bound_check(g, x, model, parts, k1, k2);
                double measured = 0.0, bound = 0.0;
                for (std::size_t v = 0; v < r.node_error.size(); ++v)
                    if (r.node_error[v] >= measured) {
                        measured = r.node_error[v];
                        bound = r.node_bound[v];
                    }
                const bool pass = r.violations == 0;
                all_pass = all_pass && pass;
                write_verify_row(f, (mean ? "theorem1_mean_" : "theorem1_sum_") + std::to_string(i),
                                 measured, bound, pass);
            }
        }
    } else if (suite == "wl") {
        auto graphs = enumerate_connected_graphs(5);
        for (std::size_t i = 0; i < graphs.size(); ++i) {
            const Graph& g = graphs[i];
            std::vector<std::int32_t> uniform(static_cast<std::size_t>(g.num_nodes), 0);
            WLColoring wl = wl_refine(g, uniform, g.num_nodes);
            bool monotone = true;
            for (std::int32_t r = 1; r <= wl.rounds(); ++r) {
                std::int32_t prev_classes = 0, cur_classes = 0;
                for (auto c : wl.at_round(r - 1)) prev_classes = std::max(prev_classes, c + 1);
                for (auto c : wl.at_round(r)) cur_classes = std::max(cur_classes, c + 1);
                if (cur_classes < prev_classes) monotone = false;
            }
            const bool pass = monotone && wl.stable_round >= 0 && wl.stable_round <= g.num_nodes;
            all_pass = all_pass && pass;
            write_verify_row(f, "wl_graph_" + std::to_string(i),
                             static_cast<double>(wl.stable_round), static_cast<double>(g.num_nodes),
                             pass);
        }
    } else if (suite == "prop3") {
        Prop3Witness w = prop3_counterexample_search(6);
        all_pass = w.found;
        write_verify_row(f, "prop3_witness_found", w.sampled_distance, 0.0, w.found);
        if (w.found) {
            DenseMatrix exact = prop3_model_outputs(w.graph, w.colors, nullptr);
            double d = 0.0;
            for (std::int64_t j = 0; j < exact.cols; ++j) {
                const double diff = double(exact.at(w.v, j)) - double(exact.at(w.w, j));
                d += diff * diff;
            }
            const bool pass = std::sqrt(d) == 0.0;
            all_pass = all_pass && pass;
            write_verify_row(f, "prop3_gas_outputs_equal", std::sqrt(d), 0.0, pass);
        }
    } else if (suite == "gradient") {
        SbmParams sp;
        sp.blocks = 3;
        sp.nodes_per_block = 40;
        sp.p_in = 0.2;
        sp.p_out = 0.02;
        sp.seed = seed;
        Dataset ds = gen_sbm(sp);
        for (std::int64_t i = 0; i < cases; ++i) {
            ModelSpec spec;
            spec.kind = LayerKind::kGcn;
            spec.num_layers = 2;
            spec.hidden = 8;
            spec.opt.lr = 0.01f;
            spec.epochs = 3;
            spec.seed = derive_seed(seed, i);
            Model model = Model::build(spec, static_cast<std::int32_t>(ds.features.cols),
                                       ds.labels.num_classes);
            AdamState opt(model.params(), spec.opt);
            Partitioning parts = cluster_partition(ds.graph, 3, spec.seed);
            BatchSchedule sched = BatchSchedule::build(ds.graph, parts);
            HistoryStore store(spec.num_layers - 1, ds.graph.num_nodes, model.history_dim());
            for (std::int32_t e = 0; e < spec.epochs; ++e) {
                EpochOptions opts;
                opts.evaluate = false;
                gas_epoch(model, opt, ds, sched, store, e, opts);
            }
            GradientCheckReport r =
                gradient_error_check(model, ds, sched, store, 1.5, 8, spec.seed);
            double measured = 0.0, bound = 0.0;
            for (const auto& pp : r.params) {
                measured = std::max(measured, pp.grad_diff);
                bound = std::max(bound, pp.bound);
            }
            all_pass = all_pass && r.all_pass;
            write_verify_row(f, "gradient_state_" + std::to_string(i), measured, bound, r.all_pass);
        }
    } else {
        std::fclose(f);
        throw std::invalid_argument("unknown verify suite '" + suite + "'");
    }
    std::fclose(f);
    log::info("verify: suite %s -> %s (%s)", suite.c_str(), out_path.c_str(),
              all_pass ? "all pass" : "FAILURES");
    return all_pass ? 0 : 2;
}

int cmd_bench(std::int32_t parts, std::int32_t size, std::int32_t intra_deg,
              std::int32_t inter_nodes, std::int32_t inter_deg, std::int32_t layers,
              std::int32_t hidden, std::int32_t epochs, std::uint64_t seed,
              const std::string& out_path) {
    ClusteredParams cp;
    cp.parts = parts;
    cp.size = size;
    cp.intra_deg = intra_deg;
    cp.inter_nodes = inter_nodes;
    cp.inter_deg = inter_deg;
    cp.seed = seed;
    Dataset ds = gen_clustered(cp);
    Partitioning natural =
        partition_from_assignment(std::vector<std::int32_t>(ds.labels.labels.begin(),
                                                            ds.labels.labels.end()),
                                  parts);
    BatchSchedule sched = BatchSchedule::build(ds.graph, natural);

    ModelSpec spec;
    spec.kind = LayerKind::kGin;
    spec.num_layers = layers;
    spec.hidden = hidden;
    spec.opt.lr = 0.01f;
    spec.epochs = epochs;
    spec.seed = seed;

    auto run = [&](bool prefetch, std::vector<float>& params_out) {
        Model model = Model::build(spec, static_cast<std::int32_t>(ds.features.cols),
                                   ds.labels.num_classes);
        AdamState opt(model.params(), spec.opt);
        HistoryStore store(spec.num_layers - 1, ds.graph.num_nodes, model.history_dim());
        std::optional<Prefetcher> pf;
        if (prefetch) pf.emplace(store);
        const auto t0 = std::chrono::steady_clock::now();
        for (std::int32_t e = 0; e < epochs; ++e) {
            EpochOptions opts;
            opts.evaluate = false;
            opts.prefetcher = pf ? &*pf : nullptr;
            gas_epoch(model, opt, ds, sched, store, e, opts);
        }
        const auto t1 = std::chrono::steady_clock::now();
        for (const Tensor& t : model.params())
            params_out.insert(params_out.end(), t.values().begin(), t.values().end());
        return std::chrono::duration<double, std::milli>(t1 - t0).count();
    };

    std::vector<float> serial_params, prefetch_params;
    const double serial_ms = run(false, serial_params);
    const double prefetch_ms = run(true, prefetch_params);
    const bool identical = serial_params == prefetch_params;

    std::printf("serial_ms=%.2f prefetch_ms=%.2f ratio=%.3f identical=%d\n", serial_ms,
                prefetch_ms, prefetch_ms / serial_ms, identical ? 1 : 0);
    if (!out_path.empty()) {
        std::FILE* f = std::fopen(out_path.c_str(), "w");
        if (!f) throw std::runtime_error("cannot write " + out_path);
        std::fprintf(f, "mode,epochs,wall_ms,identical\n");
        std::fprintf(f, "serial,%d,%.3f,1\n", (int)epochs, serial_ms);
        std::fprintf(f, "prefetch,%d,%.3f,%d\n", (int)epochs, prefetch_ms, identical ? 1 : 0);
        std::fclose(f);
    }
    return identical ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Historical-embedding GNN training engine"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level)->check(CLI::IsMember({"error", "info", "debug"}));

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    std::string gen_kind = "sbm", gen_out;
    SbmParams sbm;
    ClusteredParams clustered;
    std::string feature_mode = "one-hot-noisy";
    gen->add_option("--kind", gen_kind)->check(CLI::IsMember({"sbm", "clustered"}));
    gen->add_option("--out", gen_out)->required();
    gen->add_option("--blocks", sbm.blocks);
    gen->add_option("--block-size", sbm.nodes_per_block);
    gen->add_option("--p-in", sbm.p_in);
    gen->add_option("--p-out", sbm.p_out);
    gen->add_option("--feature-mode", feature_mode)
        ->check(CLI::IsMember({"one-hot-noisy", "random"}));
    gen->add_option("--feature-dim", sbm.feature_dim);
    gen->add_option("--noise", sbm.noise);
    gen->add_option("--train-frac", sbm.train_frac);
    gen->add_option("--val-frac", sbm.val_frac);
    gen->add_option("--parts", clustered.parts);
    gen->add_option("--size", clustered.size);
    gen->add_option("--intra-deg", clustered.intra_deg);
    gen->add_option("--inter-nodes", clustered.inter_nodes);
    gen->add_option("--inter-deg", clustered.inter_deg);
    std::uint64_t gen_seed = 0;
    gen->add_option("--seed", gen_seed);

    // partition
    auto* part = app.add_subcommand("partition", "partition a graph");
    std::string part_graph, part_method = "cluster", part_out;
    std::int32_t part_parts = 2;
    std::uint64_t part_seed = 0;
    part->add_option("--graph", part_graph)->required();
    part->add_option("--parts", part_parts)->required();
    part->add_option("--method", part_method)->check(CLI::IsMember({"random", "cluster"}));
    part->add_option("--seed", part_seed);
    part->add_option("--out", part_out)->required();

    // train
    auto* train = app.add_subcommand("train", "train a model from a config file");
    std::string train_config;
    train->add_option("--config", train_config)->required();

    // verify
    auto* verify = app.add_subcommand("verify", "run verification suites");
    std::string verify_suite, verify_config, verify_out = "verify.csv";
    verify->add_option("--suite", verify_suite)
        ->required()
        ->check(CLI::IsMember({"bounds", "wl", "prop3", "gradient"}));
    verify->add_option("--config", verify_config);
    verify->add_option("--out", verify_out);

    // bench
    auto* bench = app.add_subcommand("bench", "serial vs prefetch epoch benchmark");
    std::int32_t b_parts = 4, b_size = 1000, b_intra = 8, b_inter_nodes = 1000, b_inter_deg = 8;
    std::int32_t b_layers = 4, b_hidden = 32, b_epochs = 3;
    std::uint64_t b_seed = 7;
    std::string b_out;
    bench->add_option("--parts", b_parts);
    bench->add_option("--size", b_size);
    bench->add_option("--intra-deg", b_intra);
    bench->add_option("--inter-nodes", b_inter_nodes);
    bench->add_option("--inter-deg", b_inter_deg);
    bench->add_option("--layers", b_layers);
    bench->add_option("--hidden", b_hidden);
    bench->add_option("--epochs", b_epochs);
    bench->add_option("--seed", b_seed);
    bench->add_option("--out", b_out);

    try {
        app.parse(argc, argv);
        apply_log_level(log_level);
        sbm.seed = gen_seed;
        clustered.seed = gen_seed;
        sbm.feature_mode =
            feature_mode == "random" ? FeatureMode::kRandom : FeatureMode::kOneHotNoisy;

        if (*gen) return cmd_gen(gen_kind, sbm, clustered, gen_out);
        if (*part) return cmd_partition(part_graph, part_parts, part_method, part_seed, part_out);
        if (*train) return cmd_train(train_config);
        if (*verify) return cmd_verify(verify_suite, verify_config, verify_out);
        if (*bench)
            return cmd_bench(b_parts, b_size, b_intra, b_inter_nodes, b_inter_deg, b_layers,
                             b_hidden, b_epochs, b_seed, b_out);
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
