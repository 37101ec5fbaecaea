#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>
#include <nlohmann/json.hpp>

#include "causaladj/io.hpp"
#include "causaladj/pipeline.hpp"

using namespace causaladj;

namespace {

int env_threads() {
    if (const char* v = std::getenv("CAUSAL_ADJ_THREADS")) {
        const int n = std::atoi(v);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

SypiConfig sypi_config_from_file(const std::string& path, std::uint64_t seed) {
    // reuse the pipeline parser so the JSON schema stays in one place
    nlohmann::json wrapper;
    {
        std::ifstream in(path);
        if (!in) throw MissingFile(path);
        wrapper["sypi"] = nlohmann::json::parse(in);
    }
    const auto tmp = std::filesystem::temp_directory_path() / "causaladj_sypi_cfg.json";
    write_text_file(tmp, wrapper.dump());
    PipelineConfig cfg = parse_pipeline_config(tmp);
    SypiConfig sypi = cfg.sypi;
    sypi.cit.seed = stage_seed(seed, "sypi");
    sypi.n_threads = env_threads();
    return sypi;
}

SplitSpec parse_split(const std::string& split, int t_steps, int val_weeks) {
    const auto colon = split.find(':');
    if (colon == std::string::npos) throw Error("--split expects train:test, e.g. 74:16");
    return derive_split(t_steps, std::stoi(split.substr(0, colon)),
                        std::stoi(split.substr(colon + 1)), val_weeks);
}

void write_pvalue_log(const std::vector<SypiTestLog>& log, const std::string& path) {
    std::ostringstream out;
    out << "target,candidate,lag,p1,p2,decision\n";
    for (const auto& e : log) {
        out << e.target << ',' << e.candidate << ',' << e.lag << ',' << format_double(e.p1) << ',';
        if (e.p2 >= 0.0) out << format_double(e.p2);
        out << ',' << (e.accepted ? "edge" : "rejected") << '\n';
    }
    write_text_file(path, out.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal adjacency learning and spatiotemporal GCN forecasting toolkit"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "Global seed; per-stage seeds derive from it");

    // gen-synth
    auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic panel from a VAR spec");
    std::string gen_spec, gen_out_panel, gen_out_truth;
    gen->add_option("--spec", gen_spec, "SynthSpec JSON (or omit for the benchmark preset)");
    gen->add_option("--out-panel", gen_out_panel, "Output directory for panel CSVs")->required();
    gen->add_option("--out-truth", gen_out_truth, "Ground-truth JSON path")->required();

    // build-adjacency
    auto* build = app.add_subcommand("build-adjacency", "Construct an adjacency matrix");
    std::string build_kind, build_panel, build_dist, build_out, build_sypi_cfg;
    double build_sigma = 0.0, build_epsilon = std::exp(-1.0);
    double build_r = 0.75, build_p = 0.05;
    build->add_option("--kind", build_kind, "distance|correlation|causal")->required();
    build->add_option("--panel", build_panel, "Panel manifest JSON");
    build->add_option("--dist", build_dist, "Distance matrix CSV (kind=distance)");
    build->add_option("--sigma", build_sigma, "Distance sigma (default: mean pairwise distance)");
    build->add_option("--epsilon", build_epsilon, "Distance cutoff, default exp(-1)");
    build->add_option("--r-threshold", build_r, "Correlation threshold, default 0.75");
    build->add_option("--p-threshold", build_p, "p-value threshold, default 0.05");
    build->add_option("--config", build_sypi_cfg, "SypiConfig JSON (kind=causal)");
    build->add_option("--out", build_out, "Output base path (writes .csv/.edges.json/.meta.json)")
        ->required();

    // learn-causal
    auto* learn = app.add_subcommand("learn-causal", "SyPI causal adjacency learning");
    std::string learn_panel, learn_cfg, learn_out, learn_log;
    learn->add_option("--panel", learn_panel, "Panel manifest JSON")->required();
    learn->add_option("--config", learn_cfg, "SypiConfig JSON");
    learn->add_option("--out-adjacency", learn_out, "Output base path")->required();
    learn->add_option("--log-pvalues", learn_log, "CSV log of every CIT decision");

    // train
    auto* tr = app.add_subcommand("train", "Train the Chebyshev STGCN forecaster");
    std::string tr_panel, tr_adj, tr_out_model, tr_history, tr_split = "74:16";
    int tr_tau = 4, tr_tau_prime = 4, tr_val_weeks = 8, tr_hidden = 16, tr_order = 3;
    int tr_epochs = 500, tr_patience = 30;
    double tr_lr = 1e-2;
    tr->add_option("--panel", tr_panel)->required();
    tr->add_option("--adjacency", tr_adj, "Adjacency base path")->required();
    tr->add_option("--tau", tr_tau);
    tr->add_option("--tau-prime", tr_tau_prime);
    tr->add_option("--split", tr_split, "train:test weeks, applied as a fraction of T");
    tr->add_option("--val-weeks", tr_val_weeks);
    tr->add_option("--hidden", tr_hidden);
    tr->add_option("--cheb-order", tr_order);
    tr->add_option("--lr", tr_lr);
    tr->add_option("--epochs", tr_epochs);
    tr->add_option("--patience", tr_patience);
    tr->add_option("--out-model", tr_out_model)->required();
    tr->add_option("--history", tr_history, "Per-epoch CSV");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Per-horizon RMSE/MAE on the test region");
    std::string ev_panel, ev_adj, ev_model, ev_out, ev_split = "74:16";
    int ev_val_weeks = 8;
    bool ev_raw = false;
    ev->add_option("--panel", ev_panel)->required();
    ev->add_option("--adjacency", ev_adj)->required();
    ev->add_option("--model", ev_model)->required();
    ev->add_option("--split", ev_split);
    ev->add_option("--val-weeks", ev_val_weeks);
    ev->add_flag("--raw", ev_raw, "Report in original units instead of normalized");
    ev->add_option("--out", ev_out, "Output CSV")->required();

    // compare
    auto* cmp = app.add_subcommand("compare", "Edge counts and pairwise reductions");
    std::vector<std::string> cmp_adjs;
    std::string cmp_out;
    cmp->add_option("--adjacency", cmp_adjs, "Adjacency base paths (repeatable)")
        ->required()
        ->expected(-2);
    cmp->add_option("--out", cmp_out)->required();

    // aggregate
    auto* agg = app.add_subcommand("aggregate", "Row/column sums keyed by node id");
    std::string agg_adj, agg_out;
    agg->add_option("--adjacency", agg_adj)->required();
    agg->add_option("--out", agg_out)->required();

    // cit-selftest
    auto* self = app.add_subcommand("cit-selftest", "KCIT calibration on i.i.d. normals");
    std::string self_out;
    int self_trials = 500, self_n = 100;
    bool self_conditional = true;
    self->add_option("--out", self_out)->required();
    self->add_option("--trials", self_trials);
    self->add_option("--n", self_n);
    self->add_flag("--unconditional,!--conditional", self_conditional,
                   "Drop the conditioning variable");

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "End-to-end run from config JSON");
    std::string pipe_cfg, pipe_out;
    pipe->add_option("--config", pipe_cfg, "Pipeline config JSON (omit for defaults)");
    pipe->add_option("--out", pipe_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);
    const auto t_start = std::chrono::steady_clock::now();
    std::vector<std::string> args(argv + 1, argv + argc);
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    try {
        if (gen->parsed()) {
            SynthSpec spec = gen_spec.empty() ? default_benchmark_spec(seed)
                                              : parse_synth_spec(gen_spec);
            if (app.count("--seed")) spec.seed = seed;
            auto [panel, truth] = generate(spec);
            save_panel(panel, gen_out_panel, "panel");
            save_ground_truth(truth, gen_out_truth);
            write_run_manifest(gen_out_panel, "gen-synth", args, spec.seed, elapsed());
        } else if (build->parsed()) {
            const AdjacencyKind kind = adjacency_kind_from_string(build_kind);
            Adjacency adj;
            bool saved = false;
            if (kind == AdjacencyKind::distance) {
                if (build_dist.empty()) throw MissingFile("--dist required for kind=distance");
                const LabeledMatrix m = read_labeled_matrix(build_dist);
                DistanceConfig cfg;
                cfg.epsilon = build_epsilon;
                cfg.sigma = build_sigma > 0.0
                                ? build_sigma
                                : m.values.sum() / (m.values.size() - m.values.rows());
                adj = distance_adjacency(m.values, cfg, m.col_ids);
            } else {
                if (build_panel.empty()) throw MissingFile("--panel required for this kind");
                auto [panel, stats] = zscore(load_panel(std::filesystem::path(build_panel)));
                if (kind == AdjacencyKind::correlation) {
                    adj = correlation_adjacency(correlation_matrix(panel), panel.n_steps(),
                                                {build_r, build_p}, panel.node_ids);
                } else {
                    SypiConfig cfg = build_sypi_cfg.empty()
                                         ? SypiConfig{}
                                         : sypi_config_from_file(build_sypi_cfg, seed);
                    if (build_sypi_cfg.empty()) {
                        cfg.cit.seed = stage_seed(seed, "sypi");
                        cfg.n_threads = env_threads();
                    }
                    const CausalResult result = causal_adjacency(panel, cfg);
                    save_causal_adjacency(result, build_out);
                    saved = true;
                    adj = result.adjacency;
                }
            }
            if (!saved) save_adjacency(adj, build_out);
            write_run_manifest(std::filesystem::path(build_out).parent_path(), "build-adjacency",
                               args, seed, elapsed());
        } else if (learn->parsed()) {
            auto [panel, stats] = zscore(load_panel(std::filesystem::path(learn_panel)));
            SypiConfig cfg = learn_cfg.empty() ? SypiConfig{} : sypi_config_from_file(learn_cfg, seed);
            if (learn_cfg.empty()) {
                cfg.cit.seed = stage_seed(seed, "sypi");
                cfg.n_threads = env_threads();
            }
            const CausalResult result = causal_adjacency(panel, cfg);
            save_causal_adjacency(result, learn_out);
            if (!learn_log.empty()) write_pvalue_log(result.test_log, learn_log);
            write_run_manifest(std::filesystem::path(learn_out).parent_path(), "learn-causal",
                               args, seed, elapsed());
        } else if (tr->parsed()) {
            auto [panel, stats] = zscore(load_panel(std::filesystem::path(tr_panel)));
            const Adjacency adj = load_adjacency(tr_adj);
            const LaplacianPair pair = build_laplacian(adj);
            const SplitSpec split = parse_split(tr_split, panel.n_steps(), tr_val_weeks);
            const auto train_w = make_windows(panel, tr_tau, tr_tau_prime, split, Region::train);
            const auto val_w = make_windows(panel, tr_tau, tr_tau_prime, split, Region::val);
            StgcnModel model = init_model(tr_order, tr_tau, tr_tau_prime, panel.n_channels(),
                                          tr_hidden, stage_seed(seed, "train-init"));
            TrainConfig cfg;
            cfg.learning_rate = tr_lr;
            cfg.max_epochs = tr_epochs;
            cfg.patience = tr_patience;
            cfg.seed = stage_seed(seed, "train");
            const TrainResult trained = train(model, train_w, val_w, pair, cfg);
            save_model(trained.model, tr_out_model);
            if (!tr_history.empty()) {
                std::ostringstream hist;
                hist << "epoch,train_loss,val_rmse\n";
                for (const auto& rec : trained.history)
                    hist << rec.epoch << ',' << format_double(rec.train_loss) << ','
                         << format_double(rec.val_rmse) << '\n';
                write_text_file(tr_history, hist.str());
            }
            write_run_manifest(std::filesystem::path(tr_out_model).parent_path(), "train", args,
                               seed, elapsed());
            std::cout << "best val RMSE " << trained.best_val_rmse << " at epoch "
                      << trained.best_epoch << "\n";
        } else if (ev->parsed()) {
            auto [panel, stats] = zscore(load_panel(std::filesystem::path(ev_panel)));
            const Adjacency adj = load_adjacency(ev_adj);
            const StgcnModel model = load_model(ev_model);
            const SplitSpec split = parse_split(ev_split, panel.n_steps(), ev_val_weeks);
            const auto test_w =
                make_windows(panel, model.tau, model.tau_prime, split, Region::test);
            const EvalReport report = evaluate(model, test_w, build_laplacian(adj), stats,
                                               panel.target_channel);
            write_text_file(ev_out, metrics_table_csv({{to_string(adj.kind),
                                                        ev_raw ? report.denormalized
                                                               : report.normalized}}));
            write_run_manifest(std::filesystem::path(ev_out).parent_path(), "evaluate", args, seed,
                               elapsed());
        } else if (cmp->parsed()) {
            std::vector<Adjacency> adjs;
            for (const auto& p : cmp_adjs) adjs.push_back(load_adjacency(p));
            write_text_file(cmp_out, compare_edge_counts(adjs));
            write_run_manifest(std::filesystem::path(cmp_out).parent_path(), "compare", args, seed,
                               elapsed());
        } else if (agg->parsed()) {
            write_aggregate_csv(load_adjacency(agg_adj), agg_out);
            write_run_manifest(std::filesystem::path(agg_out).parent_path(), "aggregate", args,
                               seed, elapsed());
        } else if (self->parsed()) {
            std::mt19937_64 rng(stage_seed(seed, "cit-selftest"));
            std::normal_distribution<double> unit(0.0, 1.0);
            CitConfig cfg;
            cfg.width_rule = WidthRule::median_heuristic;
            std::ostringstream out;
            out << "trial,statistic,p\n";
            for (int trial = 0; trial < self_trials; ++trial) {
                Eigen::MatrixXd x(self_n, 1), y(self_n, 1), z(self_n, self_conditional ? 1 : 0);
                for (int i = 0; i < self_n; ++i) {
                    x(i, 0) = unit(rng);
                    y(i, 0) = unit(rng);
                    if (self_conditional) z(i, 0) = unit(rng);
                }
                const CitResult r = kcit(x, y, z, cfg);
                out << trial << ',' << format_double(r.statistic) << ','
                    << format_double(r.p_value) << '\n';
            }
            write_text_file(self_out, out.str());
            write_run_manifest(std::filesystem::path(self_out).parent_path(), "cit-selftest",
                               args, seed, elapsed());
        } else if (pipe->parsed()) {
            PipelineConfig cfg;
            if (!pipe_cfg.empty()) cfg = parse_pipeline_config(pipe_cfg);
            if (app.count("--seed")) cfg.seed = seed;
            if (cfg.use_synth && pipe_cfg.empty()) cfg.synth_spec = default_benchmark_spec(cfg.seed);
            cfg.sypi.n_threads = env_threads();
            const PipelineResult result = run_pipeline(cfg, pipe_out);
            write_run_manifest(pipe_out, "pipeline", args, cfg.seed, elapsed());
            std::cout << metrics_table_csv(result.metrics);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
