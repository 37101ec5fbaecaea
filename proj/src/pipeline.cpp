#include "causaladj/pipeline.hpp"

#include <fstream>
#include <sstream>
#include <nlohmann/json.hpp>

#include "causaladj/io.hpp"

namespace causaladj {

AggregateResult aggregate_adjacency(const Adjacency& adj) {
    AggregateResult r;
    r.row_sums = adj.matrix.rowwise().sum();
    r.col_sums = adj.matrix.colwise().sum().transpose();
    return r;
}

void write_aggregate_csv(const Adjacency& adj, const std::filesystem::path& path) {
    const AggregateResult agg = aggregate_adjacency(adj);
    std::ostringstream out;
    out << "node_id,impact_sent,impact_received\n";
    for (int i = 0; i < adj.n_nodes(); ++i)
        out << adj.node_ids[i] << ',' << format_double(agg.row_sums(i)) << ','
            << format_double(agg.col_sums(i)) << '\n';
    write_text_file(path, out.str());
}

std::string compare_edge_counts(const std::vector<Adjacency>& adjacencies) {
    if (adjacencies.size() < 2) throw Error("compare needs >= 2 adjacencies");
    const int n = adjacencies.front().n_nodes();
    for (const auto& a : adjacencies)
        if (a.n_nodes() != n) throw SizeMismatch("adjacencies differ in N");
    std::ostringstream out;
    out << "kind,edge_count\n";
    for (const auto& a : adjacencies) out << to_string(a.kind) << ',' << a.edge_count() << '\n';
    out << "kind_a,kind_b,reduction_percent\n";
    for (size_t i = 0; i < adjacencies.size(); ++i)
        for (size_t j = 0; j < adjacencies.size(); ++j) {
            if (i == j) continue;
            const double a = static_cast<double>(adjacencies[i].edge_count());
            const double b = static_cast<double>(adjacencies[j].edge_count());
            const double reduction = b == 0.0 ? 0.0 : (b - a) / b * 100.0;
            out << to_string(adjacencies[i].kind) << ',' << to_string(adjacencies[j].kind) << ','
                << format_double(reduction) << '\n';
        }
    return out.str();
}

std::string metrics_table_csv(const std::vector<std::pair<std::string, HorizonMetrics>>& rows) {
    if (rows.empty()) throw Error("metrics_table_csv: no rows");
    const size_t horizons = rows.front().second.rmse.size();
    std::ostringstream out;
    out << "adjacency";
    for (size_t h = 1; h <= horizons; ++h) out << ",T+" << h;
    out << ",Avg\n";
    for (const auto& [kind, m] : rows) {
        out << kind;
        for (size_t h = 0; h < horizons; ++h)
            out << ',' << format_double(m.rmse[h]) << '/' << format_double(m.mae[h]);
        out << ',' << format_double(m.avg_rmse) << '/' << format_double(m.avg_mae) << '\n';
    }
    return out.str();
}

SplitSpec derive_split(int t_steps, int split_train, int split_test, int val_weeks) {
    if (split_train <= 0 || split_test <= 0 || val_weeks <= 0)
        throw Error("split parts must be positive");
    SplitSpec split;
    split.val_end = t_steps * split_train / (split_train + split_test);
    split.train_end = split.val_end - val_weeks;
    split.validate(t_steps);
    return split;
}

PipelineConfig parse_pipeline_config(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw MissingFile(json_path.string());
    nlohmann::json j = nlohmann::json::parse(in);

    PipelineConfig cfg;
    cfg.seed = j.value("seed", 0ull);
    if (j.contains("panel")) {
        cfg.use_synth = false;
        cfg.panel_manifest = json_path.parent_path() / j["panel"].get<std::string>();
    } else {
        cfg.use_synth = true;
        cfg.synth_spec = default_benchmark_spec(cfg.seed);
        if (j.contains("synth_spec_file"))
            cfg.synth_spec =
                parse_synth_spec(json_path.parent_path() / j["synth_spec_file"].get<std::string>());
    }
    if (j.contains("distance_matrix"))
        cfg.distance_matrix = json_path.parent_path() / j["distance_matrix"].get<std::string>();
    if (j.contains("kinds")) {
        cfg.kinds.clear();
        for (const auto& k : j["kinds"])
            cfg.kinds.push_back(adjacency_kind_from_string(k.get<std::string>()));
    }
    if (j.contains("distance")) {
        cfg.distance.sigma = j["distance"].value("sigma", cfg.distance.sigma);
        cfg.distance.epsilon = j["distance"].value("epsilon", cfg.distance.epsilon);
    }
    if (j.contains("correlation")) {
        cfg.correlation.r_threshold = j["correlation"].value("r_threshold", 0.75);
        cfg.correlation.p_threshold = j["correlation"].value("p_threshold", 0.05);
    }
    if (j.contains("sypi")) {
        const auto& s = j["sypi"];
        cfg.sypi.threshold1 = s.value("threshold1", cfg.sypi.threshold1);
        cfg.sypi.threshold2 = s.value("threshold2", cfg.sypi.threshold2);
        cfg.sypi.max_lag = s.value("max_lag", cfg.sypi.max_lag);
        if (s.contains("fixed_lag")) {
            if (s["fixed_lag"].is_null())
                cfg.sypi.fixed_lag.reset();
            else
                cfg.sypi.fixed_lag = s["fixed_lag"].get<int>();
        }
        cfg.sypi.preselect_M = s.value("preselect_M", cfg.sypi.preselect_M);
        cfg.sypi.series_length = s.value("series_length", cfg.sypi.series_length);
        cfg.sypi.var_window = s.value("var_window", cfg.sypi.var_window);
        if (s.contains("cit")) {
            const auto& c = s["cit"];
            cfg.sypi.cit.kernel_width = c.value("kernel_width", cfg.sypi.cit.kernel_width);
            cfg.sypi.cit.ridge_epsilon = c.value("ridge_epsilon", cfg.sypi.cit.ridge_epsilon);
            cfg.sypi.cit.n_permutations = c.value("n_permutations", cfg.sypi.cit.n_permutations);
            if (c.value("pvalue_method", "gamma") == "permutation")
                cfg.sypi.cit.pvalue_method = PvalueMethod::permutation;
            if (c.value("width_rule", "fixed") == "median_heuristic")
                cfg.sypi.cit.width_rule = WidthRule::median_heuristic;
        }
    }
    cfg.tau = j.value("tau", cfg.tau);
    cfg.tau_prime = j.value("tau_prime", cfg.tau_prime);
    cfg.split_train = j.value("split_train", cfg.split_train);
    cfg.split_test = j.value("split_test", cfg.split_test);
    cfg.val_weeks = j.value("val_weeks", cfg.val_weeks);
    if (j.contains("train")) {
        const auto& t = j["train"];
        cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
        cfg.train.max_epochs = t.value("max_epochs", cfg.train.max_epochs);
        cfg.train.patience = t.value("patience", cfg.train.patience);
        cfg.cheb_order = t.value("cheb_order", cfg.cheb_order);
        cfg.hidden_channels = t.value("hidden_channels", cfg.hidden_channels);
    }
    cfg.normalize_all_channels = j.value("normalize_all_channels", true);
    return cfg;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    TimeSeriesPanel raw_panel;
    if (cfg.use_synth) {
        SynthSpec spec = cfg.synth_spec;
        spec.seed = stage_seed(cfg.seed, "synth");
        auto [panel, truth] = generate(spec);
        raw_panel = std::move(panel);
        save_panel(raw_panel, out_dir, "panel");
        save_ground_truth(truth, out_dir / "ground_truth.json");
    } else {
        raw_panel = load_panel(cfg.panel_manifest);
    }
    auto [panel, stats] = zscore(raw_panel, cfg.normalize_all_channels);

    std::vector<Adjacency> adjacencies;
    for (AdjacencyKind kind : cfg.kinds) {
        Adjacency adj;
        switch (kind) {
            case AdjacencyKind::distance: {
                if (cfg.distance_matrix.empty())
                    throw MissingFile("distance kind requested but no distance_matrix configured");
                const LabeledMatrix m = read_labeled_matrix(cfg.distance_matrix);
                adj = distance_adjacency(m.values, cfg.distance, panel.node_ids);
                break;
            }
            case AdjacencyKind::correlation:
                adj = correlation_adjacency(correlation_matrix(panel), panel.n_steps(),
                                            cfg.correlation, panel.node_ids);
                break;
            case AdjacencyKind::causal: {
                SypiConfig sypi = cfg.sypi;
                sypi.cit.seed = stage_seed(cfg.seed, "sypi");
                const CausalResult result = causal_adjacency(panel, sypi);
                save_causal_adjacency(result, out_dir / ("adjacency_" + to_string(kind)));
                adjacencies.push_back(result.adjacency);
                continue;
            }
        }
        save_adjacency(adj, out_dir / ("adjacency_" + to_string(kind)));
        adjacencies.push_back(std::move(adj));
    }

    PipelineResult result;
    result.split = derive_split(panel.n_steps(), cfg.split_train, cfg.split_test, cfg.val_weeks);
    const auto train_windows =
        make_windows(panel, cfg.tau, cfg.tau_prime, result.split, Region::train);
    const auto val_windows = make_windows(panel, cfg.tau, cfg.tau_prime, result.split, Region::val);
    const auto test_windows =
        make_windows(panel, cfg.tau, cfg.tau_prime, result.split, Region::test);

    // per-week horizon-1 prediction trace, mean over nodes
    std::vector<std::vector<double>> predictions(adjacencies.size());

    for (size_t a = 0; a < adjacencies.size(); ++a) {
        const Adjacency& adj = adjacencies[a];
        const LaplacianPair pair = build_laplacian(adj);
        // identical init seed and hyperparameters across adjacency kinds
        StgcnModel model = init_model(cfg.cheb_order, cfg.tau, cfg.tau_prime, panel.n_channels(),
                                      cfg.hidden_channels, stage_seed(cfg.seed, "train-init"));
        TrainConfig train_cfg = cfg.train;
        train_cfg.seed = stage_seed(cfg.seed, "train");
        const TrainResult trained = train(model, train_windows, val_windows, pair, train_cfg);

        std::ostringstream hist;
        hist << "epoch,train_loss,val_rmse\n";
        for (const auto& rec : trained.history)
            hist << rec.epoch << ',' << format_double(rec.train_loss) << ','
                 << format_double(rec.val_rmse) << '\n';
        write_text_file(out_dir / ("history_" + to_string(adj.kind) + ".csv"), hist.str());
        save_model(trained.model, out_dir / ("model_" + to_string(adj.kind) + ".json"));

        const EvalReport report =
            evaluate(trained.model, test_windows, pair, stats, panel.target_channel);
        result.metrics.emplace_back(to_string(adj.kind), report.normalized);
        result.metrics_raw.emplace_back(to_string(adj.kind), report.denormalized);
        result.edge_counts[to_string(adj.kind)] = adj.edge_count();

        for (const auto& w : test_windows)
            predictions[a].push_back(forward(trained.model, w, pair).col(0).mean());
    }

    write_text_file(out_dir / "comparison.csv", metrics_table_csv(result.metrics));
    write_text_file(out_dir / "comparison_raw.csv", metrics_table_csv(result.metrics_raw));
    if (adjacencies.size() >= 2)
        write_text_file(out_dir / "edge_counts.csv", compare_edge_counts(adjacencies));
    for (const auto& adj : adjacencies)
        write_aggregate_csv(adj, out_dir / ("aggregate_" + to_string(adj.kind) + ".csv"));

    std::ostringstream pred;
    pred << "time,truth";
    for (const auto& adj : adjacencies) pred << ',' << to_string(adj.kind);
    pred << '\n';
    for (size_t w = 0; w < test_windows.size(); ++w) {
        pred << (test_windows[w].t_origin + 1) << ','
             << format_double(test_windows[w].y.col(0).mean());
        for (size_t a = 0; a < adjacencies.size(); ++a)
            pred << ',' << format_double(predictions[a][w]);
        pred << '\n';
    }
    write_text_file(out_dir / "predictions.csv", pred.str());
    return result;
}

void write_run_manifest(const std::filesystem::path& out_dir, const std::string& subcommand,
                        const std::vector<std::string>& args, std::uint64_t seed,
                        double duration_seconds) {
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["args"] = args;
    j["seed"] = seed;
    j["version"] = kVersion;
    j["duration_seconds"] = duration_seconds;
    const std::filesystem::path dir = out_dir.empty() ? "." : out_dir;
    std::filesystem::create_directories(dir);
    write_text_file(dir / "run_manifest.json", j.dump(2) + "\n");
}

}  // namespace causaladj
