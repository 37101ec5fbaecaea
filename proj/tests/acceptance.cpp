// Acceptance gate: one pass/fail line per criterion, nonzero exit on failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "causaladj/pipeline.hpp"
#include "oracles.hpp"

using namespace causaladj;
using clock_type = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": " << detail
              << std::endl;
    if (!ok) ++failures;
}

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

int hardware_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Eigen::MatrixXd randn(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = unit(rng);
    return m;
}

// --- 1: KCIT type-I calibration -------------------------------------------

void criterion_1() {
    const auto t0 = clock_type::now();
    const int trials = 500, n = 100;
    std::mt19937_64 rng(1);
    CitConfig cfg;
    cfg.width_rule = WidthRule::median_heuristic;
    int rejects = 0;
    for (int trial = 0; trial < trials; ++trial) {
        const Eigen::MatrixXd x = randn(n, 1, rng);
        const Eigen::MatrixXd y = randn(n, 1, rng);
        const Eigen::MatrixXd z = randn(n, 1, rng);
        if (kcit(x, y, z, cfg).p_value < 0.05) ++rejects;
    }
    const double rate = static_cast<double>(rejects) / trials;
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "type-I rate " << rate << " in [0.02, 0.09], " << secs << " s (< 120)";
    report(1, rate >= 0.02 && rate <= 0.09 && secs < 120.0, d.str());
}

// --- 2: gamma approximation vs permutation oracle -------------------------

void criterion_2() {
    const int trials = 200, n = 60;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> coupling(0.0, 1.0);
    int agree = 0;
    for (int trial = 0; trial < trials; ++trial) {
        // mix of null and alternative cases across a range of effect sizes
        const double c = trial % 2 == 0 ? 0.0 : coupling(rng);
        const Eigen::MatrixXd x = randn(n, 1, rng);
        const Eigen::MatrixXd y = c * x + randn(n, 1, rng);
        const Eigen::MatrixXd z(n, 0);

        CitConfig gamma_cfg;
        gamma_cfg.width_rule = WidthRule::median_heuristic;
        CitConfig perm_cfg = gamma_cfg;
        perm_cfg.pvalue_method = PvalueMethod::permutation;
        perm_cfg.n_permutations = 1000;
        perm_cfg.seed = trial;

        const bool g = kcit(x, y, z, gamma_cfg).p_value < 0.05;
        const bool p = kcit(x, y, z, perm_cfg).p_value < 0.05;
        if (g == p) ++agree;
    }
    std::ostringstream d;
    d << "gamma/permutation decisions agree in " << agree << "/" << trials << " (need >= 180)";
    report(2, agree >= trials * 9 / 10, d.str());
}

// --- 3 + 4: SyPI recovery and false-positive filtering --------------------

struct SypiRun {
    EdgeMetrics metrics;
    long causal_edges = 0;
    long corr_edges = 0;
    int confounded_total = 0;
    int confounded_absent = 0;
};

SypiRun run_benchmark_seed(std::uint64_t seed) {
    auto [raw, truth] = generate(default_benchmark_spec(seed));
    auto [panel, stats] = zscore(raw);

    SypiConfig cfg;
    cfg.preselect_M = 4;
    cfg.series_length = panel.n_steps();
    cfg.cit.kernel_width = 8.0;  // near-linear kernel regime suits the VAR data
    cfg.cit.seed = stage_seed(seed, "sypi");
    cfg.n_threads = hardware_threads();
    const CausalResult result = causal_adjacency(panel, cfg);

    const Adjacency corr = correlation_adjacency(correlation_matrix(panel), panel.n_steps(),
                                                 {0.3, 0.05}, panel.node_ids);
    SypiRun run;
    run.metrics = edge_metrics(result.adjacency, truth);
    run.causal_edges = result.adjacency.edge_count();
    run.corr_edges = corr.edge_count();
    for (const auto& [a, b] : truth.confounded_pairs) {
        ++run.confounded_total;
        if (result.adjacency.matrix(a, b) == 0.0 && result.adjacency.matrix(b, a) == 0.0)
            ++run.confounded_absent;
    }
    return run;
}

void criteria_3_and_4() {
    const auto t0 = clock_type::now();
    const int seeds = 20;
    double f1_sum = 0.0;
    int fewer_edges = 0, confounded_total = 0, confounded_absent = 0;
    for (int seed = 0; seed < seeds; ++seed) {
        const SypiRun run = run_benchmark_seed(seed);
        f1_sum += run.metrics.f1;
        fewer_edges += run.causal_edges < run.corr_edges;
        confounded_total += run.confounded_total;
        confounded_absent += run.confounded_absent;
    }
    const double mean_f1 = f1_sum / seeds;
    const double secs = seconds_since(t0);
    {
        std::ostringstream d;
        d << "mean directed-edge F1 " << mean_f1 << " (>= 0.8) over " << seeds << " seeds, "
          << secs << " s (< 300)";
        report(3, mean_f1 >= 0.8 && secs < 300.0, d.str());
    }
    {
        const double absent_frac = static_cast<double>(confounded_absent) / confounded_total;
        std::ostringstream d;
        d << "A_CAU smaller than correlation adjacency in " << fewer_edges << "/" << seeds
          << " seeds (>= 18); confounded pairs absent " << confounded_absent << "/"
          << confounded_total << " (>= 80%)";
        report(4, fewer_edges >= 18 && absent_frac >= 0.8, d.str());
    }
}

// --- 5: pre-selection complexity ------------------------------------------

void criterion_5() {
    const int m = 5;
    std::vector<double> times;
    bool budget_ok = true;
    for (int n_nodes : {10, 20, 40}) {
        SynthSpec spec;
        spec.n_nodes = n_nodes;
        spec.t_steps = 300;
        spec.self_coefficient = 0.7;
        std::mt19937_64 rng(n_nodes);
        std::uniform_int_distribution<int> pick(0, n_nodes - 1);
        std::uniform_real_distribution<double> coeff(0.6, 0.9);
        while (static_cast<int>(spec.true_edges.size()) < n_nodes) {
            const int src = pick(rng), dst = pick(rng);
            if (src < dst) spec.true_edges.push_back({src, dst, 1, coeff(rng)});
        }
        spec.seed = n_nodes;
        auto [raw, truth] = generate(spec);
        auto [panel, stats] = zscore(raw);

        SypiConfig cfg;
        cfg.preselect_M = m;
        cfg.series_length = 200;
        cfg.n_threads = 1;  // serial so wall-clock scaling is meaningful
        double best = std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < 3; ++rep) {  // best-of-3 damps scheduler noise
            const auto t0 = clock_type::now();
            const CausalResult result = causal_adjacency(panel, cfg);
            best = std::min(best, seconds_since(t0));
            budget_ok = budget_ok && result.cit_calls <= 2l * m * n_nodes;
        }
        times.push_back(best);
    }
    const double r1 = times[1] / times[0];
    const double r2 = times[2] / times[1];
    std::ostringstream d;
    d << "CIT calls within 2MN at every N; doubling ratios " << r1 << ", " << r2 << " (<= 2.5)";
    report(5, budget_ok && r1 <= 2.5 && r2 <= 2.5, d.str());
}

// --- 6: gradient exactness -------------------------------------------------

void criterion_6() {
    double worst = 0.0;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Adjacency adj;
        adj.kind = AdjacencyKind::distance;
        for (int i = 0; i < 6; ++i) adj.node_ids.push_back("n" + std::to_string(i));
        adj.matrix = Eigen::MatrixXd::Zero(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j)
                if (u(rng) < 0.5) adj.matrix(i, j) = adj.matrix(j, i) = u(rng);
        const LaplacianPair pair = build_laplacian(adj);
        StgcnModel model = init_model(3, 4, 4, 1, 5, seed);

        std::normal_distribution<double> unit(0.0, 1.0);
        WindowSample w;
        w.tau = 4;
        w.n_features = 1;
        w.x = randn(6, 4, rng);
        w.y = randn(6, 4, rng);
        auto [grad, loss] = backward(model, {w}, pair);

        const Eigen::VectorXd params = flatten_parameters(model);
        const double h = 1e-5;
        for (long p = 0; p < params.size(); ++p) {
            Eigen::VectorXd plus = params, minus = params;
            plus(p) += h;
            minus(p) -= h;
            StgcnModel mp = model, mm = model;
            unflatten_parameters(mp, plus);
            unflatten_parameters(mm, minus);
            const double fd =
                (mse_loss(forward(mp, w, pair), w.y) - mse_loss(forward(mm, w, pair), w.y)) /
                (2.0 * h);
            const double scale = std::max({1.0, std::abs(fd), std::abs(grad(p))});
            worst = std::max(worst, std::abs(grad(p) - fd) / scale);
        }
    }
    std::ostringstream d;
    d << "worst finite-difference relative error " << worst << " (<= 1e-4), 3 seeds";
    report(6, worst <= 1e-4, d.str());
}

// --- 7: Chebyshev spectral oracle -----------------------------------------

void criterion_7() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed + 70);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Adjacency adj;
        adj.kind = AdjacencyKind::distance;
        for (int i = 0; i < 8; ++i) adj.node_ids.push_back("n" + std::to_string(i));
        adj.matrix = Eigen::MatrixXd::Zero(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = i + 1; j < 8; ++j)
                if (u(rng) < 0.4) adj.matrix(i, j) = adj.matrix(j, i) = u(rng);
        const LaplacianPair pair = build_laplacian(adj);

        ChebLayer layer;
        for (int k = 0; k < 3; ++k) layer.theta.push_back(Eigen::MatrixXd::Random(2, 2));
        layer.bias = Eigen::VectorXd::Random(2);
        const Eigen::MatrixXd x = randn(8, 2, rng);
        const Eigen::MatrixXd expected =
            oracles::cheb_spectral_oracle(pair.scaled, x, layer.theta, layer.bias);
        worst = std::max(worst, (cheb_conv(x, pair, layer) - expected).cwiseAbs().maxCoeff());
    }
    std::ostringstream d;
    d << "max deviation from eigendecomposition evaluation " << worst << " (<= 1e-9)";
    report(7, worst <= 1e-9, d.str());
}

// --- 8 + 9 + 10: OOD improvement, protocol shape, determinism -------------

PipelineConfig ood_config(std::uint64_t seed) {
    PipelineConfig cfg;
    cfg.seed = seed;
    cfg.use_synth = true;
    cfg.synth_spec = default_benchmark_spec(seed);
    cfg.correlation.r_threshold = 0.3;
    cfg.sypi.preselect_M = 4;
    cfg.sypi.series_length = cfg.synth_spec.t_steps;
    cfg.sypi.cit.kernel_width = 8.0;
    cfg.sypi.n_threads = hardware_threads();
    cfg.train.max_epochs = 200;
    cfg.train.patience = 30;
    return cfg;
}

void criteria_8_9_10() {
    const auto root = std::filesystem::temp_directory_path() / "causaladj_acceptance";
    std::filesystem::remove_all(root);
    double corr_sum = 0.0, cau_sum = 0.0, worst_run = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto t0 = clock_type::now();
        const PipelineResult result =
            run_pipeline(ood_config(seed), root / ("seed" + std::to_string(seed)));
        worst_run = std::max(worst_run, seconds_since(t0));
        for (const auto& [kind, m] : result.metrics) {
            if (kind == "correlation") corr_sum += m.avg_rmse;
            if (kind == "causal") cau_sum += m.avg_rmse;
        }
    }
    const double improvement = (corr_sum - cau_sum) / corr_sum;
    {
        std::ostringstream d;
        d << "causal adjacency improves mean test RMSE by " << improvement * 100.0
          << "% (>= 5%) over 5 seeds; slowest pipeline " << worst_run << " s (< 600)";
        report(8, improvement >= 0.05 && worst_run < 600.0, d.str());
    }
    {
        const std::string csv = slurp(root / "seed0" / "comparison.csv");
        const bool header_ok = csv.rfind("adjacency,T+1,T+2,T+3,T+4,Avg\n", 0) == 0;
        const bool rows_ok = csv.find("\ncorrelation,") != std::string::npos &&
                             csv.find("\ncausal,") != std::string::npos;
        report(9, header_ok && rows_ok, "evaluate emits the T+1..T+4,Avg RMSE/MAE layout");
    }
    {
        run_pipeline(ood_config(0), root / "seed0_repeat");
        bool identical = true;
        for (const char* name :
             {"comparison.csv", "comparison_raw.csv", "edge_counts.csv", "predictions.csv"})
            identical = identical && slurp(root / "seed0" / name) ==
                                         slurp(root / "seed0_repeat" / name);
        report(10, identical, "repeated seed-0 pipeline reproduces metric CSVs byte for byte");
    }
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criteria_3_and_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criteria_8_9_10();
    std::cout << (failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED") << " ("
              << 10 - failures << "/10)" << std::endl;
    return failures == 0 ? 0 : 1;
}
