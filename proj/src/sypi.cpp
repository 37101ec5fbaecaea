#include "causaladj/sypi.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <numeric>

#include <nlohmann/json.hpp>

#include "causaladj/io.hpp"
#include "causaladj/stats.hpp"

namespace causaladj {

namespace {

// Samples of one variable at a given lag: row r is the var_window-length slice
// ending at time (t0 + r - lag).
Eigen::MatrixXd lagged_variable(const Eigen::VectorXd& series, int t0, int n, int lag, int d) {
    Eigen::MatrixXd out(n, d);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c) out(r, c) = series(t0 + r - lag - (d - 1) + c);
    // standardize over the sample axis so the fixed kernel width is always on
    // the same scale regardless of the raw units of the panel
    for (int c = 0; c < d; ++c) {
        const double mean = out.col(c).mean();
        const double sd = std::sqrt((out.col(c).array() - mean).square().mean());
        out.col(c).array() -= mean;
        if (sd > 0.0) out.col(c) /= sd;
    }
    return out;
}

Eigen::MatrixXd hstack(const std::vector<Eigen::MatrixXd>& parts, int n) {
    int cols = 0;
    for (const auto& p : parts) cols += static_cast<int>(p.cols());
    Eigen::MatrixXd out(n, cols);
    int at = 0;
    for (const auto& p : parts) {
        out.middleCols(at, p.cols()) = p;
        at += static_cast<int>(p.cols());
    }
    return out;
}

}  // namespace

std::vector<int> preselect_candidates(const Eigen::MatrixXd& corr, int target, int m) {
    const int n = static_cast<int>(corr.rows());
    if (m > n - 1) throw MTooLarge("M = " + std::to_string(m) + " > N-1 = " + std::to_string(n - 1));
    std::vector<int> idx;
    idx.reserve(n - 1);
    for (int j = 0; j < n; ++j)
        if (j != target) idx.push_back(j);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        const double ra = std::abs(corr(target, a));
        const double rb = std::abs(corr(target, b));
        if (ra != rb) return ra > rb;
        return a < b;
    });
    idx.resize(m);
    return idx;
}

int estimate_min_lag(const TimeSeriesPanel& panel, int src, int dst, const SypiConfig& cfg) {
    if (cfg.fixed_lag) return *cfg.fixed_lag;
    const int t_total = panel.n_steps();
    const int len = std::min(cfg.series_length + cfg.max_lag, t_total);
    const Eigen::VectorXd s = panel.target().row(src).tail(len).transpose();
    const Eigen::VectorXd d = panel.target().row(dst).tail(len).transpose();
    int best_lag = 1;
    double best = -1.0;
    for (int lag = 1; lag <= cfg.max_lag; ++lag) {
        const double r = std::abs(lagged_cross_correlation(s, d, lag));
        if (r > best) {
            best = r;
            best_lag = lag;
        }
    }
    return best_lag;
}

std::vector<CausalEdge> sypi_causes(const TimeSeriesPanel& panel, int target,
                                    const std::vector<int>& candidates, const SypiConfig& cfg,
                                    std::vector<SypiTestLog>* log) {
    if (candidates.empty()) throw Error("sypi_causes: empty candidate set");
    const int t_total = panel.n_steps();
    const int d = cfg.var_window;

    std::vector<int> lags(candidates.size());
    for (size_t c = 0; c < candidates.size(); ++c)
        lags[c] = estimate_min_lag(panel, candidates[c], target, cfg);

    int max_lookback = 1 + d;  // Y_{t-1} window
    for (int w : lags) max_lookback = std::max(max_lookback, w + 1 + d);
    const int t0 = std::max(t_total - cfg.series_length, max_lookback);
    const int n = t_total - t0;
    if (n < 20) throw InsufficientSamples("only " + std::to_string(n) + " usable time points");

    const Eigen::VectorXd y_series = panel.target().row(target).transpose();
    const Eigen::MatrixXd y_now = lagged_variable(y_series, t0, n, 0, d);
    const Eigen::MatrixXd y_past = lagged_variable(y_series, t0, n, 1, d);

    std::vector<Eigen::MatrixXd> cand_vars(candidates.size());
    for (size_t c = 0; c < candidates.size(); ++c)
        cand_vars[c] = lagged_variable(panel.target().row(candidates[c]).transpose(),
                                       t0, n, lags[c], d);

    std::vector<CausalEdge> edges;
    for (size_t c = 0; c < candidates.size(); ++c) {
        const int cand = candidates[c];
        CitConfig cit = cfg.cit;
        cit.seed = stage_seed(cfg.cit.seed, "sypi/" + std::to_string(target) + "/" +
                                                std::to_string(cand));

        std::vector<Eigen::MatrixXd> cond = {y_past};
        for (size_t j = 0; j < candidates.size(); ++j)
            if (j != c) cond.push_back(cand_vars[j]);
        const Eigen::MatrixXd s_i = hstack(cond, n);

        SypiTestLog entry;
        entry.target = target;
        entry.candidate = cand;
        entry.lag = lags[c];

        const CitResult test1 = kcit(cand_vars[c], y_now, s_i, cit);
        entry.p1 = test1.p_value;
        if (test1.p_value < cfg.threshold1) {
            const Eigen::MatrixXd x_earlier = lagged_variable(
                panel.target().row(cand).transpose(), t0, n, lags[c] + 1, d);
            const Eigen::MatrixXd s_plus = hstack({s_i, cand_vars[c]}, n);
            const CitResult test2 = kcit(x_earlier, y_now, s_plus, cit);
            entry.p2 = test2.p_value;
            if (test2.p_value > cfg.threshold2) {
                entry.accepted = true;
                edges.push_back({cand, target, lags[c], test1.p_value, test2.p_value});
            }
        }
        if (log) log->push_back(entry);
    }
    return edges;
}

CausalResult causal_adjacency(const TimeSeriesPanel& panel, const SypiConfig& cfg) {
    panel.validate();
    const int n = panel.n_nodes();
    const Eigen::MatrixXd corr = correlation_matrix(panel);
    const int m = std::min(cfg.preselect_M, n - 1);

    struct TargetResult {
        std::vector<CausalEdge> edges;
        std::vector<SypiTestLog> log;
    };
    std::vector<TargetResult> per_target(n);

    auto run_target = [&](int target) {
        const std::vector<int> candidates = preselect_candidates(corr, target, m);
        per_target[target].edges =
            sypi_causes(panel, target, candidates, cfg, &per_target[target].log);
    };

    const int workers = std::max(1, cfg.n_threads);
    if (workers == 1) {
        for (int target = 0; target < n; ++target) run_target(target);
    } else {
        std::atomic<int> next{0};
        std::vector<std::future<void>> pool;
        for (int w = 0; w < workers; ++w)
            pool.push_back(std::async(std::launch::async, [&] {
                for (int t = next.fetch_add(1); t < n; t = next.fetch_add(1)) run_target(t);
            }));
        for (auto& f : pool) f.get();
    }

    CausalResult result;
    result.adjacency.kind = AdjacencyKind::causal;
    result.adjacency.directed = true;
    result.adjacency.node_ids = panel.node_ids;
    result.adjacency.matrix = Eigen::MatrixXd::Zero(n, n);
    for (int target = 0; target < n; ++target) {
        for (const auto& e : per_target[target].edges) {
            result.adjacency.matrix(e.src, e.dst) = 1.0;
            result.edges.push_back(e);
        }
        for (const auto& l : per_target[target].log) {
            result.test_log.push_back(l);
            result.cit_calls += (l.p2 >= 0.0) ? 2 : 1;
        }
    }
    result.adjacency.validate();
    return result;
}

void save_causal_adjacency(const CausalResult& result, const std::filesystem::path& base) {
    save_adjacency(result.adjacency, base);
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : result.edges)
        edges.push_back({{"src", result.adjacency.node_ids[e.src]},
                         {"dst", result.adjacency.node_ids[e.dst]},
                         {"weight", 1.0 - e.p_dependence},
                         {"lag", e.lag}});
    write_text_file(base.string() + ".edges.json", edges.dump(2) + "\n");
}

}  // namespace causaladj
