#include "causaladj/synth.hpp"

#include <Eigen/Eigenvalues>
#include <fstream>
#include <random>
#include <set>
#include <nlohmann/json.hpp>

#include "causaladj/io.hpp"

namespace causaladj {

namespace {

int max_lag_of(const SynthSpec& spec) {
    int p = 1;
    for (const auto& e : spec.true_edges) p = std::max(p, e.lag);
    return p;
}

// Spectral radius of the companion matrix of the lagged coefficient system.
double spectral_radius(const SynthSpec& spec) {
    const int n = spec.n_nodes;
    const int p = max_lag_of(spec);
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n * p, n * p);
    for (int i = 0; i < n; ++i) companion(i, i) = spec.self_coefficient;
    for (const auto& e : spec.true_edges)
        companion(e.dst, (e.lag - 1) * n + e.src) += e.coefficient;
    for (int k = 1; k < p; ++k)
        companion.block(k * n, (k - 1) * n, n, n).setIdentity();
    return companion.eigenvalues().cwiseAbs().maxCoeff();
}

void validate_spec(const SynthSpec& spec) {
    if (spec.n_nodes < 2 || spec.t_steps < 8) throw Error("synth spec too small");
    for (const auto& e : spec.true_edges) {
        if (e.src == e.dst) throw Error("self edge in true_edges");
        if (e.src < 0 || e.src >= spec.n_nodes || e.dst < 0 || e.dst >= spec.n_nodes)
            throw Error("edge index out of range");
        if (e.lag < 1) throw Error("edge lag must be >= 1");
    }
    if (spec.shift.kind != ShiftKind::none &&
        (spec.shift.at <= 0 || spec.shift.at >= spec.t_steps))
        throw Error("shift.at out of range");
    const double rho = spectral_radius(spec);
    if (rho >= 1.0)
        throw UnstableSpec("spectral radius " + format_double(rho) + " >= 1");
}

}  // namespace

SynthSpec default_benchmark_spec(std::uint64_t seed) {
    SynthSpec spec;
    spec.n_nodes = 20;
    spec.t_steps = 300;
    spec.self_coefficient = 0.7;
    spec.noise_std = 0.3;
    spec.seed = seed;
    spec.shift = {240, ShiftKind::coefficient_rescale, 0.4};

    std::mt19937_64 rng(stage_seed(seed, "benchmark-structure"));
    std::uniform_int_distribution<int> node(0, spec.n_nodes - 1);
    std::uniform_real_distribution<double> coeff(0.24, 0.3);

    // a randomly ordered chain plus a few two-step skips: in-degree stays 1-2,
    // so each node's direct parent dominates its correlation ranking, and
    // longer-range ancestors are screened off by the node in between
    std::vector<int> order(spec.n_nodes);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::set<std::pair<int, int>> used;
    for (int i = 0; i + 1 < spec.n_nodes; ++i) {
        used.insert({order[i], order[i + 1]});
        spec.true_edges.push_back({order[i], order[i + 1], 1, coeff(rng)});
    }
    std::uniform_int_distribution<int> pos(0, spec.n_nodes - 3);
    while (static_cast<int>(spec.true_edges.size()) < 25) {
        const int i = pos(rng);
        if (!used.insert({order[i], order[i + 2]}).second) continue;
        spec.true_edges.push_back({order[i], order[i + 2], 1, coeff(rng)});
    }
    while (static_cast<int>(spec.confounders.size()) < 5) {
        int a = node(rng), b = node(rng);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (used.count({a, b}) || used.count({b, a})) continue;
        if (!used.insert({a, b}).second) continue;
        spec.confounders.push_back({a, b, 0.5, 0.5});
    }
    return spec;
}

std::pair<TimeSeriesPanel, GroundTruth> generate(const SynthSpec& spec) {
    validate_spec(spec);
    const int n = spec.n_nodes;
    const int total = spec.burn_in + spec.t_steps;
    const int shift_at = spec.shift.kind == ShiftKind::none ? total + 1
                                                            : spec.burn_in + spec.shift.at;

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    std::normal_distribution<double> unit(0.0, 1.0);

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, total);
    const int nc = static_cast<int>(spec.confounders.size());
    Eigen::MatrixXd hidden(std::max(nc, 1), total);
    for (int t = 0; t < total; ++t)
        for (int k = 0; k < nc; ++k) hidden(k, t) = unit(rng);

    for (int t = 0; t < total; ++t) {
        const bool shifted = t >= shift_at;
        const double conf_scale =
            (shifted && spec.shift.kind == ShiftKind::coefficient_rescale)
                ? spec.shift.magnitude
                : 1.0;
        for (int i = 0; i < n; ++i) {
            double v = noise(rng);
            if (t >= 1) v += spec.self_coefficient * x(i, t - 1);
            x(i, t) = v;
        }
        for (const auto& e : spec.true_edges)
            if (t >= e.lag) x(e.dst, t) += e.coefficient * x(e.src, t - e.lag);
        for (int k = 0; k < nc; ++k) {
            if (t < 1) continue;
            const auto& c = spec.confounders[k];
            x(c.node_a, t) += conf_scale * c.coeff_a * hidden(k, t - 1);
            x(c.node_b, t) += conf_scale * c.coeff_b * hidden(k, t - 1);
        }
    }
    // observation-level shift: the dynamics never see it, so the observed mean
    // moves by exactly the configured magnitude
    if (spec.shift.kind == ShiftKind::mean_shift && shift_at < total)
        x.rightCols(total - shift_at).array() += spec.shift.magnitude;

    TimeSeriesPanel panel;
    for (int i = 0; i < n; ++i) panel.node_ids.push_back("n" + std::to_string(i));
    panel.channels.push_back(x.rightCols(spec.t_steps));
    panel.target_channel = 0;
    panel.validate();

    GroundTruth truth;
    truth.causal_adjacency = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : spec.true_edges) truth.causal_adjacency(e.src, e.dst) = 1.0;
    for (const auto& c : spec.confounders) {
        if (truth.causal_adjacency(c.node_a, c.node_b) != 0.0 ||
            truth.causal_adjacency(c.node_b, c.node_a) != 0.0)
            throw Error("confounded pair overlaps a true edge");
        truth.confounded_pairs.emplace_back(c.node_a, c.node_b);
    }
    return {panel, truth};
}

EdgeMetrics edge_metrics(const Adjacency& estimated, const GroundTruth& truth) {
    if (estimated.matrix.rows() != truth.causal_adjacency.rows())
        throw SizeMismatch("edge_metrics: adjacency sizes differ");
    const int n = estimated.n_nodes();
    long tp = 0, fp = 0, fn = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const bool est = estimated.matrix(i, j) != 0.0;
            const bool act = truth.causal_adjacency(i, j) != 0.0;
            tp += est && act;
            fp += est && !act;
            fn += !est && act;
        }
    EdgeMetrics m;
    m.precision = (tp + fp) == 0 ? 1.0 : double(tp) / double(tp + fp);
    m.recall = (tp + fn) == 0 ? 1.0 : double(tp) / double(tp + fn);
    m.f1 = (m.precision + m.recall) == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

SynthSpec parse_synth_spec(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw MissingFile(json_path.string());
    nlohmann::json j = nlohmann::json::parse(in);

    SynthSpec spec;
    if (j.value("preset", "") == "benchmark")
        spec = default_benchmark_spec(j.value("seed", 0ull));
    spec.seed = j.value("seed", spec.seed);
    spec.n_nodes = j.value("n_nodes", spec.n_nodes);
    spec.t_steps = j.value("t_steps", spec.t_steps);
    spec.self_coefficient = j.value("self_coefficient", spec.self_coefficient);
    spec.noise_std = j.value("noise_std", spec.noise_std);
    spec.burn_in = j.value("burn_in", spec.burn_in);
    if (j.contains("true_edges")) {
        spec.true_edges.clear();
        for (const auto& e : j["true_edges"])
            spec.true_edges.push_back({e.at("src").get<int>(), e.at("dst").get<int>(),
                                       e.value("lag", 1), e.at("coefficient").get<double>()});
    }
    if (j.contains("confounders")) {
        spec.confounders.clear();
        for (const auto& c : j["confounders"])
            spec.confounders.push_back({c.at("node_a").get<int>(), c.at("node_b").get<int>(),
                                        c.value("coeff_a", 0.9), c.value("coeff_b", 0.9)});
    }
    if (j.contains("shift")) {
        const auto& s = j["shift"];
        const std::string kind = s.value("kind", "none");
        spec.shift.kind = kind == "coefficient_rescale" ? ShiftKind::coefficient_rescale
                          : kind == "mean_shift"        ? ShiftKind::mean_shift
                                                        : ShiftKind::none;
        spec.shift.at = s.value("at", spec.shift.at);
        spec.shift.magnitude = s.value("magnitude", spec.shift.magnitude);
    }
    return spec;
}

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
    nlohmann::json j;
    j["n_nodes"] = truth.causal_adjacency.rows();
    nlohmann::json edges = nlohmann::json::array();
    for (int i = 0; i < truth.causal_adjacency.rows(); ++i)
        for (int k = 0; k < truth.causal_adjacency.cols(); ++k)
            if (truth.causal_adjacency(i, k) != 0.0) edges.push_back({{"src", i}, {"dst", k}});
    j["edges"] = edges;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [a, b] : truth.confounded_pairs) pairs.push_back({a, b});
    j["confounded_pairs"] = pairs;
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace causaladj
