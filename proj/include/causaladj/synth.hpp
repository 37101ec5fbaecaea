#ifndef CAUSALADJ_SYNTH_HPP
#define CAUSALADJ_SYNTH_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "causaladj/adjacency.hpp"
#include "causaladj/panel.hpp"

namespace causaladj {

struct SynthEdge {
    int src = 0;
    int dst = 0;
    int lag = 1;
    double coefficient = 0.0;
};

// Hidden white-noise driver feeding two observed nodes at lag 1; the pair
// becomes correlated without a direct edge.
struct SynthConfounder {
    int node_a = 0;
    int node_b = 0;
    double coeff_a = 0.0;
    double coeff_b = 0.0;
};

enum class ShiftKind { none, coefficient_rescale, mean_shift };

struct RegimeShift {
    int at = 0;  // first time index of the shifted regime
    ShiftKind kind = ShiftKind::none;
    double magnitude = 0.5;
};

struct SynthSpec {
    int n_nodes = 20;
    int t_steps = 300;
    std::vector<SynthEdge> true_edges;
    double self_coefficient = 0.7;  // per-node AR(1) memory term
    double noise_std = 0.3;
    std::vector<SynthConfounder> confounders;
    RegimeShift shift;
    std::uint64_t seed = 0;
    int burn_in = 500;
};

struct GroundTruth {
    Eigen::MatrixXd causal_adjacency;  // binary directed N x N, zero diagonal
    std::vector<std::pair<int, int>> confounded_pairs;
};

struct EdgeMetrics {
    double precision = 1.0;  // 1 by convention when nothing is predicted
    double recall = 0.0;
    double f1 = 0.0;
};

// Default benchmark: N=20, T=300, 25 random DAG edges, 5 confounded pairs,
// coefficient_rescale shift at t=240.
SynthSpec default_benchmark_spec(std::uint64_t seed);

SynthSpec parse_synth_spec(const std::filesystem::path& json_path);

std::pair<TimeSeriesPanel, GroundTruth> generate(const SynthSpec& spec);

EdgeMetrics edge_metrics(const Adjacency& estimated, const GroundTruth& truth);

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);

}  // namespace causaladj

#endif
