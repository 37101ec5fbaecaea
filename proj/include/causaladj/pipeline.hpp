#ifndef CAUSALADJ_PIPELINE_HPP
#define CAUSALADJ_PIPELINE_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "causaladj/adjacency.hpp"
#include "causaladj/stgcn.hpp"
#include "causaladj/sypi.hpp"
#include "causaladj/synth.hpp"

namespace causaladj {

struct AggregateResult {
    Eigen::VectorXd row_sums;  // impact sent
    Eigen::VectorXd col_sums;  // impact received
};

AggregateResult aggregate_adjacency(const Adjacency& adj);
void write_aggregate_csv(const Adjacency& adj, const std::filesystem::path& path);

// Per-kind edge counts plus pairwise percent reductions, as CSV text.
std::string compare_edge_counts(const std::vector<Adjacency>& adjacencies);

// Table-shaped metrics CSV: rows = adjacency kind, columns T+1..T+tau',Avg,
// cells "rmse/mae".
std::string metrics_table_csv(const std::vector<std::pair<std::string, HorizonMetrics>>& rows);

struct PipelineConfig {
    std::uint64_t seed = 0;
    // Panel source: either a synthetic spec or an existing panel manifest.
    bool use_synth = true;
    SynthSpec synth_spec;
    std::filesystem::path panel_manifest;
    std::filesystem::path distance_matrix;  // required when kinds contains distance

    std::vector<AdjacencyKind> kinds = {AdjacencyKind::correlation, AdjacencyKind::causal};
    DistanceConfig distance;
    CorrelationConfig correlation;
    SypiConfig sypi;

    int tau = 4;
    int tau_prime = 4;
    // 74:16 split pattern applied as a fraction of T; val takes the last
    // val_weeks steps of the train region.
    int split_train = 74;
    int split_test = 16;
    int val_weeks = 8;

    TrainConfig train;
    int cheb_order = 3;
    int hidden_channels = 16;
    bool normalize_all_channels = true;
};

PipelineConfig parse_pipeline_config(const std::filesystem::path& json_path);

struct PipelineResult {
    std::vector<std::pair<std::string, HorizonMetrics>> metrics;      // normalized scale
    std::vector<std::pair<std::string, HorizonMetrics>> metrics_raw;  // original units
    std::map<std::string, long> edge_counts;
    SplitSpec split;
};

SplitSpec derive_split(int t_steps, int split_train, int split_test, int val_weeks);

// Full upstream+downstream run; artifacts written under out_dir.
PipelineResult run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out_dir);

void write_run_manifest(const std::filesystem::path& out_dir, const std::string& subcommand,
                        const std::vector<std::string>& args, std::uint64_t seed,
                        double duration_seconds);

}  // namespace causaladj

#endif
