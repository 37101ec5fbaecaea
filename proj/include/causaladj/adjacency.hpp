#ifndef CAUSALADJ_ADJACENCY_HPP
#define CAUSALADJ_ADJACENCY_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "causaladj/panel.hpp"

namespace causaladj {

enum class AdjacencyKind { distance, correlation, causal };

std::string to_string(AdjacencyKind kind);
AdjacencyKind adjacency_kind_from_string(const std::string& s);

struct Adjacency {
    Eigen::MatrixXd matrix;  // N x N, nonnegative, zero diagonal
    AdjacencyKind kind = AdjacencyKind::distance;
    bool directed = false;
    std::vector<std::string> node_ids;

    int n_nodes() const { return static_cast<int>(matrix.rows()); }
    long edge_count() const { return (matrix.array() != 0.0).count(); }
    void validate() const;
};

struct DistanceConfig {
    double sigma = 1.0;      // > 0
    double epsilon = 0.3679; // connectivity cutoff in [0,1]; default exp(-1)
};

struct CorrelationConfig {
    double r_threshold = 0.75;
    double p_threshold = 0.05;
};

// A_ij = exp(-d_ij^2 / sigma^2) where i != j and the value clears epsilon, else 0.
Adjacency distance_adjacency(const Eigen::MatrixXd& dist, const DistanceConfig& cfg,
                             const std::vector<std::string>& node_ids);

// Pearson correlation of the target channel over the time axis; diagonal 1.
Eigen::MatrixXd correlation_matrix(const TimeSeriesPanel& panel);

// Binary edge where |r| clears r_threshold and the t-test p-value clears p_threshold.
Adjacency correlation_adjacency(const Eigen::MatrixXd& corr, int n_samples,
                                const CorrelationConfig& cfg,
                                const std::vector<std::string>& node_ids);

// Serialization: dense CSV + JSON edge list + metadata sidecar, bit-consistent.
// `base` is a path without extension; writes base.csv, base.edges.json, base.meta.json.
void save_adjacency(const Adjacency& adj, const std::filesystem::path& base);
Adjacency load_adjacency(const std::filesystem::path& base);

}  // namespace causaladj

#endif
