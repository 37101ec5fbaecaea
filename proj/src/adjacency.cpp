#include "causaladj/adjacency.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "causaladj/io.hpp"
#include "causaladj/stats.hpp"

namespace causaladj {

std::string to_string(AdjacencyKind kind) {
    switch (kind) {
        case AdjacencyKind::distance: return "distance";
        case AdjacencyKind::correlation: return "correlation";
        case AdjacencyKind::causal: return "causal";
    }
    throw Error("unreachable", 1);
}

AdjacencyKind adjacency_kind_from_string(const std::string& s) {
    if (s == "distance") return AdjacencyKind::distance;
    if (s == "correlation") return AdjacencyKind::correlation;
    if (s == "causal") return AdjacencyKind::causal;
    throw Error("unknown adjacency kind: " + s);
}

void Adjacency::validate() const {
    const int n = n_nodes();
    if (matrix.cols() != n) throw ShapeMismatch("adjacency not square");
    if (static_cast<int>(node_ids.size()) != n) throw ShapeMismatch("node_ids length mismatch");
    if ((matrix.array() < 0.0).any()) throw NegativeWeight("adjacency entry < 0");
    if ((matrix.array() > 1.0 + 1e-12).any()) throw Error("adjacency entry > 1");
    for (int i = 0; i < n; ++i)
        if (matrix(i, i) != 0.0) throw Error("adjacency diagonal must be zero");
    if (!directed && (matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw AsymmetricInput("undirected adjacency not symmetric");
}

Adjacency distance_adjacency(const Eigen::MatrixXd& dist, const DistanceConfig& cfg,
                             const std::vector<std::string>& node_ids) {
    const int n = static_cast<int>(dist.rows());
    if (dist.cols() != n) throw ShapeMismatch("distance matrix not square");
    if ((dist.array() < 0.0).any()) throw NegativeDistance("distance entry < 0");
    if ((dist - dist.transpose()).cwiseAbs().maxCoeff() > 1e-9)
        throw AsymmetricInput("distance matrix");
    if (cfg.sigma <= 0.0) throw Error("sigma must be > 0");

    Adjacency adj;
    adj.kind = AdjacencyKind::distance;
    adj.directed = false;
    adj.node_ids = node_ids;
    adj.matrix = Eigen::MatrixXd::Zero(n, n);
    const double s2 = cfg.sigma * cfg.sigma;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double w = std::exp(-dist(i, j) * dist(i, j) / s2);
            if (w >= cfg.epsilon) adj.matrix(i, j) = w;
        }
    // enforce exact symmetry against rounding in the exp evaluation
    adj.matrix = ((adj.matrix + adj.matrix.transpose()) / 2.0).eval();
    adj.validate();
    return adj;
}

Eigen::MatrixXd correlation_matrix(const TimeSeriesPanel& panel) {
    const int n = panel.n_nodes();
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd& target = panel.target();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double r = pearson(target.row(i).transpose(), target.row(j).transpose());
            corr(i, j) = r;
            corr(j, i) = r;
        }
    return corr;
}

Adjacency correlation_adjacency(const Eigen::MatrixXd& corr, int n_samples,
                                const CorrelationConfig& cfg,
                                const std::vector<std::string>& node_ids) {
    const int n = static_cast<int>(corr.rows());
    if (corr.cols() != n) throw ShapeMismatch("correlation matrix not square");
    if ((corr.cwiseAbs().array() > 1.0 + 1e-12).any()) throw Error("|r| > 1");
    if (n_samples < 4) throw TooFewSamples("correlation_adjacency needs T >= 4");

    Adjacency adj;
    adj.kind = AdjacencyKind::correlation;
    adj.directed = false;
    adj.node_ids = node_ids;
    adj.matrix = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double r = std::abs(corr(i, j));
            if (r < cfg.r_threshold) continue;
            if (pearson_pvalue(corr(i, j), n_samples) <= cfg.p_threshold) {
                adj.matrix(i, j) = 1.0;
                adj.matrix(j, i) = 1.0;
            }
        }
    adj.validate();
    return adj;
}

void save_adjacency(const Adjacency& adj, const std::filesystem::path& base) {
    if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
    write_labeled_matrix(std::filesystem::path(base.string() + ".csv"), adj.node_ids,
                         adj.node_ids, adj.matrix);
    nlohmann::json edges = nlohmann::json::array();
    for (int i = 0; i < adj.n_nodes(); ++i)
        for (int j = 0; j < adj.n_nodes(); ++j)
            if (adj.matrix(i, j) != 0.0)
                edges.push_back({{"src", adj.node_ids[i]},
                                 {"dst", adj.node_ids[j]},
                                 {"weight", adj.matrix(i, j)}});
    write_text_file(base.string() + ".edges.json", edges.dump(2) + "\n");
    nlohmann::json meta = {{"kind", to_string(adj.kind)},
                           {"directed", adj.directed},
                           {"nodes", adj.node_ids},
                           {"edge_count", adj.edge_count()}};
    write_text_file(base.string() + ".meta.json", meta.dump(2) + "\n");
}

Adjacency load_adjacency(const std::filesystem::path& base) {
    LabeledMatrix m = read_labeled_matrix(base.string() + ".csv");
    std::ifstream meta_in(base.string() + ".meta.json");
    if (!meta_in) throw MissingFile(base.string() + ".meta.json");
    nlohmann::json meta = nlohmann::json::parse(meta_in);
    Adjacency adj;
    adj.matrix = m.values;
    adj.node_ids = m.col_ids;
    adj.kind = adjacency_kind_from_string(meta.at("kind").get<std::string>());
    adj.directed = meta.at("directed").get<bool>();
    adj.validate();
    return adj;
}

}  // namespace causaladj
