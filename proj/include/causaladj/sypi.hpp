#ifndef CAUSALADJ_SYPI_HPP
#define CAUSALADJ_SYPI_HPP

#include <optional>
#include <vector>

#include "causaladj/adjacency.hpp"
#include "causaladj/kcit.hpp"
#include "causaladj/panel.hpp"

namespace causaladj {

struct SypiConfig {
    double threshold1 = 0.1;   // dependence test: keep if p1 < threshold1
    double threshold2 = 0.08;  // independence test: keep if p2 > threshold2
    int max_lag = 4;
    std::optional<int> fixed_lag = 1;  // overrides the lag search when set
    int preselect_M = 10;
    int series_length = 50;  // trailing history used for the tests
    int var_window = 1;      // observations per CIT variable (d in the kernel)
    CitConfig cit;
    int n_threads = 1;  // parallelism across targets; output order-independent
};

struct CausalEdge {
    int src = 0;
    int dst = 0;
    int lag = 1;
    double p_dependence = 1.0;    // p1, must clear threshold1 from below
    double p_independence = 0.0;  // p2, must clear threshold2 from above
};

// Record of every CIT pair run, for the --log-pvalues output.
struct SypiTestLog {
    int target = 0;
    int candidate = 0;
    int lag = 1;
    double p1 = 1.0;
    double p2 = -1.0;  // -1 when test 2 was not reached
    bool accepted = false;
};

// The M nodes with largest |corr[target][.]|, ties broken by lower index.
std::vector<int> preselect_candidates(const Eigen::MatrixXd& corr, int target, int m);

// Lag in [1, max_lag] maximizing |corr(src_{t-lag}, dst_t)|; ties -> smallest.
int estimate_min_lag(const TimeSeriesPanel& panel, int src, int dst, const SypiConfig& cfg);

// Two-test cascade over the candidate set for one target node.
std::vector<CausalEdge> sypi_causes(const TimeSeriesPanel& panel, int target,
                                    const std::vector<int>& candidates, const SypiConfig& cfg,
                                    std::vector<SypiTestLog>* log = nullptr);

struct CausalResult {
    Adjacency adjacency;                 // binary, directed, kind=causal
    std::vector<CausalEdge> edges;
    std::vector<SypiTestLog> test_log;
    long cit_calls = 0;                  // bounded by 2*M*N
};

CausalResult causal_adjacency(const TimeSeriesPanel& panel, const SypiConfig& cfg);

// save_adjacency plus a weighted edge list: the CSV matrix stays binary, the
// JSON edge list carries 1 - p1 per edge.
void save_causal_adjacency(const CausalResult& result, const std::filesystem::path& base);

}  // namespace causaladj

#endif
