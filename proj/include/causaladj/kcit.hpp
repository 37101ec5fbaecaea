#ifndef CAUSALADJ_KCIT_HPP
#define CAUSALADJ_KCIT_HPP

#include <Eigen/Dense>
#include <cstdint>

#include "causaladj/common.hpp"

namespace causaladj {

enum class PvalueMethod { gamma, permutation };
enum class WidthRule { fixed, median_heuristic };

struct CitConfig {
    double kernel_width = 0.8;     // sigma_X in the Gaussian kernel
    double ridge_epsilon = 1e-3;   // ridge in the conditional residual operator
    PvalueMethod pvalue_method = PvalueMethod::gamma;
    int n_permutations = 1000;
    WidthRule width_rule = WidthRule::fixed;
    double kernel_size = 10.0;     // unused; retained as a documented knob, see README
    std::uint64_t seed = 0;        // permutation draws only
};

struct CitResult {
    double statistic = 0.0;  // T_CI = tr(K_{xz|z} K_{y|z}) / n
    double p_value = 1.0;
    int n_samples = 0;
    PvalueMethod method = PvalueMethod::gamma;
    bool degenerate = false;  // constant x or y column
};

// K_ij = exp(-||row_i - row_j||^2 / (2 width^2)); symmetric PSD, unit diagonal.
Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& samples, double width);

// HKH with H = I - (1/n) 1 1^T; zero row/column sums.
Eigen::MatrixXd center_gram(const Eigen::MatrixXd& gram);

// R = eps (K + eps I)^{-1}, computed via an SPD solve. Eigenvalues in (0, 1].
Eigen::MatrixXd conditional_residual(const Eigen::MatrixXd& centered_gram, double ridge_epsilon);

// Median pairwise distance / sqrt(2) over the rows of `samples`.
double median_heuristic_width(const Eigen::MatrixXd& samples);

// Kernel conditional independence test of x vs y given z (z may be 0-column:
// degrades to the unconditional HSIC-style test). Rows are samples.
CitResult kcit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
               const CitConfig& cfg);

}  // namespace causaladj

#endif
