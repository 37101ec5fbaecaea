#ifndef CAUSALADJ_STATS_HPP
#define CAUSALADJ_STATS_HPP

#include <Eigen/Dense>

namespace causaladj {

// Pearson correlation of two equal-length series; 0 when either is constant.
double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Two-sided p-value of the Pearson significance test:
// t = r*sqrt((n-2)/(1-r^2)) against Student's t with n-2 dof.
// |r| = 1 returns 0 exactly.
double pearson_pvalue(double r, int n_samples);

// Upper tail P(X >= x) of a gamma with given mean and variance (moment-matched
// shape/scale). Returns 1 for x <= 0.
double gamma_tail_from_moments(double x, double mean, double variance);

// Lag-k sample cross-correlation corr(x_{t-k}, y_t).
double lagged_cross_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int lag);

}  // namespace causaladj

#endif
