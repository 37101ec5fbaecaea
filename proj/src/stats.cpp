#include "causaladj/stats.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "causaladj/common.hpp"

namespace causaladj {

double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size()) throw ShapeMismatch("pearson: length mismatch");
    const auto n = x.size();
    if (n < 2) return 0.0;
    const Eigen::ArrayXd xc = x.array() - x.mean();
    const Eigen::ArrayXd yc = y.array() - y.mean();
    const double sx = std::sqrt(xc.square().sum());
    const double sy = std::sqrt(yc.square().sum());
    if (sx == 0.0 || sy == 0.0) return 0.0;  // constant series convention
    double r = (xc * yc).sum() / (sx * sy);
    return std::clamp(r, -1.0, 1.0);
}

double pearson_pvalue(double r, int n_samples) {
    if (n_samples < 4) throw TooFewSamples("pearson_pvalue needs n >= 4");
    const double ar = std::abs(r);
    if (ar >= 1.0) return 0.0;
    const double dof = n_samples - 2;
    const double t = ar * std::sqrt(dof / (1.0 - r * r));
    boost::math::students_t dist(dof);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, t));
}

double gamma_tail_from_moments(double x, double mean, double variance) {
    if (x <= 0.0) return 1.0;
    if (mean <= 0.0 || variance <= 0.0) return x > 0.0 ? 0.0 : 1.0;
    const double shape = mean * mean / variance;
    const double scale = variance / mean;
    boost::math::gamma_distribution<double> dist(shape, scale);
    return boost::math::cdf(boost::math::complement(dist, x));
}

double lagged_cross_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int lag) {
    if (x.size() != y.size()) throw ShapeMismatch("lagged_cross_correlation: length mismatch");
    const int t = static_cast<int>(x.size());
    if (lag < 0 || lag >= t - 1) throw ShapeMismatch("lag out of range");
    return pearson(x.head(t - lag), y.tail(t - lag));
}

}  // namespace causaladj
