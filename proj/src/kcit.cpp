#include "causaladj/kcit.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <vector>

#include "causaladj/stats.hpp"

namespace causaladj {

namespace {

bool is_constant(const Eigen::MatrixXd& m) {
    if (m.cols() == 0) return true;
    for (int c = 0; c < m.cols(); ++c)
        if (m.col(c).maxCoeff() - m.col(c).minCoeff() > 1e-12) return false;
    return true;
}

double pick_width(const Eigen::MatrixXd& samples, const CitConfig& cfg) {
    // the fixed width is per dimension; squared distances of standardized
    // variables grow linearly in d, so the joint width scales with sqrt(d)
    if (cfg.width_rule == WidthRule::fixed)
        return cfg.kernel_width * std::sqrt(std::max<int>(1, samples.cols()));
    return median_heuristic_width(samples);
}

// trace(A B) for symmetric A, B.
double sym_trace_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.cwiseProduct(b).sum();
}

}  // namespace

Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& samples, double width) {
    const int n = static_cast<int>(samples.rows());
    if (n < 2) throw TooFewSamples("gaussian_gram needs n >= 2");
    if (width <= 0.0) throw Error("kernel width must be > 0");
    if (!samples.allFinite()) throw NonFiniteInput("gaussian_gram");
    const Eigen::VectorXd sq = samples.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
                         2.0 * samples * samples.transpose();
    d2 = d2.cwiseMax(0.0);
    Eigen::MatrixXd k = (-d2 / (2.0 * width * width)).array().exp();
    k = ((k + k.transpose()) / 2.0).eval();
    k.diagonal().setOnes();
    return k;
}

Eigen::MatrixXd center_gram(const Eigen::MatrixXd& gram) {
    const int n = static_cast<int>(gram.rows());
    const Eigen::VectorXd row_mean = gram.rowwise().mean();
    const double total_mean = gram.mean();
    Eigen::MatrixXd centered = gram;
    centered.colwise() -= row_mean;
    centered.rowwise() -= row_mean.transpose();
    centered.array() += total_mean;
    return centered;
}

Eigen::MatrixXd conditional_residual(const Eigen::MatrixXd& centered_gram, double ridge_epsilon) {
    if (ridge_epsilon <= 0.0) throw Error("ridge_epsilon must be > 0");
    const int n = static_cast<int>(centered_gram.rows());
    Eigen::MatrixXd shifted = centered_gram;
    shifted.diagonal().array() += ridge_epsilon;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(shifted);
    if (ldlt.info() != Eigen::Success)
        throw SingularMatrix("conditional residual factorization failed");
    Eigen::MatrixXd r = ridge_epsilon * ldlt.solve(Eigen::MatrixXd::Identity(n, n));
    return ((r + r.transpose()) / 2.0).eval();
}

double median_heuristic_width(const Eigen::MatrixXd& samples) {
    const int n = static_cast<int>(samples.rows());
    std::vector<double> dists;
    dists.reserve(static_cast<size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            dists.push_back((samples.row(i) - samples.row(j)).norm());
    if (dists.empty()) return 1.0;
    auto mid = dists.begin() + dists.size() / 2;
    std::nth_element(dists.begin(), mid, dists.end());
    const double median = *mid;
    return median > 0.0 ? median / std::sqrt(2.0) : 1.0;
}

CitResult kcit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
               const CitConfig& cfg) {
    const int n = static_cast<int>(x.rows());
    if (y.rows() != n || (z.cols() > 0 && z.rows() != n))
        throw SampleCountMismatch("kcit inputs disagree on n");
    if (n < 4) throw TooFewSamples("kcit needs n >= 4");
    if (n < 20) std::cerr << "kcit: n = " << n << " < 20, p-value unreliable\n";

    CitResult result;
    result.n_samples = n;
    result.method = cfg.pvalue_method;

    if (is_constant(x) || is_constant(y)) {
        result.degenerate = true;
        result.statistic = 0.0;
        result.p_value = 1.0;
        return result;
    }

    const bool conditional = z.cols() > 0;
    Eigen::MatrixXd xz(n, x.cols() + z.cols());
    xz << x, z;

    const Eigen::MatrixXd k_xz = center_gram(gaussian_gram(xz, pick_width(xz, cfg)));
    const Eigen::MatrixXd k_y = center_gram(gaussian_gram(y, pick_width(y, cfg)));

    Eigen::MatrixXd residual;  // R_z; identity in the unconditional case
    Eigen::MatrixXd a, b;
    if (conditional) {
        const Eigen::MatrixXd k_z = center_gram(gaussian_gram(z, pick_width(z, cfg)));
        residual = conditional_residual(k_z, cfg.ridge_epsilon);
        a = residual * k_xz * residual;
        b = residual * k_y * residual;
        a = ((a + a.transpose()) / 2.0).eval();
        b = ((b + b.transpose()) / 2.0).eval();
    } else {
        a = k_xz;
        b = k_y;
    }

    const double raw = sym_trace_product(a, b);  // tr(K_{xz|z} K_{y|z})
    result.statistic = std::max(raw, 0.0) / n;

    if (cfg.pvalue_method == PvalueMethod::gamma) {
        double mean, variance;
        if (conditional) {
            // null spectrum couples the x|z and y|z eigenfunctions sample-wise,
            // so the moments come from the Hadamard product, not trace products
            mean = a.diagonal().cwiseProduct(b.diagonal()).sum();
            variance = 2.0 * a.cwiseProduct(b).squaredNorm();
        } else {
            mean = a.trace() * b.trace() / n;
            variance = 2.0 * a.squaredNorm() * b.squaredNorm() / (double(n) * n);
        }
        result.p_value = gamma_tail_from_moments(raw, mean, variance);
    } else {
        std::mt19937_64 rng(cfg.seed);
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        int exceed = 0;
        // tr(A (R Kp R)) = tr((R A R) Kp), so the gemms hoist out of the loop.
        Eigen::MatrixXd a_weighted = a;
        if (conditional) {
            a_weighted = residual * a * residual;
            a_weighted = ((a_weighted + a_weighted.transpose()) / 2.0).eval();
        }
        Eigen::MatrixXd k_y_perm(n, n);
        for (int trial = 0; trial < cfg.n_permutations; ++trial) {
            std::shuffle(perm.begin(), perm.end(), rng);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) k_y_perm(i, j) = k_y(perm[i], perm[j]);
            if (sym_trace_product(a_weighted, k_y_perm) >= raw) ++exceed;
        }
        result.p_value = (1.0 + exceed) / (1.0 + cfg.n_permutations);
    }
    result.p_value = std::clamp(result.p_value, 0.0, 1.0);
    return result;
}

}  // namespace causaladj
