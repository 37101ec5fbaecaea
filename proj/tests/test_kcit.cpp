#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "causaladj/kcit.hpp"

using namespace causaladj;

namespace {

Eigen::MatrixXd randn(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = unit(rng);
    return m;
}

Eigen::MatrixXd empty_z(int n) { return Eigen::MatrixXd(n, 0); }

}  // namespace

TEST_CASE("gaussian_gram closed forms") {
    SUBCASE("identical rows give the all-ones matrix") {
        Eigen::MatrixXd x = Eigen::MatrixXd::Constant(4, 2, 3.5);
        const Eigen::MatrixXd k = gaussian_gram(x, 0.7);
        CHECK((k.array() - 1.0).abs().maxCoeff() < 1e-12);
    }
    SUBCASE("distance sqrt(2)*width maps to exp(-1)") {
        const double width = 1.3;
        Eigen::MatrixXd x(2, 1);
        x << 0.0, std::sqrt(2.0) * width;
        const Eigen::MatrixXd k = gaussian_gram(x, width);
        CHECK(k(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
        CHECK(k(0, 0) == 1.0);
    }
    SUBCASE("random input is symmetric PSD with unit diagonal") {
        std::mt19937_64 rng(1);
        const Eigen::MatrixXd k = gaussian_gram(randn(5, 2, rng), 0.8);
        CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK((k.diagonal().array() - 1.0).abs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
    SUBCASE("non-finite input rejected") {
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 1);
        x(1, 0) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(gaussian_gram(x, 1.0), NonFiniteInput);
    }
}

TEST_CASE("center_gram zeroes row and column sums") {
    SUBCASE("constant kernel centers to zero") {
        const Eigen::MatrixXd c = center_gram(Eigen::MatrixXd::Ones(6, 6));
        CHECK(c.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("idempotent on centered input") {
        std::mt19937_64 rng(2);
        Eigen::MatrixXd k = randn(8, 8, rng);
        k = ((k + k.transpose()) / 2.0).eval();
        const Eigen::MatrixXd once = center_gram(k);
        const Eigen::MatrixXd twice = center_gram(once);
        CHECK((twice - once).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("row sums vanish for random symmetric input") {
        std::mt19937_64 rng(3);
        Eigen::MatrixXd k = randn(10, 10, rng);
        k = ((k + k.transpose()) / 2.0).eval();
        const Eigen::MatrixXd c = center_gram(k);
        CHECK(c.rowwise().sum().cwiseAbs().maxCoeff() < 1e-9);
        CHECK(c.colwise().sum().cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("conditional_residual spectral behavior") {
    SUBCASE("zero matrix maps to identity") {
        const Eigen::MatrixXd r = conditional_residual(Eigen::MatrixXd::Zero(5, 5), 0.01);
        CHECK((r - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("eigenvalue lambda maps to eps/(lambda+eps)") {
        Eigen::VectorXd v = Eigen::VectorXd::Ones(4).normalized();
        const double lambda = 2.5, eps = 0.1;
        const Eigen::MatrixXd k = lambda * v * v.transpose();
        const Eigen::MatrixXd r = conditional_residual(k, eps);
        CHECK((r * v - (eps / (lambda + eps)) * v).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("residual identity R (K + eps I) = eps I") {
        std::mt19937_64 rng(4);
        const Eigen::MatrixXd g = randn(7, 7, rng);
        const Eigen::MatrixXd k = g * g.transpose();  // PSD
        const double eps = 0.01;
        const Eigen::MatrixXd r = conditional_residual(k, eps);
        Eigen::MatrixXd shifted = k;
        shifted.diagonal().array() += eps;
        CHECK((r * shifted - eps * Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-8);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
        CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-10);
    }
}

TEST_CASE("kcit basic contracts") {
    std::mt19937_64 rng(5);
    CitConfig cfg;
    cfg.width_rule = WidthRule::median_heuristic;

    SUBCASE("statistic nonnegative and invariant under joint row permutation") {
        const Eigen::MatrixXd x = randn(40, 1, rng);
        const Eigen::MatrixXd y = randn(40, 1, rng);
        const Eigen::MatrixXd z = randn(40, 1, rng);
        const CitResult base = kcit(x, y, z, cfg);
        CHECK(base.statistic >= -1e-12);

        std::vector<int> perm(40);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Eigen::MatrixXd xp(40, 1), yp(40, 1), zp(40, 1);
        for (int i = 0; i < 40; ++i) {
            xp.row(i) = x.row(perm[i]);
            yp.row(i) = y.row(perm[i]);
            zp.row(i) = z.row(perm[i]);
        }
        const CitResult permuted = kcit(xp, yp, zp, cfg);
        CHECK(permuted.statistic == doctest::Approx(base.statistic).epsilon(1e-10));
    }
    SUBCASE("constant input degenerates to p = 1") {
        const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(30, 1, 2.0);
        const Eigen::MatrixXd y = randn(30, 1, rng);
        const CitResult r = kcit(x, y, empty_z(30), cfg);
        CHECK(r.degenerate);
        CHECK(r.statistic == 0.0);
        CHECK(r.p_value == 1.0);
    }
    SUBCASE("sample count mismatch rejected") {
        CHECK_THROWS_AS(kcit(randn(30, 1, rng), randn(29, 1, rng), empty_z(30), cfg),
                        SampleCountMismatch);
    }
}

TEST_CASE("kcit detects strong dependence and accepts independence given z") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> unit(0.0, 1.0);
    CitConfig cfg;
    cfg.width_rule = WidthRule::median_heuristic;
    const int n = 100;
    int unconditional_rejects = 0;
    int conditional_accepts = 0;
    const int trials = 40;
    for (int trial = 0; trial < trials; ++trial) {
        Eigen::MatrixXd x(n, 1), y(n, 1), z(n, 1);
        for (int i = 0; i < n; ++i) {
            z(i, 0) = unit(rng);
            x(i, 0) = z(i, 0) + 0.2 * unit(rng);
            y(i, 0) = z(i, 0) + 0.2 * unit(rng);
        }
        if (kcit(x, y, empty_z(n), cfg).p_value < 0.05) ++unconditional_rejects;
        if (kcit(x, y, z, cfg).p_value > 0.05) ++conditional_accepts;
    }
    CHECK(unconditional_rejects >= trials * 9 / 10);
    CHECK(conditional_accepts >= trials * 8 / 10);
}

TEST_CASE("permutation p-values are approximately uniform under the null") {
    std::mt19937_64 rng(7);
    CitConfig cfg;
    cfg.width_rule = WidthRule::median_heuristic;
    cfg.pvalue_method = PvalueMethod::permutation;
    cfg.n_permutations = 199;
    const int trials = 200;
    std::vector<double> pvalues;
    for (int trial = 0; trial < trials; ++trial) {
        cfg.seed = trial;
        const Eigen::MatrixXd x = randn(40, 1, rng);
        const Eigen::MatrixXd y = randn(40, 1, rng);
        pvalues.push_back(kcit(x, y, empty_z(40), cfg).p_value);
    }
    std::sort(pvalues.begin(), pvalues.end());
    double ks = 0.0;
    for (size_t i = 0; i < pvalues.size(); ++i) {
        const double ecdf_hi = (i + 1.0) / pvalues.size();
        const double ecdf_lo = i / double(pvalues.size());
        ks = std::max({ks, std::abs(ecdf_hi - pvalues[i]), std::abs(pvalues[i] - ecdf_lo)});
    }
    CHECK(ks < 0.1);
}
