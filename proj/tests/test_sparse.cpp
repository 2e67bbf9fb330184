#include <gtest/gtest.h>
#include <algorithm>
#include <numeric>

#include <cmath>
#include <random>

#include "adaptpc/chaos.hpp"
#include "adaptpc/random.hpp"
#include "adaptpc/sparse.hpp"

using namespace adaptpc;

namespace {

struct Planted {
    Eigen::MatrixXd psi;
    Eigen::VectorXd truth;
    Eigen::VectorXd u;
};

Planted planted_instance(int k, std::uint64_t seed) {
    Rng rng(seed);
    const MultiIndexSet set(12, 3);
    Planted p;
    p.psi = measurement_matrix(gaussian_matrix(180, 12, rng), set);
    p.truth = Eigen::VectorXd::Zero(455);
    std::vector<int> pos(455);
    std::iota(pos.begin(), pos.end(), 0);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::normal_distribution<double> nd;
    for (int j = 0; j < k; ++j) p.truth(pos[j]) = (nd(rng) > 0 ? 1.0 : -1.0) * (1.0 + std::abs(nd(rng)));
    p.u = p.psi * p.truth;
    return p;
}

} // namespace

TEST(SoftThreshold, Examples) {
    EXPECT_EQ(soft_threshold(Eigen::Vector3d(3, -0.5, 0), 1.0), Eigen::Vector3d(2, 0, 0));
    EXPECT_EQ(soft_threshold(Eigen::VectorXd::Constant(1, -2.5), 1.5), Eigen::VectorXd::Constant(1, -1.0));
    const Eigen::Vector3d v(0.7, -1e-3, 4.0);
    EXPECT_TRUE(soft_threshold(v, 1e-14).isApprox(v, 1e-12));
    EXPECT_THROW(soft_threshold(v, 0.0), ArgumentError);
}

TEST(ResidualBall, FeasiblePointUnchanged) {
    BpdnProblem p{Eigen::Matrix2d::Identity(), Eigen::Vector2d(2, 0), 1.0};
    SvdCache svd(p.matrix);
    const Eigen::Vector2d c(1.5, 0.3);
    EXPECT_EQ(project_residual_ball(c, p, svd), c);
}

TEST(ResidualBall, UnitBallAroundU) {
    BpdnProblem p{Eigen::Matrix2d::Identity(), Eigen::Vector2d(2, 0), 1.0};
    SvdCache svd(p.matrix);
    const auto c = project_residual_ball(Eigen::Vector2d(0, 0), p, svd);
    EXPECT_NEAR(c(0), 1.0, 1e-10);
    EXPECT_NEAR(c(1), 0.0, 1e-12);
}

TEST(ResidualBall, ZeroEpsilonSquareSystem) {
    Eigen::Matrix3d a;
    a << 2, 1, 0, 1, 3, 1, 0, 1, 4;
    const Eigen::Vector3d u(1, -2, 0.5);
    BpdnProblem p{a, u, 0.0};
    SvdCache svd(a);
    const auto c = project_residual_ball(Eigen::Vector3d(5, 5, 5), p, svd);
    EXPECT_TRUE(c.isApprox(a.lu().solve(u), 1e-12));
}

TEST(ResidualBall, ProjectionIsNearestFeasiblePoint) {
    Rng rng(17);
    const Eigen::MatrixXd a = gaussian_matrix(8, 20, rng);
    const Eigen::VectorXd u = gaussian_matrix(8, 1, rng);
    BpdnProblem p{a, u, 0.3 * u.norm()};
    SvdCache svd(a);
    const Eigen::VectorXd c = 3.0 * gaussian_matrix(20, 1, rng);
    const auto x = project_residual_ball(c, p, svd);
    EXPECT_NEAR(residual_norm(a, x, u), p.epsilon, 1e-9 * p.epsilon);
    // optimality: c - x is a positive multiple of the residual gradient A^T (A x - u)
    const Eigen::VectorXd g = a.transpose() * (a * x - u);
    const Eigen::VectorXd d = c - x;
    EXPECT_GT(d.dot(g), 0.0);
    EXPECT_NEAR(std::abs(d.normalized().dot(g.normalized())), 1.0, 1e-9);
}

TEST(ResidualBall, RankDeficientInfeasible) {
    Eigen::MatrixXd a(3, 2);
    a << 1, 0, 0, 1, 0, 0;
    BpdnProblem p{a, Eigen::Vector3d(1, 1, 2), 1.0};
    SvdCache svd(a);
    try {
        project_residual_ball(Eigen::Vector2d(0, 0), p, svd);
        FAIL() << "expected InfeasibleError";
    } catch (const InfeasibleError& e) {
        EXPECT_NEAR(e.min_residual(), 2.0, 1e-12);
    }
}

TEST(SolveBpdn, ToyProblemMatchesGridOracle) {
    BpdnProblem p{Eigen::Matrix2d::Identity(), Eigen::Vector2d(3, -0.5), 1.0};
    const auto r = solve_bpdn(p);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.coefficients(0), 2.1339745962155616, 1e-6);
    EXPECT_NEAR(r.coefficients(1), 0.0, 1e-6);
    EXPECT_LE(residual_norm(p.matrix, r.coefficients, p.observations), 1.0 * (1 + 1e-6));
}

TEST(SolveBpdn, HugeEpsilonGivesZero) {
    BpdnProblem p{Eigen::Matrix2d::Identity(), Eigen::Vector2d(3, -0.5), 10.0};
    const auto r = solve_bpdn(p);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.coefficients, Eigen::Vector2d::Zero());
}

TEST(SolveBpdn, InfeasibleEpsilonNamesFloor) {
    Eigen::MatrixXd a(3, 1);
    a << 1, 0, 0;
    BpdnProblem p{a, Eigen::Vector3d(1, 3, 4), 1.0};
    try {
        solve_bpdn(p);
        FAIL() << "expected InfeasibleError";
    } catch (const InfeasibleError& e) {
        EXPECT_NEAR(e.min_residual(), 5.0, 1e-12);
        EXPECT_NE(std::string(e.what()).find("minimal achievable residual"), std::string::npos);
    }
}

TEST(SolveBpdn, RejectsMalformedInput) {
    EXPECT_THROW(solve_bpdn(BpdnProblem{Eigen::Matrix2d::Identity(), Eigen::Vector3d::Zero(), 1.0}), ArgumentError);
    EXPECT_THROW(solve_bpdn(BpdnProblem{Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero(), -1.0}), ArgumentError);
    DrConfig bad;
    bad.lambda = 2.5;
    EXPECT_THROW(solve_bpdn(BpdnProblem{Eigen::Matrix2d::Identity(), Eigen::Vector2d::Ones(), 0.1}, bad), ArgumentError);
}

TEST(SolveBpdn, IterationCapReturnsFeasibleBest) {
    const auto p = planted_instance(5, 3);
    DrConfig cfg;
    cfg.max_iterations = 5;
    BpdnProblem prob{p.psi, p.u, 1e-3 * p.u.norm()};
    const auto r = solve_bpdn(prob, cfg);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iterations, 5);
    EXPECT_LE(residual_norm(p.psi, r.coefficients, p.u), prob.epsilon * (1 + 1e-6));
}

TEST(SolveBpdn, PlantedRecoveryNoiseless) {
    for (int k : {1, 5, 8}) {
        const auto p = planted_instance(k, 100 + k);
        BpdnProblem prob{p.psi, p.u, 1e-6 * p.u.norm()};
        const auto r = solve_bpdn(prob);
        EXPECT_LE(residual_norm(p.psi, r.coefficients, p.u), prob.epsilon * (1 + 1e-6));
        EXPECT_LT((r.coefficients - p.truth).norm() / p.truth.norm(), 1e-4) << "k=" << k << " iters=" << r.iterations;
    }
}

TEST(SolveBpdn, PlantedRecoveryWithNoise) {
    auto p = planted_instance(5, 42);
    Rng rng(9);
    const Eigen::VectorXd noise = 1e-3 * gaussian_matrix(180, 1, rng);
    const Eigen::VectorXd u = p.u + noise;
    BpdnProblem prob{p.psi, u, noise.norm()};
    const auto r = solve_bpdn(prob);
    EXPECT_LT((r.coefficients - p.truth).norm() / p.truth.norm(), 1e-2);
    for (int j = 0; j < 455; ++j)
        if (p.truth(j) != 0.0) EXPECT_GT(std::abs(r.coefficients(j)), 0.5);
}

TEST(SolveBpdn, FixedPointResidualNonIncreasing) {
    const auto p = planted_instance(6, 8);
    DrConfig cfg;
    cfg.record_trace = true;
    cfg.max_iterations = 600;
    const auto r = solve_bpdn(BpdnProblem{p.psi, p.u, 1e-2 * p.u.norm()}, cfg);
    ASSERT_GT(r.fixed_point_residuals.size(), 20u);
    for (std::size_t k = 11; k < r.fixed_point_residuals.size(); ++k)
        EXPECT_LE(r.fixed_point_residuals[k], r.fixed_point_residuals[k - 1] + 1e-12) << "k=" << k;
}

TEST(SolveBpdn, L1NormMonotoneInEpsilon) {
    const auto p = planted_instance(8, 21);
    Rng rng(4);
    const Eigen::VectorXd u = p.u + 0.05 * gaussian_matrix(180, 1, rng);
    const SvdCache svd(p.psi);
    double prev = std::numeric_limits<double>::infinity();
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(455);
    for (double f : {0.01, 0.02, 0.05, 0.1, 0.2, 0.5}) {
        const auto r = solve_bpdn(BpdnProblem{p.psi, u, f * u.norm()}, DrConfig{}, warm, svd);
        const double l1 = r.coefficients.lpNorm<1>();
        EXPECT_LE(l1, prev + 1e-8) << "eps factor " << f;
        prev = l1;
        warm = r.coefficients;
    }
}

TEST(SolveBpdn, FeasibleAtReturnAcrossInstances) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        Rng rng(s);
        const Eigen::MatrixXd a = gaussian_matrix(30, 60, rng);
        const Eigen::VectorXd u = gaussian_matrix(30, 1, rng);
        BpdnProblem prob{a, u, 0.2 * u.norm()};
        const auto r = solve_bpdn(prob);
        if (r.converged) {
            EXPECT_LE(residual_norm(a, r.coefficients, u), prob.epsilon * (1 + 1e-6));
        }
    }
}

TEST(SolveBpdn, OlsLimit) {
    Rng rng(77);
    const Eigen::MatrixXd a = gaussian_matrix(60, 12, rng);
    const Eigen::VectorXd u = gaussian_matrix(60, 1, rng);
    const auto c_ols = solve_ols(a, u);
    BpdnProblem prob{a, u, residual_norm(a, c_ols, u) + 1e-9};
    const auto r = solve_bpdn(prob);
    EXPECT_LE(r.coefficients.lpNorm<1>(), c_ols.lpNorm<1>() + 1e-6);
}

TEST(SolveOls, IdentityAndDuplicateColumns) {
    const Eigen::Vector3d u(1, -2, 3);
    EXPECT_TRUE(solve_ols(Eigen::Matrix3d::Identity(), u).isApprox(u, 1e-14));
    Eigen::MatrixXd a(3, 2);
    a << 1, 1, 2, 2, 3, 3;
    const auto c = solve_ols(a, Eigen::Vector3d(2, 4, 6));
    EXPECT_NEAR(c(0), 1.0, 1e-12);
    EXPECT_NEAR(c(1), 1.0, 1e-12);
}

TEST(SolveOls, RecoversGenerator) {
    Rng rng(5);
    const Eigen::MatrixXd a = gaussian_matrix(50, 10, rng);
    const Eigen::VectorXd truth = gaussian_matrix(10, 1, rng);
    EXPECT_LT((solve_ols(a, a * truth) - truth).norm(), 1e-10);
    EXPECT_THROW(solve_ols(a, Eigen::VectorXd::Zero(3)), ArgumentError);
}

TEST(ResidualNorm, Basics) {
    Eigen::Matrix2d a = Eigen::Matrix2d::Identity();
    const Eigen::Vector2d u(3, 4);
    EXPECT_DOUBLE_EQ(residual_norm(a, Eigen::Vector2d::Zero(), u), 5.0);
    EXPECT_DOUBLE_EQ(residual_norm(a, u, u), 0.0);
    EXPECT_THROW(residual_norm(a, Eigen::Vector3d::Zero(), u), ArgumentError);
}
