#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "adaptpc/testbeds.hpp"

using namespace adaptpc;

namespace {

// v* = 1 + sin(2x) e^{-t}; source = v*_t + v* v*_x - nu v*_xx
BurgersSpec manufactured(int n) {
    BurgersSpec s;
    s.sigma = 0.0;
    s.nx = n;
    s.nt = n;
    s.initial = [](double x) { return 1.0 + std::sin(2.0 * x); };
    s.boundary = [](double) { return 1.0; };
    const double nu = s.nu;
    s.source = [nu](double x, double t) {
        const double e = std::exp(-t);
        const double v = 1.0 + std::sin(2.0 * x) * e;
        const double vx = 2.0 * std::cos(2.0 * x) * e;
        const double vxx = -4.0 * std::sin(2.0 * x) * e;
        return -std::sin(2.0 * x) * e + v * vx - nu * vxx;
    };
    return s;
}

double manufactured_error(int n) {
    const auto spec = manufactured(n);
    const auto field = burgers_solve(spec, Eigen::VectorXd::Zero(spec.forcing_terms));
    double err2 = 0.0;
    for (int k = 0; k <= spec.nt; ++k)
        for (int i = 0; i <= spec.nx; ++i) {
            const double x = i * field.dx, t = k * field.dt;
            const double e = field.v(k, i) - (1.0 + std::sin(2.0 * x) * std::exp(-t));
            err2 += e * e * field.dx * field.dt;
        }
    return std::sqrt(err2);
}

} // namespace

TEST(Ridge, QoiExamples) {
    const RidgeSpec spec;
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(12);
    EXPECT_EQ(ridge_qoi(spec, e1), 0.0);
    e1(0) = 1.0;
    EXPECT_NEAR(ridge_qoi(spec, e1), 1.275, 1e-15);
    EXPECT_NEAR(ridge_qoi(spec, -e1), -0.775, 1e-15);
    EXPECT_THROW(ridge_qoi(spec, Eigen::VectorXd::Zero(3)), ArgumentError);
}

TEST(Ridge, ExactAdaptationCoefficients) {
    const auto a = ridge_exact_adaptation(RidgeSpec{12});
    EXPECT_NEAR(a.expansion.coefficients(0), 3.0000000000000013, 1e-13);
    EXPECT_NEAR(a.expansion.coefficients(1), 6.581793068761735, 1e-13);
    EXPECT_NEAR(a.expansion.coefficients(2), 4.2426406871192865, 1e-13);
    EXPECT_NEAR(a.expansion.coefficients(3), 2.54558441227157, 1e-13);
    EXPECT_NEAR(expansion_moments(a.expansion).variance, 67.8, 1e-11);
    EXPECT_NEAR(a.direction.norm(), 1.0, 1e-15);

    const auto b = ridge_exact_adaptation(RidgeSpec{1});
    EXPECT_NEAR(b.expansion.coefficients(0), 0.25, 1e-15);
    EXPECT_NEAR(b.expansion.coefficients(1), 1.075, 1e-15);
    EXPECT_NEAR(b.expansion.coefficients(2), 0.35355339059327384, 1e-15);
    EXPECT_NEAR(b.expansion.coefficients(3), 0.0612372435695794, 1e-15);
}

TEST(Ridge, ExactAdaptationReproducesQoi) {
    for (int d : {1, 5, 12}) {
        const RidgeSpec spec{d};
        const auto a = ridge_exact_adaptation(spec);
        Rng rng(31 + d);
        const Eigen::MatrixXd xi = gaussian_matrix(1000, d, rng);
        double worst = 0.0;
        for (Eigen::Index k = 0; k < xi.rows(); ++k) {
            const Eigen::VectorXd p = xi.row(k).transpose();
            const Eigen::VectorXd eta = a.direction * p;
            worst = std::max(worst, std::abs(evaluate_expansion(a.expansion, eta) - ridge_qoi(spec, p)));
        }
        EXPECT_LT(worst, 1e-10) << "d=" << d;
    }
}

TEST(Ridge, MonteCarloMoments) {
    const RidgeSpec spec;
    const auto data = generate_dataset(spec, 1000000, 7);
    const auto& u = data.outputs;
    const double n = double(u.size());
    const double mean = u.mean();
    const Eigen::ArrayXd dev = u.array() - mean;
    const double var = dev.square().sum() / (n - 1);
    const double m4 = dev.pow(4).mean();
    EXPECT_LT(std::abs(mean - 3.0), 3.0 * std::sqrt(67.8 / n));
    EXPECT_LT(std::abs(var - 67.8), 3.0 * std::sqrt((m4 - var * var) / n));
}

TEST(Burgers, ZeroForcingIndependentOfXi) {
    BurgersSpec s;
    s.sigma = 0.0;
    s.nx = s.nt = 32;
    Rng rng(1);
    const Eigen::VectorXd a = gaussian_matrix(20, 1, rng), b = gaussian_matrix(20, 1, rng);
    EXPECT_EQ(burgers_solve(s, a).v, burgers_solve(s, b).v);
    EXPECT_EQ(burgers_qoi(s, a), burgers_qoi(s, b));
}

TEST(Burgers, ConstantStateIsExact) {
    BurgersSpec s;
    s.sigma = 0.0;
    s.nx = s.nt = 16;
    s.initial = [](double) { return 1.5; };
    s.boundary = [](double) { return 1.5; };
    const auto f = burgers_solve(s, Eigen::VectorXd::Zero(20));
    EXPECT_TRUE((f.v.array() == 1.5).all());
    EXPECT_EQ(f.newton_iterations, 0);
}

TEST(Burgers, BoundaryAndInitialData) {
    BurgersSpec s;
    s.nx = s.nt = 32;
    const auto f = burgers_solve(s, Eigen::VectorXd::Ones(20));
    for (int i = 0; i <= s.nx; ++i) EXPECT_DOUBLE_EQ(f.v(0, i), 1.0 + std::sin(2.0 * i * f.dx));
    for (int k = 1; k <= s.nt; ++k) {
        EXPECT_DOUBLE_EQ(f.v(k, 0), 1.0 + std::sin(std::numbers::pi * k * f.dt));
        EXPECT_DOUBLE_EQ(f.v(k, s.nx), f.v(k, 0));
    }
}

TEST(Burgers, ManufacturedSolutionFirstOrder) {
    const double e1 = manufactured_error(32);
    const double e2 = manufactured_error(64);
    const double e3 = manufactured_error(128);
    EXPECT_GE(std::log2(e1 / e2), 1.0);
    EXPECT_GE(std::log2(e2 / e3), 1.0);
    EXPECT_LT(e3, 1e-2);
}

TEST(Burgers, QoiSelfConvergence) {
    BurgersSpec s;
    s.forcing = ForcingCase::Decaying;
    Rng rng(12);
    const Eigen::VectorXd xi = gaussian_matrix(20, 1, rng);
    std::vector<double> q;
    for (int n : {125, 250, 500}) {
        s.nx = s.nt = n;
        q.push_back(burgers_qoi(s, xi));
    }
    EXPECT_LT(std::abs(q[2] - q[1]), std::abs(q[1] - q[0]));
}

TEST(Burgers, DeterministicAndFinite) {
    BurgersSpec s;
    s.nx = s.nt = 64;
    Rng rng(3);
    const Eigen::VectorXd xi = gaussian_matrix(20, 1, rng);
    const double a = burgers_qoi(s, xi), b = burgers_qoi(s, -xi);
    EXPECT_TRUE(std::isfinite(a));
    EXPECT_TRUE(std::isfinite(b));
    EXPECT_EQ(a, burgers_qoi(s, xi));
    s.forcing = ForcingCase::Uniform;
    EXPECT_TRUE(std::isfinite(burgers_qoi(s, xi)));
}

TEST(Burgers, Validation) {
    BurgersSpec s;
    s.nx = 8;
    EXPECT_THROW(burgers_solve(s, Eigen::VectorXd::Zero(20)), ArgumentError);
    s.nx = 32;
    s.nu = 0.0;
    EXPECT_THROW(burgers_solve(s, Eigen::VectorXd::Zero(20)), ArgumentError);
    s.nu = 0.5;
    EXPECT_THROW(burgers_solve(s, Eigen::VectorXd::Zero(5)), ArgumentError);
    Eigen::VectorXd bad = Eigen::VectorXd::Zero(20);
    bad(3) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(burgers_solve(s, bad), ArgumentError);
}

TEST(Burgers, NewtonFailureNamesStep) {
    BurgersSpec s;
    s.nx = s.nt = 16;
    s.newton_max_iter = 1;
    s.newton_tolerance = 1e-300;
    try {
        burgers_solve(s, Eigen::VectorXd::Ones(20));
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("time step 1"), std::string::npos);
    }
}

TEST(GenerateDataset, ShapesAndDeterminism) {
    const auto a = generate_dataset(RidgeSpec{}, 180, 1);
    EXPECT_EQ(a.size(), 180);
    EXPECT_EQ(a.dimension(), 12);
    const auto b = generate_dataset(RidgeSpec{}, 180, 1);
    EXPECT_EQ(a.inputs, b.inputs);
    EXPECT_EQ(a.outputs, b.outputs);
    EXPECT_NE(generate_dataset(RidgeSpec{}, 180, 2).inputs, a.inputs);

    BurgersSpec s;
    s.nx = s.nt = 32;
    const auto c = generate_dataset(s, 5, 3);
    EXPECT_EQ(c.dimension(), 20);
    EXPECT_EQ(c.outputs, generate_dataset(s, 5, 3).outputs);
    EXPECT_THROW(generate_dataset(RidgeSpec{}, 0, 1), ArgumentError);
}
