#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "adaptpc/chaos.hpp"

using namespace adaptpc;

namespace {

// Gauss-Hermite nodes/weights for the standard normal measure (Golub-Welsch).
void gauss_hermite(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(double(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    nodes = es.eigenvalues();
    weights = es.eigenvectors().row(0).transpose().array().square();
}

} // namespace

TEST(CountBasis, KnownValues) {
    EXPECT_EQ(count_basis(12, 3), 455u);
    EXPECT_EQ(count_basis(11, 4), 1365u);
    EXPECT_EQ(count_basis(7, 0), 1u);
    EXPECT_EQ(count_basis(1, 5), 6u);
    EXPECT_EQ(count_basis(30, 30), 118264581564861424ull);
}

TEST(CountBasis, RejectsBadArguments) {
    EXPECT_THROW(count_basis(0, 2), ArgumentError);
    EXPECT_THROW(count_basis(3, -1), ArgumentError);
    EXPECT_THROW(count_basis(60, 60), ArgumentError);
}

TEST(MultiIndexSet, TwoDimOrderOne) {
    MultiIndexSet s(2, 1);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0].entries, (std::vector<int>{0, 0}));
    EXPECT_EQ(s[1].entries, (std::vector<int>{0, 1}));
    EXPECT_EQ(s[2].entries, (std::vector<int>{1, 0}));
}

TEST(MultiIndexSet, GradedLexOrderAndCardinality) {
    for (int d = 1; d <= 5; ++d)
        for (int q = 0; q <= 4; ++q) {
            MultiIndexSet s(d, q);
            ASSERT_EQ(s.size(), count_basis(d, q));
            EXPECT_EQ(s[0].degree(), 0);
            for (std::size_t j = 1; j < s.size(); ++j) {
                const auto& a = s[j - 1];
                const auto& b = s[j];
                ASSERT_TRUE(a.degree() < b.degree() || (a.degree() == b.degree() && a.entries < b.entries));
                ASSERT_LE(b.degree(), q);
            }
        }
}

TEST(MultiIndexSet, FindAndDecrement) {
    MultiIndexSet s(3, 3);
    for (std::size_t j = 0; j < s.size(); ++j) {
        EXPECT_EQ(s.find(s[j].entries), int(j));
        for (int i = 0; i < 3; ++i) {
            const int k = s.decrement(j, i);
            if (s[j][i] == 0) {
                EXPECT_EQ(k, -1);
            } else {
                auto e = s[j].entries;
                --e[i];
                EXPECT_EQ(s[k].entries, e);
            }
        }
    }
    EXPECT_EQ(s.find({4, 0, 0}), -1);
}

TEST(MultiIndex, RejectsNegativeEntries) { EXPECT_THROW(MultiIndex({1, -1}), ArgumentError); }

TEST(Hermite, KnownValues) {
    EXPECT_DOUBLE_EQ(hermite_normalized(0, 3.7), 1.0);
    EXPECT_DOUBLE_EQ(hermite_normalized(1, -1.25), -1.25);
    EXPECT_NEAR(hermite_normalized(2, 2.0), 2.1213203435596424, 1e-15);
    EXPECT_NEAR(hermite_normalized(2, 0.0), -0.7071067811865475, 1e-15);
    // He_3(x) = x^3 - 3x
    EXPECT_NEAR(hermite_normalized(3, 1.5), (1.5 * 1.5 * 1.5 - 4.5) / std::sqrt(6.0), 1e-14);
}

TEST(Hermite, Orthonormal) {
    Eigen::VectorXd x, w;
    gauss_hermite(40, x, w);
    for (int m = 0; m <= 10; ++m)
        for (int n = 0; n <= 10; ++n) {
            double s = 0.0;
            for (int k = 0; k < x.size(); ++k) s += w(k) * hermite_normalized(m, x(k)) * hermite_normalized(n, x(k));
            EXPECT_NEAR(s, m == n ? 1.0 : 0.0, 1e-11) << m << "," << n;
        }
}

TEST(Hermite, TableMatchesScalar) {
    double t[8];
    hermite_table(7, 0.83, t);
    for (int n = 0; n <= 7; ++n) EXPECT_NEAR(t[n], hermite_normalized(n, 0.83), 1e-14);
}

TEST(PsiMulti, ProductOfUnivariate) {
    Eigen::Vector3d p(0.3, -1.1, 2.0);
    MultiIndex a({2, 0, 1});
    EXPECT_NEAR(psi_multi(a, p), hermite_normalized(2, 0.3) * hermite_normalized(1, 2.0), 1e-14);
    EXPECT_THROW(psi_multi(MultiIndex({1, 1}), p), ArgumentError);
}

TEST(MeasurementMatrix, EntriesAndErrors) {
    MultiIndexSet s(2, 2);
    Eigen::MatrixXd pts(3, 2);
    pts << 0.1, 0.2, -1.0, 0.5, 2.0, -0.7;
    const auto m = measurement_matrix(pts, s);
    ASSERT_EQ(m.rows(), 3);
    ASSERT_EQ(m.cols(), 6);
    for (int r = 0; r < 3; ++r) {
        EXPECT_DOUBLE_EQ(m(r, 0), 1.0);
        for (std::size_t j = 0; j < s.size(); ++j) EXPECT_NEAR(m(r, j), psi_multi(s[j], pts.row(r).transpose()), 1e-14);
    }
    EXPECT_THROW(measurement_matrix(Eigen::MatrixXd(0, 2), s), ArgumentError);
    EXPECT_THROW(measurement_matrix(Eigen::MatrixXd::Zero(3, 3), s), ArgumentError);
}

TEST(MeasurementMatrix, RotatedIdentityMatchesPlain) {
    MultiIndexSet s(3, 2);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd pts(10, 3);
    for (int i = 0; i < pts.size(); ++i) pts.data()[i] = nd(rng);
    EXPECT_TRUE(rotated_measurement_matrix(Eigen::Matrix3d::Identity(), pts, s).isApprox(measurement_matrix(pts, s), 1e-14));

    // a single row picking out coordinate 2
    Eigen::RowVector3d w(0, 0, 1);
    const auto m = rotated_measurement_matrix(w, pts, MultiIndexSet(1, 3));
    for (int r = 0; r < 10; ++r) EXPECT_NEAR(m(r, 3), hermite_normalized(3, pts(r, 2)), 1e-13);
    EXPECT_THROW(rotated_measurement_matrix(w, pts, s), ArgumentError);
}

TEST(Expansion, EvaluateAndMoments) {
    MultiIndexSet s(1, 3);
    Eigen::Vector4d c(3.0, 6.581793068761735, 4.2426406871192865, 2.54558441227157);
    ChaosExpansion e(s, c);
    const auto mom = expansion_moments(e);
    EXPECT_DOUBLE_EQ(mom.mean, 3.0);
    EXPECT_NEAR(mom.variance, 67.8, 1e-12);
    Eigen::VectorXd p(1);
    p << 0.4;
    double direct = 0.0;
    for (int n = 0; n < 4; ++n) direct += c(n) * hermite_normalized(n, 0.4);
    EXPECT_NEAR(evaluate_expansion(e, p), direct, 1e-13);
    EXPECT_THROW(ChaosExpansion(s, Eigen::VectorXd::Zero(3)), ArgumentError);
    EXPECT_THROW(evaluate_expansion(e, Eigen::Vector2d(0, 0)), ArgumentError);
}

TEST(Expansion, SampleMomentsMatch) {
    MultiIndexSet s(2, 2);
    Eigen::VectorXd c(6);
    c << 1.0, 0.5, -0.3, 0.2, 0.1, 0.4;
    ChaosExpansion e(s, c);
    const auto mom = expansion_moments(e);
    const auto x = sample_expansion(e, 200000, 11);
    const double mean = x.mean();
    const double var = (x.array() - mean).square().sum() / double(x.size() - 1);
    EXPECT_NEAR(mean, mom.mean, 5e-3);
    EXPECT_NEAR(var, mom.variance, 1e-2);
    EXPECT_EQ(sample_expansion(e, 1000, 3), sample_expansion(e, 1000, 3));
}

TEST(Expansion, ConstantOnlyHasZeroVariance) {
    MultiIndexSet s(4, 0);
    ChaosExpansion e(s, Eigen::VectorXd::Constant(1, 2.5));
    EXPECT_DOUBLE_EQ(expansion_moments(e).variance, 0.0);
    EXPECT_DOUBLE_EQ(evaluate_expansion(e, Eigen::Vector4d(1, 2, 3, 4)), 2.5);
}
