#pragma once

// Basis pursuit denoising
//
//     min ||c||_1   s.t.   ||u - Psi c||_2 <= eps
//
// by Douglas-Rachford splitting with f = ||.||_1 (prox: soft threshold) and
// g = indicator of the residual ball (prox: exact Euclidean projection,
// computed from a cached thin SVD of Psi plus a scalar root-find).

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adaptpc/error.hpp"

namespace adaptpc {

struct BpdnProblem {
    Eigen::MatrixXd matrix;        // N x P measurement matrix
    Eigen::VectorXd observations;  // length N
    double epsilon = 0.0;          // residual tolerance

    void validate() const {
        if (matrix.rows() < 1 || matrix.cols() < 1) throw ArgumentError("BpdnProblem: empty measurement matrix");
        if (observations.size() != matrix.rows())
            throw ArgumentError("BpdnProblem: " + std::to_string(observations.size()) + " observations for " +
                                std::to_string(matrix.rows()) + " matrix rows");
        if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ArgumentError("BpdnProblem: epsilon must be finite and >= 0");
    }
};

struct DrConfig {
    double gamma = 1.0;           // prox step
    double lambda = 1.0;          // relaxation, in (0, 2]
    int max_iterations = 5000;
    double stop_tolerance = 1e-9; // relative change of the DR iterate
    bool record_trace = false;    // keep ||z_{k+1} - z_k|| per iteration

    void validate() const {
        if (!(gamma > 0.0)) throw ArgumentError("DrConfig: gamma must be > 0");
        if (!(lambda > 0.0 && lambda <= 2.0)) throw ArgumentError("DrConfig: lambda must lie in (0, 2]");
        if (max_iterations < 1) throw ArgumentError("DrConfig: max_iterations must be >= 1");
        if (!(stop_tolerance > 0.0)) throw ArgumentError("DrConfig: stop_tolerance must be > 0");
    }
};

struct BpdnResult {
    Eigen::VectorXd coefficients;
    int iterations = 0;
    bool converged = false;
    std::vector<double> fixed_point_residuals;  // filled when DrConfig::record_trace
};

inline Eigen::VectorXd soft_threshold(const Eigen::Ref<const Eigen::VectorXd>& v, double t) {
    if (!(t > 0.0)) throw ArgumentError("soft_threshold: threshold must be > 0");
    return v.unaryExpr([t](double x) { return x > t ? x - t : (x < -t ? x + t : 0.0); });
}

/// Thin SVD of a measurement matrix, computed once and shared by every
/// projection onto a residual ball built on that matrix.
class SvdCache {
public:
    explicit SvdCache(const Eigen::Ref<const Eigen::MatrixXd>& matrix) : rows_(matrix.rows()), cols_(matrix.cols()) {
        if (matrix.size() == 0) throw ArgumentError("SvdCache: empty matrix");
        if (!matrix.allFinite()) throw NumericalError("SvdCache: matrix has non-finite entries");
        Eigen::BDCSVD<Eigen::MatrixXd> svd(matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (svd.info() != Eigen::Success) throw NumericalError("SvdCache: SVD failed to converge");
        const Eigen::VectorXd& s = svd.singularValues();
        const double smax = s.size() > 0 ? s(0) : 0.0;
        const double tol = smax * static_cast<double>(std::max(rows_, cols_)) * std::numeric_limits<double>::epsilon();
        Eigen::Index r = 0;
        while (r < s.size() && s(r) > tol) ++r;
        rank_ = r;
        u_ = svd.matrixU().leftCols(r);
        v_ = svd.matrixV().leftCols(r);
        s_ = s.head(r);
    }

    Eigen::Index rows() const noexcept { return rows_; }
    Eigen::Index cols() const noexcept { return cols_; }
    Eigen::Index rank() const noexcept { return rank_; }
    const Eigen::MatrixXd& u() const noexcept { return u_; }
    const Eigen::MatrixXd& v() const noexcept { return v_; }
    const Eigen::VectorXd& singular_values() const noexcept { return s_; }

    /// Minimum-norm least-squares solution of matrix * c = rhs.
    Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& rhs) const {
        const Eigen::VectorXd b = u_.transpose() * rhs;
        return v_ * b.cwiseQuotient(s_);
    }

    /// Smallest achievable ||matrix * c - rhs||.
    double residual_floor(const Eigen::Ref<const Eigen::VectorXd>& rhs) const {
        return (rhs - u_ * (u_.transpose() * rhs)).norm();
    }

private:
    Eigen::Index rows_, cols_, rank_ = 0;
    Eigen::MatrixXd u_, v_;
    Eigen::VectorXd s_;
};

inline double residual_norm(const Eigen::Ref<const Eigen::MatrixXd>& matrix, const Eigen::Ref<const Eigen::VectorXd>& c,
                            const Eigen::Ref<const Eigen::VectorXd>& observations) {
    if (matrix.cols() != c.size() || matrix.rows() != observations.size())
        throw ArgumentError("residual_norm: shape mismatch (matrix " + std::to_string(matrix.rows()) + "x" +
                            std::to_string(matrix.cols()) + ", c " + std::to_string(c.size()) + ", u " +
                            std::to_string(observations.size()) + ")");
    return (observations - matrix * c).norm();
}

/// Euclidean projection onto { c : ||Psi c - u|| <= eps } for fixed (Psi, u, eps).
///
/// Inside the row space of Psi the projection has the closed form
///   a'_i = a_i - s_i t_i / (nu + s_i^2),   t_i = s_i a_i - b_i,  b = U^T u,
/// where nu = 1/mu > 0 is the inverse Lagrange multiplier. The residual norm is
/// increasing in nu, so nu is found by safeguarded Newton on that scalar equation.
class ResidualBallProjector {
public:
    ResidualBallProjector(const SvdCache& svd, const Eigen::Ref<const Eigen::VectorXd>& observations, double epsilon)
        : svd_(&svd), epsilon_(epsilon) {
        if (observations.size() != svd.rows()) throw ArgumentError("ResidualBallProjector: observation length mismatch");
        b_ = svd.u().transpose() * observations;
        floor_ = svd.residual_floor(observations);
    }

    double floor() const noexcept { return floor_; }
    double epsilon() const noexcept { return epsilon_; }

    Eigen::VectorXd operator()(const Eigen::Ref<const Eigen::VectorXd>& c) const {
        const auto& s = svd_->singular_values();
        const Eigen::VectorXd a = svd_->v().transpose() * c;
        const Eigen::VectorXd t = s.cwiseProduct(a) - b_;
        const double range_res2 = t.squaredNorm();
        const double eps2 = epsilon_ * epsilon_;
        if (range_res2 + floor_ * floor_ <= eps2) return c;

        const double target2 = eps2 - floor_ * floor_;
        // Nothing (or numerically nothing) left to spend inside the range: hit the
        // least-squares affine set exactly (the nu -> 0 limit).
        if (target2 <= 1e-24 * std::max(1.0, b_.squaredNorm())) {
            if (epsilon_ + 1e-12 * std::max(1.0, b_.norm()) < floor_)
                throw InfeasibleError("residual ball is empty: epsilon " + std::to_string(epsilon_) +
                                          " below minimal residual " + std::to_string(floor_),
                                      floor_);
            return c - svd_->v() * t.cwiseQuotient(s);
        }
        const double target = std::sqrt(target2);

        const Eigen::ArrayXd s2 = s.array().square();
        const Eigen::ArrayXd t2 = t.array().square();
        auto h = [&](double nu) { return std::sqrt((t2 * (nu / (nu + s2)).square()).sum()); };
        auto dh = [&](double nu, double hv) {
            if (hv <= 0.0) return std::sqrt((t2 / s2.square()).sum());
            return (t2 * nu * s2 / (nu + s2).cube()).sum() / hv;
        };

        double lo = 0.0;
        double nu = target / std::max(dh(0.0, 0.0), std::numeric_limits<double>::min());
        double hi = nu;
        int guard = 0;
        while (h(hi) < target) {
            lo = hi;
            hi *= 2.0;
            if (++guard > 2000) throw NumericalError("ResidualBallProjector: failed to bracket the multiplier");
        }
        nu = std::clamp(nu, lo, hi);
        bool ok = false;
        for (int it = 0; it < 200; ++it) {
            const double hv = h(nu);
            const double total = std::sqrt(hv * hv + floor_ * floor_);
            if (std::abs(total - epsilon_) <= 1e-10 * epsilon_ * 0.5) {
                ok = true;
                break;
            }
            if (hv < target) lo = nu; else hi = nu;
            const double slope = dh(nu, hv);
            double next = slope > 0.0 ? nu - (hv - target) / slope : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (hi - lo <= 1e-15 * hi) {
                nu = next;
                ok = true;
                break;
            }
            nu = next;
        }
        if (!ok) throw NumericalError("ResidualBallProjector: multiplier root-find did not converge in 200 iterations");
        const Eigen::VectorXd delta = (s.array() * t.array() / (nu + s2)).matrix();
        return c - svd_->v() * delta;
    }

private:
    const SvdCache* svd_;
    double epsilon_;
    Eigen::VectorXd b_;
    double floor_ = 0.0;
};

inline Eigen::VectorXd project_residual_ball(const Eigen::Ref<const Eigen::VectorXd>& c, const BpdnProblem& problem,
                                             const SvdCache& svd) {
    problem.validate();
    if (svd.rows() != problem.matrix.rows() || svd.cols() != problem.matrix.cols())
        throw ArgumentError("project_residual_ball: SVD cache does not match the problem matrix");
    return ResidualBallProjector(svd, problem.observations, problem.epsilon)(c);
}

/// Douglas-Rachford for basis pursuit denoising. c0 seeds the DR iterate
/// (warm start). The returned coefficients always lie in the residual ball.
inline BpdnResult solve_bpdn(const BpdnProblem& problem, const DrConfig& config, const Eigen::Ref<const Eigen::VectorXd>& c0,
                             const SvdCache& svd) {
    problem.validate();
    config.validate();
    if (c0.size() != problem.matrix.cols())
        throw ArgumentError("solve_bpdn: initial vector has length " + std::to_string(c0.size()) + ", expected " +
                            std::to_string(problem.matrix.cols()));
    ResidualBallProjector project(svd, problem.observations, problem.epsilon);
    const double slack = 1e-12 * std::max(1.0, problem.observations.norm());
    if (problem.epsilon + slack < project.floor())
        throw InfeasibleError("solve_bpdn: epsilon " + std::to_string(problem.epsilon) +
                                  " is infeasible; minimal achievable residual is " + std::to_string(project.floor()),
                              project.floor());

    BpdnResult result;
    Eigen::VectorXd z = c0;
    Eigen::VectorXd x = project(z);
    Eigen::VectorXd best = x;
    double best_l1 = x.lpNorm<1>();
    for (int k = 1; k <= config.max_iterations; ++k) {
        const Eigen::VectorXd y = soft_threshold(2.0 * x - z, config.gamma);
        const Eigen::VectorXd step = config.lambda * (y - x);
        z += step;
        const double change = step.norm();
        if (config.record_trace) result.fixed_point_residuals.push_back(change);
        x = project(z);
        result.iterations = k;
        const double l1 = x.lpNorm<1>();
        if (l1 < best_l1) {
            best_l1 = l1;
            best = x;
        }
        if (change <= config.stop_tolerance * std::max(z.norm(), std::numeric_limits<double>::min())) {
            result.converged = true;
            break;
        }
    }
    result.coefficients = result.converged ? x : best;
    return result;
}

inline BpdnResult solve_bpdn(const BpdnProblem& problem, const DrConfig& config, const Eigen::Ref<const Eigen::VectorXd>& c0) {
    problem.validate();
    const SvdCache svd(problem.matrix);
    return solve_bpdn(problem, config, c0, svd);
}

inline BpdnResult solve_bpdn(const BpdnProblem& problem, const DrConfig& config = {}) {
    return solve_bpdn(problem, config, Eigen::VectorXd::Zero(problem.matrix.cols()));
}

/// Minimum-norm least-squares fit via the SVD pseudo-inverse.
inline Eigen::VectorXd solve_ols(const Eigen::Ref<const Eigen::MatrixXd>& matrix, const Eigen::Ref<const Eigen::VectorXd>& observations) {
    if (observations.size() != matrix.rows())
        throw ArgumentError("solve_ols: " + std::to_string(observations.size()) + " observations for " +
                            std::to_string(matrix.rows()) + " rows");
    return SvdCache(matrix).solve(observations);
}

} // namespace adaptpc
