#pragma once

// Least-squares misfit J(W) = ||u - Psi_W c||^2 over row-orthonormal W,
// its analytic gradient, and a projected-gradient optimizer that keeps a
// prefix of rows frozen.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adaptpc/chaos.hpp"
#include "adaptpc/dataset.hpp"
#include "adaptpc/error.hpp"
#include "adaptpc/random.hpp"

namespace adaptpc {

/// d0 x d matrix with orthonormal rows; the first fixed_rows rows are frozen.
struct ProjectionMatrix {
    Eigen::MatrixXd w;
    int fixed_rows = 0;

    ProjectionMatrix() = default;
    explicit ProjectionMatrix(Eigen::MatrixXd m, int fixed = 0) : w(std::move(m)), fixed_rows(fixed) {
        if (fixed_rows < 0 || fixed_rows > w.rows()) throw ArgumentError("ProjectionMatrix: fixed_rows out of range");
    }

    static ProjectionMatrix identity(int d) { return ProjectionMatrix(Eigen::MatrixXd::Identity(d, d)); }

    int rows() const noexcept { return static_cast<int>(w.rows()); }
    int cols() const noexcept { return static_cast<int>(w.cols()); }
    Eigen::MatrixXd frozen_block() const { return w.topRows(fixed_rows); }

    /// ||W W^T - I||_F
    double orthonormality_error() const {
        return (w * w.transpose() - Eigen::MatrixXd::Identity(w.rows(), w.rows())).norm();
    }
};

namespace detail {

inline void check_shapes(const Eigen::Ref<const Eigen::MatrixXd>& w, const Eigen::Ref<const Eigen::VectorXd>& c, const Dataset& data,
                         const MultiIndexSet& set, const char* who) {
    if (w.cols() != data.dimension() || w.rows() != set.dimension() || static_cast<std::size_t>(c.size()) != set.size())
        throw ArgumentError(std::string(who) + ": shape mismatch (W " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                            ", data dimension " + std::to_string(data.dimension()) + ", index set dimension " +
                            std::to_string(set.dimension()) + " size " + std::to_string(set.size()) + ", c " +
                            std::to_string(c.size()) + ")");
}

} // namespace detail

inline double l2_objective(const Eigen::Ref<const Eigen::MatrixXd>& w, const Eigen::Ref<const Eigen::VectorXd>& c, const Dataset& data,
                           const MultiIndexSet& set) {
    detail::check_shapes(w, c, data, set, "l2_objective");
    return (data.outputs - rotated_measurement_matrix(w, data.inputs, set) * c).squaredNorm();
}

/// dJ/dW_ij = -2 sum_k r_k sum_beta c_beta sqrt(beta_i) psi_{beta - e_i}(eta_k) xi_kj,
/// with r = u - Psi_W c and eta_k = W xi_k. psi_{beta - e_i} is read from the
/// measurement matrix through the set's decrement table.
inline Eigen::MatrixXd l2_gradient(const Eigen::Ref<const Eigen::MatrixXd>& w, const Eigen::Ref<const Eigen::VectorXd>& c,
                                   const Dataset& data, const MultiIndexSet& set) {
    detail::check_shapes(w, c, data, set, "l2_gradient");
    const Eigen::MatrixXd psi = rotated_measurement_matrix(w, data.inputs, set);
    const Eigen::VectorXd r = data.outputs - psi * c;
    const int d0 = set.dimension();
    // dpsi(k, i) = d(Psi_W c)_k / d eta_i
    Eigen::MatrixXd dpsi = Eigen::MatrixXd::Zero(psi.rows(), d0);
    for (std::size_t j = 0; j < set.size(); ++j) {
        const double cj = c(static_cast<Eigen::Index>(j));
        if (cj == 0.0) continue;
        for (int i = 0; i < d0; ++i) {
            const int lower = set.decrement(j, i);
            if (lower < 0) continue;
            dpsi.col(i) += (cj * std::sqrt(static_cast<double>(set[j][static_cast<std::size_t>(i)]))) * psi.col(lower);
        }
    }
    return -2.0 * (dpsi.array().colwise() * r.array()).matrix().transpose() * data.inputs;
}

namespace detail {

/// Orthonormalize rows [f, m) of w against rows [0, f) and each other by two
/// modified Gram-Schmidt sweeps. Rows [0, f) are left untouched.
inline void orthonormalize_free_rows(Eigen::MatrixXd& w, int f) {
    for (Eigen::Index r = f; r < w.rows(); ++r) {
        const double original = w.row(r).norm();
        if (!(original > 0.0) || !std::isfinite(original))
            throw NumericalError("retract: free row " + std::to_string(r) + " is zero or non-finite; re-randomize the initial guess");
        for (int sweep = 0; sweep < 2; ++sweep) {
            for (Eigen::Index p = 0; p < r; ++p) w.row(r) -= w.row(r).dot(w.row(p)) * w.row(p);
            const double nrm = w.row(r).norm();
            if (nrm <= 1e-10 * original)
                throw NumericalError("retract: free row " + std::to_string(r) +
                                     " collapsed into the span of previous rows; re-randomize the initial guess");
            w.row(r) /= nrm;
        }
    }
}

inline void apply_sign_convention(Eigen::MatrixXd& w, int f, std::vector<bool>* flipped = nullptr) {
    if (flipped) flipped->assign(static_cast<std::size_t>(w.rows()), false);
    for (Eigen::Index r = f; r < w.rows(); ++r) {
        Eigen::Index k;
        w.row(r).cwiseAbs().maxCoeff(&k);
        if (w(r, k) < 0.0) {
            w.row(r) *= -1.0;
            if (flipped) (*flipped)[static_cast<std::size_t>(r)] = true;
        }
    }
}

} // namespace detail

/// Maps an arbitrary d0 x d matrix onto the Stiefel set while keeping the first
/// f rows equal to frozen. Free rows get the sign convention "largest-magnitude
/// entry non-negative".
inline ProjectionMatrix retract(const Eigen::Ref<const Eigen::MatrixXd>& m, int fixed_rows,
                                const Eigen::Ref<const Eigen::MatrixXd>& frozen) {
    if (fixed_rows < 0 || fixed_rows > m.rows()) throw ArgumentError("retract: fixed_rows out of range");
    if (frozen.rows() != fixed_rows || (fixed_rows > 0 && frozen.cols() != m.cols()))
        throw ArgumentError("retract: frozen block shape does not match fixed_rows");
    if (m.rows() > m.cols()) throw ArgumentError("retract: more rows than columns cannot be orthonormal");
    Eigen::MatrixXd w = m;
    if (fixed_rows > 0) w.topRows(fixed_rows) = frozen;
    detail::orthonormalize_free_rows(w, fixed_rows);
    detail::apply_sign_convention(w, fixed_rows);
    return ProjectionMatrix(std::move(w), fixed_rows);
}

inline ProjectionMatrix retract(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    return retract(m, 0, Eigen::MatrixXd(0, m.cols()));
}

/// Flip the sign of free rows whose largest-magnitude entry is negative and
/// compensate in c (c_beta *= (-1)^beta_i), so Psi_W c is unchanged.
inline void canonicalize_signs(ProjectionMatrix& p, Eigen::VectorXd& c, const MultiIndexSet& set) {
    std::vector<bool> flipped;
    detail::apply_sign_convention(p.w, p.fixed_rows, &flipped);
    for (std::size_t j = 0; j < set.size(); ++j) {
        int parity = 0;
        for (std::size_t i = 0; i < flipped.size(); ++i)
            if (flipped[i]) parity += set[j][i];
        if (parity % 2 == 1) c(static_cast<Eigen::Index>(j)) = -c(static_cast<Eigen::Index>(j));
    }
}

/// new_rows Gaussian rows orthonormalized against frozen (may be empty) and each other.
inline ProjectionMatrix random_stiefel(int d, int new_rows, const std::optional<Eigen::MatrixXd>& frozen, std::uint64_t seed) {
    const int f = frozen ? static_cast<int>(frozen->rows()) : 0;
    if (d < 1 || new_rows < 0 || f + new_rows > d)
        throw ArgumentError("random_stiefel: need frozen rows + new rows <= d (got " + std::to_string(f) + " + " +
                            std::to_string(new_rows) + " > " + std::to_string(d) + ")");
    if (frozen && frozen->cols() != d) throw ArgumentError("random_stiefel: frozen block has wrong column count");
    Rng rng(seed);
    for (int attempt = 0; attempt < 10; ++attempt) {
        Eigen::MatrixXd m(f + new_rows, d);
        if (f > 0) m.topRows(f) = *frozen;
        m.bottomRows(new_rows) = gaussian_matrix(new_rows, d, rng);
        try {
            return retract(m, f, f > 0 ? *frozen : Eigen::MatrixXd(0, d));
        } catch (const NumericalError&) {
        }
    }
    throw NumericalError("random_stiefel: rank collapse in 10 consecutive draws");
}

struct RotationOptConfig {
    int max_iterations = 300;
    double gradient_tolerance = 1e-8;   // on the Frobenius norm of the projected gradient
    double objective_tolerance = 1e-13; // stop when an accepted step lowers J by less than this, relatively
    double initial_step = 0.5;          // trial displacement ||dW||_F of the first line search
    double max_step = 1.0;
    double shrink = 0.5;
    double sufficient_decrease = 1e-4;
    int max_shrinks = 50;
    int restarts = 10;
    std::uint64_t seed = 0;
};

struct RotationResult {
    ProjectionMatrix projection;
    std::vector<double> objective_trace;  // J after every accepted step, starting with J(W0)
    int iterations = 0;
    bool converged = false;
    bool stalled = false;
    double gradient_norm = 0.0;
};

/// Projected gradient descent with Armijo backtracking. Only rows past
/// w0.fixed_rows move; the frozen rows are copied bit for bit.
inline RotationResult optimize_rotation(const ProjectionMatrix& w0, const Eigen::Ref<const Eigen::VectorXd>& c, const Dataset& data,
                                        const MultiIndexSet& set, const RotationOptConfig& config = {}) {
    detail::check_shapes(w0.w, c, data, set, "optimize_rotation");
    const int f = w0.fixed_rows;
    const Eigen::Index free = w0.w.rows() - f;
    RotationResult result;
    result.projection = w0;
    double j_cur = l2_objective(w0.w, c, data, set);
    result.objective_trace.push_back(j_cur);
    if (free == 0) {
        result.converged = true;
        return result;
    }
    const Eigen::MatrixXd frozen = w0.frozen_block();
    Eigen::MatrixXd w = w0.w;
    double step_len = config.initial_step;

    for (int it = 0; it < config.max_iterations; ++it) {
        const Eigen::MatrixXd grad = l2_gradient(w, c, data, set);
        const auto rows = w.bottomRows(free);
        Eigen::MatrixXd g = grad.bottomRows(free);
        if (f > 0) g -= (g * frozen.transpose()) * frozen;
        const Eigen::MatrixXd sym = 0.5 * (g * rows.transpose() + rows * g.transpose());
        g -= sym * rows;
        const double gnorm = g.norm();
        result.gradient_norm = gnorm;
        if (!(gnorm > config.gradient_tolerance)) {
            result.converged = true;
            break;
        }

        double t = step_len / gnorm;
        bool accepted = false;
        Eigen::MatrixXd trial;
        double j_trial = 0.0;
        for (int s = 0; s < config.max_shrinks; ++s) {
            trial = w;
            trial.bottomRows(free) -= t * g;
            bool ok = true;
            try {
                detail::orthonormalize_free_rows(trial, f);
            } catch (const NumericalError&) {
                ok = false;
            }
            if (ok) {
                j_trial = l2_objective(trial, c, data, set);
                if (j_trial <= j_cur - config.sufficient_decrease * t * gnorm * gnorm) {
                    accepted = true;
                    break;
                }
            }
            t *= config.shrink;
        }
        result.iterations = it + 1;
        if (!accepted) {
            result.stalled = true;
            break;
        }
        const double decrease = j_cur - j_trial;
        w = trial;
        j_cur = j_trial;
        result.objective_trace.push_back(j_cur);
        step_len = std::min(config.max_step, 2.0 * t * gnorm);
        if (decrease <= config.objective_tolerance * std::max(j_cur, std::numeric_limits<double>::min())) {
            result.converged = true;
            break;
        }
    }
    if (f > 0) w.topRows(f) = w0.w.topRows(f);
    result.projection = ProjectionMatrix(std::move(w), f);
    return result;
}

} // namespace adaptpc
