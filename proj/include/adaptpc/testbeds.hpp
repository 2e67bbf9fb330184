#pragma once

// Synthetic quantities of interest with known structure: a cubic ridge
// function and the spatial mean of a randomly forced viscous Burgers' equation.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "adaptpc/chaos.hpp"
#include "adaptpc/dataset.hpp"
#include "adaptpc/error.hpp"
#include "adaptpc/random.hpp"

namespace adaptpc {

struct RidgeSpec {
    int dimension = 12;
};

/// s + 0.25 s^2 + 0.025 s^3 with s = sum_i xi_i.
inline double ridge_qoi(const RidgeSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& xi) {
    if (xi.size() != spec.dimension)
        throw ArgumentError("ridge_qoi: point has dimension " + std::to_string(xi.size()) + ", expected " + std::to_string(spec.dimension));
    const double s = xi.sum();
    return s + 0.25 * s * s + 0.025 * s * s * s;
}

struct RidgeAdaptation {
    Eigen::RowVectorXd direction;  // d^{-1/2} (1, ..., 1)
    ChaosExpansion expansion;      // one variable, order 3
};

/// With eta = d^{-1/2} sum xi the ridge function is d^{1/2} eta + 0.25 d eta^2
/// + 0.025 d^{3/2} eta^3; using eta^2 = 1 + sqrt(2) psi_2 and
/// eta^3 = 3 psi_1 + sqrt(6) psi_3 gives the coefficients below.
inline RidgeAdaptation ridge_exact_adaptation(const RidgeSpec& spec) {
    if (spec.dimension < 1) throw ArgumentError("ridge_exact_adaptation: dimension must be >= 1");
    const double d = spec.dimension;
    const double rd = std::sqrt(d);
    Eigen::VectorXd c(4);
    c << 0.25 * d, rd + 0.075 * d * rd, 0.25 * d * std::numbers::sqrt2, 0.025 * d * rd * std::sqrt(6.0);
    return {Eigen::RowVectorXd::Constant(spec.dimension, 1.0 / rd), ChaosExpansion(MultiIndexSet(1, 3), c)};
}

enum class ForcingCase { Decaying, Uniform };  // (i) 1/sqrt(l), (ii) 1/M

struct BurgersSpec {
    int forcing_terms = 20;  // M
    double nu = 0.5;
    double sigma = 2.0;
    ForcingCase forcing = ForcingCase::Decaying;
    int nx = 128;  // intervals on [0, 2 pi]
    int nt = 128;  // steps on [0, 1]
    double newton_tolerance = 1e-10;
    int newton_max_iter = 25;
    // Overrides for verification problems; empty means the default data
    // v(x, 0) = 1 + sin 2x, v(0, t) = v(2 pi, t) = 1 + sin(pi t), no extra source.
    std::function<double(double)> initial;
    std::function<double(double)> boundary;
    std::function<double(double, double)> source;

    void validate() const {
        if (!(nu > 0.0)) throw ArgumentError("BurgersSpec: nu must be > 0");
        if (nx < 16 || nt < 16) throw ArgumentError("BurgersSpec: nx and nt must be >= 16");
        if (forcing_terms < 1) throw ArgumentError("BurgersSpec: need at least one forcing term");
        if (!(newton_tolerance > 0.0) || newton_max_iter < 1) throw ArgumentError("BurgersSpec: bad Newton settings");
    }
};

/// Space-time solution: row n holds v(x_i, t_n), i = 0..nx.
struct BurgersField {
    Eigen::MatrixXd v;
    double dx = 0.0;
    double dt = 0.0;
    int newton_iterations = 0;  // total over all steps
};

/// Backward Euler in time, central differences in space with the convective
/// term in conservative form d/dx(v^2 / 2); one Newton solve (tridiagonal
/// Jacobian) per step. Forcing is evaluated at the grid nodes and the new time level.
inline BurgersField burgers_solve(const BurgersSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& xi) {
    spec.validate();
    if (xi.size() != spec.forcing_terms)
        throw ArgumentError("burgers_solve: expected " + std::to_string(spec.forcing_terms) + " forcing variables, got " +
                            std::to_string(xi.size()));
    if (!xi.allFinite()) throw ArgumentError("burgers_solve: non-finite forcing variables");

    constexpr double two_pi = 2.0 * std::numbers::pi;
    const int nx = spec.nx;
    const int nt = spec.nt;
    const double h = two_pi / nx;
    const double dt = 1.0 / nt;
    const double nu = spec.nu;
    const int m = spec.forcing_terms;

    BurgersField field;
    field.dx = h;
    field.dt = dt;
    field.v.resize(nt + 1, nx + 1);
    Eigen::VectorXd x(nx + 1);
    for (int i = 0; i <= nx; ++i) x(i) = i * h;
    for (int i = 0; i <= nx; ++i) field.v(0, i) = spec.initial ? spec.initial(x(i)) : 1.0 + std::sin(2.0 * x(i));

    // forcing amplitudes sigma * xi_l * weight_l, and cos(2 l x_i) tabulated once
    Eigen::VectorXd amp(m);
    for (int l = 1; l <= m; ++l)
        amp(l - 1) = spec.sigma * xi(l - 1) * (spec.forcing == ForcingCase::Decaying ? 1.0 / std::sqrt(double(l)) : 1.0 / m);
    const bool forced = spec.sigma != 0.0 && amp.cwiseAbs().maxCoeff() > 0.0;
    Eigen::MatrixXd cos_x;
    if (forced) {
        cos_x.resize(m, nx + 1);
        for (int l = 1; l <= m; ++l)
            for (int i = 0; i <= nx; ++i) cos_x(l - 1, i) = std::cos(2.0 * l * x(i));
    }

    Eigen::VectorXd v(nx + 1), f(nx + 1), g(nx + 1), lower(nx + 1), diag(nx + 1), upper(nx + 1), rhs(nx + 1);
    const double c_conv = dt / (4.0 * h);
    const double c_diff = dt * nu / (h * h);
    for (int n = 1; n <= nt; ++n) {
        const double t = n * dt;
        f.setZero();
        if (forced) {
            Eigen::VectorXd w(m);
            for (int l = 1; l <= m; ++l) w(l - 1) = amp(l - 1) * std::cos(2.0 * l * std::numbers::pi * t);
            f = cos_x.transpose() * w;
        }
        if (spec.source)
            for (int i = 0; i <= nx; ++i) f(i) += spec.source(x(i), t);

        const auto old = field.v.row(n - 1).transpose();
        v = old;
        const double vb = spec.boundary ? spec.boundary(t) : 1.0 + std::sin(std::numbers::pi * t);
        v(0) = vb;
        v(nx) = vb;

        int iter = 0;
        for (;; ++iter) {
            double gmax = 0.0;
            for (int i = 1; i < nx; ++i) {
                g(i) = v(i) - old(i) + c_conv * (v(i + 1) * v(i + 1) - v(i - 1) * v(i - 1)) -
                       c_diff * (v(i + 1) - 2.0 * v(i) + v(i - 1)) - dt * f(i);
                gmax = std::max(gmax, std::abs(g(i)));
            }
            if (gmax < spec.newton_tolerance) break;
            if (iter >= spec.newton_max_iter || !std::isfinite(gmax))
                throw NumericalError("burgers_solve: Newton did not converge at time step " + std::to_string(n) + " (residual " +
                                     std::to_string(gmax) + ")");
            // Jacobian rows i = 1..nx-1, boundary values fixed
            for (int i = 1; i < nx; ++i) {
                lower(i) = -2.0 * c_conv * v(i - 1) - c_diff;
                diag(i) = 1.0 + 2.0 * c_diff;
                upper(i) = 2.0 * c_conv * v(i + 1) - c_diff;
                rhs(i) = -g(i);
            }
            // Thomas algorithm
            for (int i = 2; i < nx; ++i) {
                const double mlt = lower(i) / diag(i - 1);
                diag(i) -= mlt * upper(i - 1);
                rhs(i) -= mlt * rhs(i - 1);
            }
            rhs(nx - 1) /= diag(nx - 1);
            for (int i = nx - 2; i >= 1; --i) rhs(i) = (rhs(i) - upper(i) * rhs(i + 1)) / diag(i);
            for (int i = 1; i < nx; ++i) v(i) += rhs(i);
        }
        field.newton_iterations += iter;
        field.v.row(n) = v.transpose();
    }
    return field;
}

/// Trapezoidal mean over [0, 2 pi] of the final time slice.
inline double burgers_qoi(const BurgersSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& xi) {
    const auto field = burgers_solve(spec, xi);
    const auto last = field.v.row(field.v.rows() - 1);
    const Eigen::Index n = last.size() - 1;
    const double interior = last.segment(1, n - 1).sum();
    return field.dx * (0.5 * last(0) + interior + 0.5 * last(n)) / (2.0 * std::numbers::pi);
}

using TestbedSpec = std::variant<RidgeSpec, BurgersSpec>;

inline int testbed_dimension(const TestbedSpec& spec) {
    return std::visit([](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, RidgeSpec>) return s.dimension;
        else return s.forcing_terms;
    }, spec);
}

inline double testbed_qoi(const TestbedSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& xi) {
    return std::visit([&](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, RidgeSpec>) return ridge_qoi(s, xi);
        else return burgers_qoi(s, xi);
    }, spec);
}

/// n i.i.d. standard normal inputs (drawn row by row from the seeded stream)
/// with their testbed outputs.
inline Dataset generate_dataset(const TestbedSpec& spec, Eigen::Index n, std::uint64_t seed) {
    if (n < 1) throw ArgumentError("generate_dataset: n must be >= 1");
    Rng rng(seed);
    Dataset data(gaussian_matrix(n, testbed_dimension(spec), rng), Eigen::VectorXd(n));
    for (Eigen::Index k = 0; k < n; ++k) data.outputs(k) = testbed_qoi(spec, data.inputs.row(k).transpose());
    return data;
}

} // namespace adaptpc
