#pragma once

// Compressive sensing with built-in basis adaptation: alternate an l1 (or
// least-squares) coefficient fit at fixed W with a rotation fit at fixed c,
// and grow the reduced dimension one frozen row at a time.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adaptpc/chaos.hpp"
#include "adaptpc/crossval.hpp"
#include "adaptpc/dataset.hpp"
#include "adaptpc/error.hpp"
#include "adaptpc/random.hpp"
#include "adaptpc/sparse.hpp"
#include "adaptpc/stiefel.hpp"

namespace adaptpc {

struct AdaptConfig {
    std::optional<double> epsilon;      // nullopt: select by cross-validation at every d'
    int max_outer_iterations = 30;
    double tolerance_l1 = 1e-4;         // relative change of ||c||_1
    double tolerance_l2 = 1e-6;         // change of J(W), relative to ||u||^2
    int restarts = 10;
    std::uint64_t seed = 0;
    double ols_factor = 2.0;            // least squares once N >= ols_factor * basis size
    bool rotate = true;                 // false: coefficient fits only (W stays at W0)
    DrConfig dr;
    RotationOptConfig rotation;
    int crossval_grid_size = 12;
    double crossval_train_fraction = 0.8;
};

struct AdaptedExpansion {
    ProjectionMatrix projection;   // d0 x d
    ChaosExpansion expansion;      // over the order-Q set in d0 variables
    int order = 0;
    double fit_epsilon = 0.0;      // 0 when the coefficient step used least squares
    bool used_ols = false;
    double l2_residual = 0.0;      // ||u - Psi_W c|| on the data the fit used
    int outer_iterations = 0;
    bool converged = false;
    int restart = 0;               // which restart produced this result
    std::vector<double> objective_trace;  // J(W) after each outer iteration
    std::optional<CrossValReport> crossval;

    int reduced_dimension() const noexcept { return projection.rows(); }
    int input_dimension() const noexcept { return projection.cols(); }
};

inline double evaluate_adapted(const AdaptedExpansion& a, const Eigen::Ref<const Eigen::VectorXd>& xi) {
    if (xi.size() != a.input_dimension())
        throw ArgumentError("evaluate_adapted: point has dimension " + std::to_string(xi.size()) + ", expected " +
                            std::to_string(a.input_dimension()));
    return evaluate_expansion(a.expansion, a.projection.w * xi);
}

inline Eigen::VectorXd evaluate_adapted_rows(const AdaptedExpansion& a, const Eigen::Ref<const Eigen::MatrixXd>& xi) {
    return rotated_measurement_matrix(a.projection.w, xi, a.expansion.index_set) * a.expansion.coefficients;
}

/// Share of the expansion variance carried by basis terms that depend on
/// reduced variable `var` (0-based).
inline double variance_share_involving(const ChaosExpansion& e, int var) {
    const double total = expansion_moments(e).variance;
    if (total <= 0.0) return 0.0;
    double part = 0.0;
    for (std::size_t j = 1; j < e.index_set.size(); ++j)
        if (e.index_set[j][static_cast<std::size_t>(var)] > 0) part += e.coefficients(static_cast<Eigen::Index>(j)) * e.coefficients(static_cast<Eigen::Index>(j));
    return part / total;
}

namespace detail {

inline bool prefer_ols(const Dataset& data, const MultiIndexSet& set, const AdaptConfig& config) {
    return static_cast<double>(data.size()) >= config.ols_factor * static_cast<double>(set.size());
}

inline CrossValReport crossval_at(const Dataset& data, const Eigen::MatrixXd& w, const MultiIndexSet& set, const AdaptConfig& config,
                                  std::uint64_t seed) {
    CrossValOptions opt;
    opt.train_fraction = config.crossval_train_fraction;
    opt.seed = seed;
    opt.dr = config.dr;
    const Eigen::Index n_train = default_train_size(data.size(), opt.train_fraction);
    // grid scale follows the training outputs of the same split select_epsilon will draw
    const auto split = split_dataset(data, n_train, seed);
    opt.grid = log_grid(split.train.outputs.norm(), config.crossval_grid_size);
    return select_epsilon(data, w, set, opt);
}

} // namespace detail

/// One run of the alternating scheme from (W0, c0) at a resolved tolerance.
/// epsilon is ignored when the system is overdetermined enough for least squares.
/// Returns the visited (W, c) pair with the smallest misfit J(W).
inline AdaptedExpansion adapt_fixed_dim(const Dataset& data, int order, const ProjectionMatrix& w0, const std::optional<Eigen::VectorXd>& c0,
                                        double epsilon, const AdaptConfig& config) {
    const int d0 = w0.rows();
    if (d0 < 1 || d0 > data.dimension())
        throw ArgumentError("adapt_fixed_dim: reduced dimension " + std::to_string(d0) + " outside [1, " + std::to_string(data.dimension()) +
                            "]");
    if (w0.cols() != data.dimension()) throw ArgumentError("adapt_fixed_dim: W0 column count does not match the data dimension");
    if (w0.orthonormality_error() > 1e-8) throw ArgumentError("adapt_fixed_dim: W0 rows are not orthonormal");
    if (config.max_outer_iterations < 1) throw ArgumentError("adapt_fixed_dim: max_outer_iterations must be >= 1");

    MultiIndexSet set(d0, order);
    const bool use_ols = detail::prefer_ols(data, set, config);
    if (c0 && static_cast<std::size_t>(c0->size()) != set.size())
        throw ArgumentError("adapt_fixed_dim: initial coefficients have length " + std::to_string(c0->size()) + ", expected " +
                            std::to_string(set.size()));
    const double u2 = data.outputs.squaredNorm();
    const double l2_tol = config.tolerance_l2 * std::max(u2, std::numeric_limits<double>::min());

    ProjectionMatrix w = w0;
    Eigen::VectorXd c = c0 ? *c0 : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(set.size()));

    ProjectionMatrix best_w = w;
    Eigen::VectorXd best_c = c;
    double best_j = std::numeric_limits<double>::infinity();
    auto consider = [&](const ProjectionMatrix& pw, const Eigen::VectorXd& pc, double j) {
        if (j < best_j) {
            best_j = j;
            best_w = pw;
            best_c = pc;
        }
    };

    AdaptedExpansion out;
    std::optional<double> prev_l1, prev_j;
    int it = 0;
    for (it = 1; it <= config.max_outer_iterations; ++it) {
        const Eigen::MatrixXd psi = rotated_measurement_matrix(w.w, data.inputs, set);
        if (use_ols) {
            c = solve_ols(psi, data.outputs);
        } else {
            BpdnProblem problem{psi, data.outputs, epsilon};
            try {
                c = solve_bpdn(problem, config.dr, c).coefficients;
            } catch (const InfeasibleError&) {
                if (it == 1) throw;
                warn("adapt_fixed_dim: tolerance became infeasible at outer iteration " + std::to_string(it) + "; stopping");
                --it;
                break;
            }
        }
        double j = (data.outputs - psi * c).squaredNorm();
        consider(w, c, j);

        if (!config.rotate) {
            // W never moves, so a second coefficient fit would repeat the first
            out.objective_trace.push_back(j);
            out.converged = true;
            break;
        }
        const auto rot = optimize_rotation(w, c, data, set, config.rotation);
        w = rot.projection;
        j = rot.objective_trace.back();
        consider(w, c, j);
        out.objective_trace.push_back(j);

        const double l1 = c.lpNorm<1>();
        if (prev_l1 && prev_j) {
            const double rel_l1 = std::abs(l1 - *prev_l1) / std::max(*prev_l1, std::numeric_limits<double>::min());
            if (rel_l1 < config.tolerance_l1 && std::abs(j - *prev_j) < l2_tol) {
                out.converged = true;
                break;
            }
        }
        prev_l1 = l1;
        prev_j = j;
    }

    canonicalize_signs(best_w, best_c, set);
    out.outer_iterations = std::min(it, config.max_outer_iterations);
    out.projection = std::move(best_w);
    out.order = order;
    out.used_ols = use_ols;
    out.fit_epsilon = use_ols ? 0.0 : epsilon;
    out.l2_residual = residual_norm(rotated_measurement_matrix(out.projection.w, data.inputs, set), best_c, data.outputs);
    out.expansion = ChaosExpansion(std::move(set), std::move(best_c));
    return out;
}

/// Restarted fit for one reduced dimension: frozen rows come from `frozen`
/// (may be empty), one or more new random rows are optimized.
inline AdaptedExpansion adapt_with_restarts(const Dataset& data, int order, int new_rows, const std::optional<Eigen::MatrixXd>& frozen,
                                            const std::optional<Eigen::VectorXd>& c_prefix, const AdaptConfig& config,
                                            std::uint64_t stream) {
    const int d = static_cast<int>(data.dimension());
    const int f = frozen ? static_cast<int>(frozen->rows()) : 0;
    const MultiIndexSet set(f + new_rows, order);
    const bool use_ols = detail::prefer_ols(data, set, config);
    const int restarts = std::max(1, config.restarts);

    std::optional<double> epsilon = config.epsilon;
    std::optional<CrossValReport> cv;
    std::optional<AdaptedExpansion> best;
    for (int r = 0; r < restarts; ++r) {
        const auto seed = derive_seed(config.seed, stream * 100003ULL + static_cast<std::uint64_t>(r));
        ProjectionMatrix w0 = random_stiefel(d, new_rows, frozen, seed);

        std::optional<Eigen::VectorXd> c0;
        if (c_prefix && f > 0) {
            // warm start: previous coefficients embedded with zeros on the new variables
            const MultiIndexSet prev(f, order);
            Eigen::VectorXd padded = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(set.size()));
            for (std::size_t j = 0; j < prev.size(); ++j) {
                auto e = prev[j].entries;
                e.resize(static_cast<std::size_t>(f + new_rows), 0);
                padded(set.find(e)) = (*c_prefix)(static_cast<Eigen::Index>(j));
            }
            c0 = std::move(padded);
        } else {
            c0 = solve_ols(rotated_measurement_matrix(w0.w, data.inputs, set), data.outputs);
        }

        if (!use_ols && !epsilon) {
            cv = detail::crossval_at(data, w0.w, set, config, derive_seed(config.seed, stream));
            epsilon = cv->selected_epsilon;
        }
        double eps = epsilon.value_or(0.0);
        if (cv) {
            // the scaled validation residual can undercut the least-squares floor of
            // the full system at this start; fit at the floor instead of failing
            const double floor = SvdCache(rotated_measurement_matrix(w0.w, data.inputs, set)).residual_floor(data.outputs);
            if (eps < floor) {
                warn("adapt: cross-validated tolerance " + std::to_string(eps) + " is below the least-squares floor " +
                     std::to_string(floor) + " at restart " + std::to_string(r) + "; using the floor");
                eps = floor * (1.0 + 1e-9);
            }
        }
        AdaptedExpansion fit = adapt_fixed_dim(data, order, w0, c0, eps, config);
        fit.restart = r;
        if (!best || fit.l2_residual < best->l2_residual) best = std::move(fit);
    }
    best->crossval = cv;
    return *best;
}

/// Successive row estimation: results for d' = 1 .. max_dim, where the first
/// d'-1 rows of result d' are the rows of result d'-1.
inline std::vector<AdaptedExpansion> adapt_successive(const Dataset& data, int max_dim, int order, const AdaptConfig& config) {
    if (max_dim < 1 || max_dim > data.dimension())
        throw ArgumentError("adapt_successive: max dimension " + std::to_string(max_dim) + " outside [1, " +
                            std::to_string(data.dimension()) + "]");
    std::vector<AdaptedExpansion> results;
    results.reserve(static_cast<std::size_t>(max_dim));
    for (int dp = 1; dp <= max_dim; ++dp) {
        std::optional<Eigen::MatrixXd> frozen;
        std::optional<Eigen::VectorXd> prefix;
        if (dp > 1) {
            frozen = results.back().projection.w;
            prefix = results.back().expansion.coefficients;
        }
        results.push_back(adapt_with_restarts(data, order, 1, frozen, prefix, config, static_cast<std::uint64_t>(dp)));
        if (dp > 1 && !results.back().used_ols && !results[results.size() - 2].used_ols &&
            results.back().fit_epsilon > results[results.size() - 2].fit_epsilon)
            warn("adapt_successive: selected tolerance grew from d'=" + std::to_string(dp - 1) + " to d'=" + std::to_string(dp));
    }
    return results;
}

struct CarryoverRow {
    MultiIndex index;       // in the larger set
    double previous = 0.0;  // coefficient in the smaller expansion (0 for new terms)
    double current = 0.0;
    bool new_term = false;  // involves the added variable
};

struct CarryoverPair {
    int from_dim = 0;
    int to_dim = 0;
    std::vector<CarryoverRow> rows;
    double shared_difference_norm = 0.0;  // over terms present in both
    double new_terms_norm = 0.0;
    double current_norm = 0.0;
};

/// Aligns each consecutive pair of expansions (smaller set zero-padded in the
/// new variable) and reports per-coefficient differences.
inline std::vector<CarryoverPair> coefficient_carryover_report(const std::vector<AdaptedExpansion>& results) {
    std::vector<CarryoverPair> table;
    for (std::size_t k = 1; k < results.size(); ++k) {
        const auto& a = results[k - 1].expansion;
        const auto& b = results[k].expansion;
        if (a.index_set.order() != b.index_set.order())
            throw ArgumentError("coefficient_carryover_report: expansions have different orders");
        if (b.dimension() < a.dimension()) throw ArgumentError("coefficient_carryover_report: results must be ordered by dimension");
        CarryoverPair pair;
        pair.from_dim = a.dimension();
        pair.to_dim = b.dimension();
        std::vector<double> prev(b.index_set.size(), 0.0);
        std::vector<bool> shared(b.index_set.size(), false);
        for (std::size_t j = 0; j < a.index_set.size(); ++j) {
            auto e = a.index_set[j].entries;
            e.resize(static_cast<std::size_t>(b.dimension()), 0);
            const int pos = b.index_set.find(e);
            prev[static_cast<std::size_t>(pos)] = a.coefficients(static_cast<Eigen::Index>(j));
            shared[static_cast<std::size_t>(pos)] = true;
        }
        double diff2 = 0.0, new2 = 0.0;
        for (std::size_t j = 0; j < b.index_set.size(); ++j) {
            CarryoverRow row{b.index_set[j], prev[j], b.coefficients(static_cast<Eigen::Index>(j)), !shared[j]};
            if (shared[j]) diff2 += (row.current - row.previous) * (row.current - row.previous);
            else new2 += row.current * row.current;
            pair.rows.push_back(std::move(row));
        }
        pair.shared_difference_norm = std::sqrt(diff2);
        pair.new_terms_norm = std::sqrt(new2);
        pair.current_norm = b.coefficients.norm();
        table.push_back(std::move(pair));
    }
    return table;
}

struct MapDiagnostic {
    double tau = 0.0;
    double sigma = 0.0;
    double value = 0.0;   // misfit / (2 sigma^2) + tau ||c||_1
    double misfit = 0.0;  // ||u - Psi_W c||^2
    double l1 = 0.0;
};

/// Negative log-posterior (up to constants) under a Gaussian likelihood and a
/// Laplace prior on c. Diagnostic only.
inline MapDiagnostic map_objective(const Eigen::Ref<const Eigen::VectorXd>& c, const Eigen::Ref<const Eigen::MatrixXd>& w,
                                   const Dataset& data, const MultiIndexSet& set, double tau, double sigma) {
    if (!(tau > 0.0) || !(sigma > 0.0)) throw ArgumentError("map_objective: tau and sigma must be > 0");
    MapDiagnostic m;
    m.tau = tau;
    m.sigma = sigma;
    m.misfit = l2_objective(w, c, data, set);
    m.l1 = c.lpNorm<1>();
    m.value = m.misfit / (2.0 * sigma * sigma) + tau * m.l1;
    return m;
}

} // namespace adaptpc
