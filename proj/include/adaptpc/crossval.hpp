#pragma once

// Selection of the BPDN residual tolerance from a single train/validation split.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "adaptpc/chaos.hpp"
#include "adaptpc/dataset.hpp"
#include "adaptpc/error.hpp"
#include "adaptpc/random.hpp"
#include "adaptpc/sparse.hpp"

namespace adaptpc {

struct DatasetSplit {
    Dataset train;
    Dataset valid;
    std::vector<Eigen::Index> train_rows;
    std::vector<Eigen::Index> valid_rows;
};

/// Random partition into n_train training rows and the rest; rows keep their
/// original relative order inside each part.
inline DatasetSplit split_dataset(const Dataset& data, Eigen::Index n_train, std::uint64_t seed) {
    const Eigen::Index n = data.size();
    if (n_train < 1 || n_train >= n)
        throw ArgumentError("split_dataset: n_train = " + std::to_string(n_train) + " must lie in [1, " + std::to_string(n - 1) + "]");
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Rng rng(seed);
    // Fisher-Yates with an explicit draw so the split is identical across standard libraries.
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(perm[i], perm[j]);
    }
    DatasetSplit out;
    out.train_rows.assign(perm.begin(), perm.begin() + n_train);
    out.valid_rows.assign(perm.begin() + n_train, perm.end());
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.valid_rows.begin(), out.valid_rows.end());
    out.train = data.subset(out.train_rows);
    out.valid = data.subset(out.valid_rows);
    return out;
}

/// Default training size: ceil(0.8 N), kept inside [1, N-1].
inline Eigen::Index default_train_size(Eigen::Index n, double fraction = 0.8) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ArgumentError("train fraction must lie in (0, 1)");
    if (n < 2) throw ArgumentError("need at least 2 data points to split");
    auto k = static_cast<Eigen::Index>(std::ceil(fraction * static_cast<double>(n)));
    return std::clamp<Eigen::Index>(k, 1, n - 1);
}

/// count values log-spaced over [lo_factor, hi_factor] * scale.
inline std::vector<double> log_grid(double scale, int count = 12, double lo_factor = 1e-4, double hi_factor = 1.0) {
    if (count < 1) throw ArgumentError("log_grid: count must be >= 1");
    if (!(scale > 0.0)) throw ArgumentError("log_grid: scale must be > 0");
    std::vector<double> g(static_cast<std::size_t>(count));
    const double a = std::log10(lo_factor), b = std::log10(hi_factor);
    for (int j = 0; j < count; ++j) {
        const double f = count == 1 ? b : a + (b - a) * j / (count - 1);
        g[static_cast<std::size_t>(j)] = scale * std::pow(10.0, f);
    }
    return g;
}

/// The returned tolerance: sqrt(N / N_tr) times the smallest validation residual.
inline double crossval_epsilon(Eigen::Index n, Eigen::Index n_train, double min_validation_error) {
    if (n_train < 1 || n_train > n) throw ArgumentError("crossval_epsilon: need 1 <= n_train <= n");
    return std::sqrt(static_cast<double>(n) / static_cast<double>(n_train)) * min_validation_error;
}

struct CrossValOptions {
    std::vector<double> grid;  // empty: log_grid(||u_train||)
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    DrConfig dr;
};

struct CrossValReport {
    std::vector<double> epsilon_grid;
    std::vector<double> validation_errors;  // NaN where the grid value was skipped
    std::vector<bool> skipped;              // infeasible for the training system
    double selected_epsilon = 0.0;          // sqrt(N / N_tr) * min validation error
    double argmin_grid_value = 0.0;         // training tolerance attaining the minimum
    double min_validation_error = 0.0;
    double training_floor = 0.0;            // least-squares residual of the training system
    std::uint64_t split_seed = 0;
    Eigen::Index n_train = 0;
    Eigen::Index n_valid = 0;
};

/// For each training tolerance on the grid: fit BPDN on the training rows,
/// measure the validation residual; return sqrt(N/N_tr) times the smallest one.
/// w is the d0 x d projection applied to inputs (pass identity for plain chaos).
inline CrossValReport select_epsilon(const Dataset& data, const Eigen::Ref<const Eigen::MatrixXd>& w, const MultiIndexSet& set,
                                     const CrossValOptions& options) {
    const Eigen::Index n = data.size();
    if (n < 2) throw ArgumentError("select_epsilon: need at least 2 data points");
    const Eigen::Index n_train = default_train_size(n, options.train_fraction);
    const auto split = split_dataset(data, n_train, options.seed);

    const Eigen::MatrixXd psi_tr = rotated_measurement_matrix(w, split.train.inputs, set);
    const Eigen::MatrixXd psi_v = rotated_measurement_matrix(w, split.valid.inputs, set);
    const SvdCache svd(psi_tr);

    CrossValReport report;
    report.epsilon_grid = options.grid.empty() ? log_grid(split.train.outputs.norm()) : options.grid;
    for (std::size_t j = 1; j < report.epsilon_grid.size(); ++j)
        if (!(report.epsilon_grid[j] > report.epsilon_grid[j - 1]))
            throw ArgumentError("select_epsilon: grid must be strictly increasing");
    if (report.epsilon_grid.empty() || !(report.epsilon_grid.front() > 0.0))
        throw ArgumentError("select_epsilon: grid must be non-empty and positive");
    report.split_seed = options.seed;
    report.n_train = n_train;
    report.n_valid = n - n_train;
    report.training_floor = svd.residual_floor(split.train.outputs);

    const std::size_t grid_size = report.epsilon_grid.size();
    report.validation_errors.assign(grid_size, std::numeric_limits<double>::quiet_NaN());
    report.skipped.assign(grid_size, false);
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(psi_tr.cols());
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < grid_size; ++j) {
        const double eps = report.epsilon_grid[j];
        BpdnProblem problem{psi_tr, split.train.outputs, eps};
        BpdnResult fit;
        try {
            fit = solve_bpdn(problem, options.dr, warm, svd);
        } catch (const InfeasibleError&) {
            report.skipped[j] = true;
            warn("crossval: training tolerance " + std::to_string(eps) + " below feasibility floor " +
                 std::to_string(report.training_floor) + "; skipped");
            continue;
        }
        warm = fit.coefficients;
        report.validation_errors[j] = residual_norm(psi_v, fit.coefficients, split.valid.outputs);
        if (!best || report.validation_errors[j] < report.validation_errors[*best]) best = j;
    }
    if (!best) throw InfeasibleError("select_epsilon: every grid value is infeasible for the training system", report.training_floor);
    report.min_validation_error = report.validation_errors[*best];
    report.argmin_grid_value = report.epsilon_grid[*best];
    report.selected_epsilon = crossval_epsilon(n, n_train, report.min_validation_error);
    return report;
}

} // namespace adaptpc
