#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "adaptpc/error.hpp"

namespace adaptpc {

struct DensityCurve {
    std::vector<double> abscissae;
    std::vector<double> pdf_values;
    double bandwidth = 0.0;
    bool degenerate = false;  // zero-variance samples

    double integral() const {
        double s = 0.0;
        for (std::size_t k = 1; k < abscissae.size(); ++k)
            s += 0.5 * (pdf_values[k] + pdf_values[k - 1]) * (abscissae[k] - abscissae[k - 1]);
        return s;
    }
};

/// 1.06 * sigma_hat * n^{-1/5}
inline double silverman_bandwidth(const Eigen::Ref<const Eigen::VectorXd>& samples) {
    const double n = static_cast<double>(samples.size());
    const double mean = samples.mean();
    const double sd = std::sqrt((samples.array() - mean).square().sum() / std::max(1.0, n - 1.0));
    return 1.06 * sd * std::pow(n, -0.2);
}

/// Gaussian kernel density estimate on a uniform grid over [min - 3h, max + 3h].
/// bandwidth nullopt selects Silverman's rule.
inline DensityCurve kde_density(const Eigen::Ref<const Eigen::VectorXd>& samples, int grid_size = 512,
                                std::optional<double> bandwidth = std::nullopt) {
    if (samples.size() < 10) throw ArgumentError("kde_density: need at least 10 samples");
    if (grid_size < 2) throw ArgumentError("kde_density: grid_size must be >= 2");
    if (!samples.allFinite()) throw ArgumentError("kde_density: non-finite samples");
    if (bandwidth && !(*bandwidth > 0.0)) throw ArgumentError("kde_density: bandwidth must be > 0");

    DensityCurve curve;
    const double lo = samples.minCoeff();
    const double hi = samples.maxCoeff();
    double h = bandwidth ? *bandwidth : silverman_bandwidth(samples);
    if (!(h > 0.0)) {
        warn("kde_density: samples have zero variance; emitting a narrow delta-like curve");
        curve.degenerate = true;
        h = 1e-6 * std::max(1.0, std::abs(lo));
    }
    curve.bandwidth = h;

    const double a = lo - 3.0 * h;
    const double b = hi + 3.0 * h;
    curve.abscissae.resize(static_cast<std::size_t>(grid_size));
    curve.pdf_values.assign(static_cast<std::size_t>(grid_size), 0.0);
    for (int k = 0; k < grid_size; ++k) curve.abscissae[static_cast<std::size_t>(k)] = a + (b - a) * k / (grid_size - 1);

    // sorted samples let each grid point sum only kernels within 8 bandwidths
    std::vector<double> sorted(samples.data(), samples.data() + samples.size());
    std::sort(sorted.begin(), sorted.end());
    const double norm = 1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t k = 0; k < curve.abscissae.size(); ++k) {
        const double x = curve.abscissae[k];
        auto first = std::lower_bound(sorted.begin(), sorted.end(), x - 8.0 * h);
        auto last = std::upper_bound(first, sorted.end(), x + 8.0 * h);
        double s = 0.0;
        for (auto it = first; it != last; ++it) {
            const double z = (x - *it) / h;
            s += std::exp(-0.5 * z * z);
        }
        curve.pdf_values[k] = s * norm;
    }
    return curve;
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_distance(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
    if (a.size() == 0 || b.size() == 0) throw ArgumentError("ks_distance: empty sample");
    std::vector<double> x(a.data(), a.data() + a.size()), y(b.data(), b.data() + b.size());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double dmax = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        dmax = std::max(dmax, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return dmax;
}

} // namespace adaptpc
