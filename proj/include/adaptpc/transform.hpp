#pragma once

// Standard normal CDF / quantile and the map between uniformly distributed
// physical parameters and standard Gaussian germs.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adaptpc/error.hpp"

namespace adaptpc {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Acklam's rational approximation refined by one Halley step on erfc.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ArgumentError("normal_quantile: probability must lie in (0, 1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley step on Phi(x) - p, evaluated on the tail that keeps precision
    const double e = x < 0.0 ? normal_cdf(x) - p : (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

struct ParameterRange {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;

    ParameterRange() = default;
    ParameterRange(std::string n, double lo, double hi) : name(std::move(n)), lower(lo), upper(hi) {
        if (!(lower < upper)) throw ArgumentError("ParameterRange '" + name + "': lower bound must be below upper bound");
    }
};

inline constexpr double quantile_clip = 1e-12;
inline constexpr double gaussian_clip = 8.5;

/// Physical values -> germ: xi_i = Phi^{-1}((theta_i - lower_i) / (upper_i - lower_i)).
inline Eigen::VectorXd uniform_to_gaussian(const Eigen::Ref<const Eigen::VectorXd>& theta, const std::vector<ParameterRange>& ranges) {
    if (static_cast<std::size_t>(theta.size()) != ranges.size())
        throw ArgumentError("uniform_to_gaussian: " + std::to_string(theta.size()) + " values for " + std::to_string(ranges.size()) + " ranges");
    Eigen::VectorXd xi(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const auto& r = ranges[static_cast<std::size_t>(i)];
        if (!std::isfinite(theta(i)) || theta(i) < r.lower || theta(i) > r.upper)
            throw ArgumentError("uniform_to_gaussian: parameter '" + r.name + "' value " + std::to_string(theta(i)) + " outside [" +
                                std::to_string(r.lower) + ", " + std::to_string(r.upper) + "]");
        double z = (theta(i) - r.lower) / (r.upper - r.lower);
        if (z < quantile_clip || z > 1.0 - quantile_clip) {
            warn("uniform_to_gaussian: parameter '" + r.name + "' at the edge of its range; quantile clipped");
            z = std::clamp(z, quantile_clip, 1.0 - quantile_clip);
        }
        xi(i) = normal_quantile(z);
    }
    return xi;
}

/// Germ -> physical values: lower + (upper - lower) Phi(xi).
inline Eigen::VectorXd gaussian_to_uniform(const Eigen::Ref<const Eigen::VectorXd>& xi, const std::vector<ParameterRange>& ranges) {
    if (static_cast<std::size_t>(xi.size()) != ranges.size())
        throw ArgumentError("gaussian_to_uniform: " + std::to_string(xi.size()) + " values for " + std::to_string(ranges.size()) + " ranges");
    Eigen::VectorXd theta(xi.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        const auto& r = ranges[static_cast<std::size_t>(i)];
        double z = normal_cdf(xi(i));
        if (std::abs(xi(i)) > gaussian_clip) {
            warn("gaussian_to_uniform: |xi| > 8.5 for parameter '" + r.name + "'; quantile clipped");
            z = std::clamp(z, quantile_clip, 1.0 - quantile_clip);
        }
        theta(i) = r.lower + (r.upper - r.lower) * z;
    }
    return theta;
}

} // namespace adaptpc
