#pragma once

// Hermite chaos building blocks: multi-index sets, normalized probabilists'
// Hermite polynomials, measurement matrices and expansion statistics.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "adaptpc/error.hpp"
#include "adaptpc/random.hpp"

namespace adaptpc {

/// Per-dimension polynomial orders of one tensor-product basis function.
struct MultiIndex {
    std::vector<int> entries;

    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> e) : entries(std::move(e)) {
        for (int v : entries)
            if (v < 0) throw ArgumentError("multi-index entries must be non-negative");
    }

    std::size_t dimension() const noexcept { return entries.size(); }

    int degree() const noexcept {
        int s = 0;
        for (int v : entries) s += v;
        return s;
    }

    int operator[](std::size_t i) const { return entries[i]; }

    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
    friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
};

/// Number of multi-indices in d dimensions with total degree <= order,
/// i.e. binomial(d + order, order).
inline std::uint64_t count_basis(int dimension, int order) {
    if (dimension < 1) throw ArgumentError("count_basis: dimension must be >= 1");
    if (order < 0) throw ArgumentError("count_basis: order must be >= 0");
    // binomial(d+Q, k) for k = min(d, Q); each partial product is itself a binomial
    const int k = std::min(dimension, order);
    const int n = dimension + order;
    unsigned __int128 result = 1;
    for (int i = 1; i <= k; ++i) {
        result = result * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
        if (result > std::numeric_limits<std::uint64_t>::max())
            throw ArgumentError("count_basis: basis size overflows 64-bit range (d=" + std::to_string(dimension) +
                                ", Q=" + std::to_string(order) + ")");
    }
    return static_cast<std::uint64_t>(result);
}

/// Total-degree truncated multi-index set, ordered by degree and then
/// lexicographically (ascending) within each degree. Index 0 is the zero index.
class MultiIndexSet {
public:
    MultiIndexSet() = default;

    MultiIndexSet(int dimension, int order) : dimension_(dimension), order_(order) {
        const auto n = count_basis(dimension, order);
        if (n > static_cast<std::uint64_t>(std::numeric_limits<int>::max()))
            throw ArgumentError("MultiIndexSet: basis too large to enumerate");
        indices_.reserve(static_cast<std::size_t>(n));
        std::vector<int> scratch(static_cast<std::size_t>(dimension), 0);
        for (int q = 0; q <= order; ++q) fill_degree(scratch, 0, q);
        for (std::size_t j = 0; j < indices_.size(); ++j) lookup_.emplace(indices_[j].entries, static_cast<int>(j));
        build_decrements();
    }

    int dimension() const noexcept { return dimension_; }
    int order() const noexcept { return order_; }
    std::size_t size() const noexcept { return indices_.size(); }
    const MultiIndex& operator[](std::size_t j) const { return indices_[j]; }
    const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
    auto begin() const noexcept { return indices_.begin(); }
    auto end() const noexcept { return indices_.end(); }

    /// Position of alpha in the set, or -1 if absent.
    int find(const std::vector<int>& alpha) const {
        auto it = lookup_.find(alpha);
        return it == lookup_.end() ? -1 : it->second;
    }

    /// Position of indices()[j] - e_i, or -1 when entry i of that index is zero.
    int decrement(std::size_t j, int i) const { return decrements_[j * static_cast<std::size_t>(dimension_) + i]; }

    friend bool operator==(const MultiIndexSet& a, const MultiIndexSet& b) {
        return a.dimension_ == b.dimension_ && a.order_ == b.order_;
    }

private:
    void fill_degree(std::vector<int>& scratch, int pos, int remaining) {
        if (pos == dimension_ - 1) {
            scratch[pos] = remaining;
            indices_.emplace_back(scratch);
            scratch[pos] = 0;
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            scratch[pos] = v;
            fill_degree(scratch, pos + 1, remaining - v);
        }
        scratch[pos] = 0;
    }

    void build_decrements() {
        decrements_.assign(indices_.size() * static_cast<std::size_t>(dimension_), -1);
        for (std::size_t j = 0; j < indices_.size(); ++j) {
            auto e = indices_[j].entries;
            for (int i = 0; i < dimension_; ++i) {
                if (e[i] == 0) continue;
                --e[i];
                decrements_[j * static_cast<std::size_t>(dimension_) + i] = find(e);
                ++e[i];
            }
        }
    }

    int dimension_ = 0;
    int order_ = 0;
    std::vector<MultiIndex> indices_;
    std::map<std::vector<int>, int> lookup_;
    std::vector<int> decrements_;
};

inline MultiIndexSet enumerate_multiindices(int dimension, int order) { return MultiIndexSet(dimension, order); }

/// psi_n(x) = He_n(x) / sqrt(n!) via the normalized three-term recurrence.
inline double hermite_normalized(int n, double x) {
    if (n < 0) throw ArgumentError("hermite_normalized: negative order");
    if (n == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (int k = 1; k < n; ++k) {
        const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(static_cast<double>(k + 1));
        prev = cur;
        cur = next;
    }
    return cur;
}

/// Writes psi_0(x) .. psi_{max_order}(x) into out (size max_order + 1).
inline void hermite_table(int max_order, double x, double* out) {
    out[0] = 1.0;
    if (max_order >= 1) out[1] = x;
    for (int k = 1; k < max_order; ++k)
        out[k + 1] = (x * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) / std::sqrt(static_cast<double>(k + 1));
}

inline double psi_multi(const MultiIndex& alpha, const Eigen::Ref<const Eigen::VectorXd>& point) {
    if (static_cast<Eigen::Index>(alpha.dimension()) != point.size())
        throw ArgumentError("psi_multi: multi-index dimension " + std::to_string(alpha.dimension()) +
                            " != point dimension " + std::to_string(point.size()));
    double v = 1.0;
    for (std::size_t i = 0; i < alpha.dimension(); ++i)
        if (alpha[i] != 0) v *= hermite_normalized(alpha[i], point[static_cast<Eigen::Index>(i)]);
    return v;
}

/// N x |set| matrix with entry (i, j) = psi_{set[j]}(points.row(i)).
inline Eigen::MatrixXd measurement_matrix(const Eigen::Ref<const Eigen::MatrixXd>& points, const MultiIndexSet& set) {
    if (points.rows() == 0) throw ArgumentError("measurement_matrix: empty point list");
    if (points.cols() != set.dimension())
        throw ArgumentError("measurement_matrix: points have dimension " + std::to_string(points.cols()) +
                            ", index set has " + std::to_string(set.dimension()));
    const int d = set.dimension();
    const int q = set.order();
    Eigen::MatrixXd psi(points.rows(), static_cast<Eigen::Index>(set.size()));
    std::vector<double> table(static_cast<std::size_t>(d) * (q + 1));
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
        for (int i = 0; i < d; ++i) hermite_table(q, points(r, i), &table[static_cast<std::size_t>(i) * (q + 1)]);
        for (std::size_t j = 0; j < set.size(); ++j) {
            const auto& a = set[j];
            double v = 1.0;
            for (int i = 0; i < d; ++i)
                if (a[i] != 0) v *= table[static_cast<std::size_t>(i) * (q + 1) + a[i]];
            psi(r, static_cast<Eigen::Index>(j)) = v;
        }
    }
    return psi;
}

/// Measurement matrix at the rotated germ eta = W xi, for W of shape d0 x d.
inline Eigen::MatrixXd rotated_measurement_matrix(const Eigen::Ref<const Eigen::MatrixXd>& w,
                                                  const Eigen::Ref<const Eigen::MatrixXd>& points,
                                                  const MultiIndexSet& set) {
    if (w.cols() != points.cols())
        throw ArgumentError("rotated_measurement_matrix: W has " + std::to_string(w.cols()) + " columns but points have dimension " +
                            std::to_string(points.cols()));
    if (w.rows() != set.dimension())
        throw ArgumentError("rotated_measurement_matrix: W has " + std::to_string(w.rows()) + " rows but index set dimension is " +
                            std::to_string(set.dimension()));
    const Eigen::MatrixXd eta = points * w.transpose();
    return measurement_matrix(eta, set);
}

/// Coefficients over a multi-index set; evaluates sum_alpha c_alpha psi_alpha.
struct ChaosExpansion {
    MultiIndexSet index_set;
    Eigen::VectorXd coefficients;

    ChaosExpansion() = default;
    ChaosExpansion(MultiIndexSet set, Eigen::VectorXd c) : index_set(std::move(set)), coefficients(std::move(c)) {
        if (static_cast<std::size_t>(coefficients.size()) != index_set.size())
            throw ArgumentError("ChaosExpansion: " + std::to_string(coefficients.size()) + " coefficients for an index set of size " +
                                std::to_string(index_set.size()));
    }

    int dimension() const noexcept { return index_set.dimension(); }
};

inline double evaluate_expansion(const ChaosExpansion& e, const Eigen::Ref<const Eigen::VectorXd>& point) {
    if (point.size() != e.dimension())
        throw ArgumentError("evaluate_expansion: point dimension " + std::to_string(point.size()) + " != expansion dimension " +
                            std::to_string(e.dimension()));
    Eigen::MatrixXd row = point.transpose();
    return (measurement_matrix(row, e.index_set) * e.coefficients)(0);
}

/// Evaluates at every row of points.
inline Eigen::VectorXd evaluate_expansion_rows(const ChaosExpansion& e, const Eigen::Ref<const Eigen::MatrixXd>& points) {
    return measurement_matrix(points, e.index_set) * e.coefficients;
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

inline Moments expansion_moments(const ChaosExpansion& e) {
    if (e.coefficients.size() == 0) return {};
    return {e.coefficients(0), e.coefficients.tail(e.coefficients.size() - 1).squaredNorm()};
}

/// n evaluations at i.i.d. standard normal points; deterministic in seed.
inline Eigen::VectorXd sample_expansion(const ChaosExpansion& e, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ArgumentError("sample_expansion: n must be >= 1");
    Rng rng(seed);
    Eigen::VectorXd out(static_cast<Eigen::Index>(n));
    constexpr std::size_t block = 4096;
    for (std::size_t start = 0; start < n; start += block) {
        const auto len = static_cast<Eigen::Index>(std::min(block, n - start));
        const Eigen::MatrixXd pts = gaussian_matrix(len, e.dimension(), rng);
        out.segment(static_cast<Eigen::Index>(start), len) = evaluate_expansion_rows(e, pts);
    }
    return out;
}

} // namespace adaptpc
