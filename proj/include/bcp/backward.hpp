#ifndef BCP_BACKWARD_HPP
#define BCP_BACKWARD_HPP

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bcp/error.hpp"
#include "bcp/evalues.hpp"
#include "bcp/scores.hpp"

namespace bcp {

/// Data-dependent miscoverage and the capped conformal set it induces.
struct MiscoverageResult {
    double alpha = 1.0;
    std::vector<std::size_t> set_indices;
    bool degenerate = false;
    std::size_t cap = 0;
};

namespace detail {

inline void check_cap(std::size_t num_labels, std::size_t cap) {
    if (num_labels == 0) {
        throw Error(ErrorCode::invalid_argument, "empty ratio vector");
    }
    if (cap < 1 || cap >= num_labels) {
        throw Error(ErrorCode::invalid_cap, "size cap " + std::to_string(cap) +
                                                " must satisfy 1 <= cap < K = " +
                                                std::to_string(num_labels));
    }
}

template <class Pred>
std::vector<std::size_t> indices_where(std::span<const double> ratios, Pred&& keep) {
    std::vector<std::size_t> out;
    for (std::size_t y = 0; y < ratios.size(); ++y) {
        if (keep(ratios[y])) out.push_back(y);
    }
    return out;
}

// Value of the rank-th smallest ratio (0-based). Ties are irrelevant: only the value is used.
inline double order_statistic(std::span<const double> ratios, std::size_t rank) {
    std::vector<double> sorted(ratios.begin(), ratios.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank),
                     sorted.end());
    return sorted[rank];
}

inline std::size_t count_below(std::span<const double> ratios, double threshold) {
    return static_cast<std::size_t>(
        std::count_if(ratios.begin(), ratios.end(), [&](double e) { return e < threshold; }));
}

}  // namespace detail

/// {y : E_y < 1/alpha}, ascending.
inline std::vector<std::size_t> conformal_set(const RatioVector& e, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw Error(ErrorCode::invalid_argument,
                    "alpha must lie in (0, 1], got " + std::to_string(alpha));
    }
    const double threshold = 1.0 / alpha;
    return detail::indices_where(e.ratios, [&](double v) { return v < threshold; });
}

/// Smallest alpha in (0, 1) whose set {y : E_y < 1/alpha} has at most `cap`
/// labels. With E_(1) <= ... <= E_(K) that is 1 / E_(cap+1) when E_(cap+1) > 1.
/// Otherwise no alpha < 1 qualifies; alpha is then 1 and the set is {y : E_y < 1},
/// flagged degenerate.
///
/// Membership in the returned set is decided against E_(cap+1) itself rather
/// than 1/alpha, which could round past it and admit a (cap+1)-th label.
inline MiscoverageResult adaptive_alpha(const RatioVector& e, std::size_t cap) {
    detail::check_cap(e.size(), cap);
    const double pivot = detail::order_statistic(e.ratios, cap);

    MiscoverageResult out;
    out.cap = cap;
    if (pivot > 1.0) {
        out.alpha = 1.0 / pivot;
        out.degenerate = false;
        out.set_indices = detail::indices_where(e.ratios, [&](double v) { return v < pivot; });
    } else {
        out.alpha = 1.0;
        out.degenerate = true;
        out.set_indices = detail::indices_where(e.ratios, [](double v) { return v < 1.0; });
    }
    return out;
}

/// Binary search for the same alpha, stopping once the bracket is narrower
/// than `tol`. The lower end stays infeasible (too many labels), the upper end
/// feasible; 1 counts as feasible. Returns the upper end.
inline double adaptive_alpha_bisect(const RatioVector& e, std::size_t cap, double tol = 0.005) {
    detail::check_cap(e.size(), cap);
    if (!(tol > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "tolerance must be positive");
    }
    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (detail::count_below(e.ratios, 1.0 / mid) <= cap) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

}  // namespace bcp

#endif
