#ifndef BCP_EVALUES_HPP
#define BCP_EVALUES_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bcp/error.hpp"
#include "bcp/scores.hpp"

namespace bcp {

enum class RatioKind { test, loo, normalized };

/// K e-ratios for one evaluation point. `source` is the calibration index
/// for leave-one-out vectors and unused otherwise.
struct RatioVector {
    std::vector<double> ratios;
    RatioKind kind = RatioKind::test;
    std::size_t source = 0;

    std::size_t size() const noexcept { return ratios.size(); }
    double operator[](std::size_t y) const { return ratios[y]; }
};

namespace detail {

// Entry y = s_y / ((rest + s_y) / count): the score against the mean over
// `count` points, where `rest` sums the other count - 1 observed scores.
inline std::vector<double> mean_ratios(std::span<const double> scores, double rest, double count) {
    std::vector<double> out(scores.size());
    for (std::size_t y = 0; y < scores.size(); ++y) {
        const double denom = (rest + scores[y]) / count;
        if (!(denom > 0.0)) {
            throw Error(ErrorCode::degenerate_input,
                        "all-zero scores give a zero e-value denominator at label " +
                            std::to_string(y));
        }
        out[y] = scores[y] / denom;
    }
    return out;
}

}  // namespace detail

/// E^test_y = S_test(y) / ((sum_i S(X_i, Y_i) + S_test(y)) / (n + 1)).
inline RatioVector test_ratio_vector(const CalibrationSet& cal, std::span<const double> test_scores) {
    if (test_scores.size() != cal.num_labels()) {
        throw Error(ErrorCode::shape_mismatch,
                    "test scores have " + std::to_string(test_scores.size()) + " labels, expected " +
                        std::to_string(cal.num_labels()));
    }
    for (double s : test_scores) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw Error(ErrorCode::invalid_argument, "test scores must be finite and nonnegative");
        }
    }
    const double n_plus_one = static_cast<double>(cal.size() + 1);
    return {detail::mean_ratios(test_scores, cal.observed_total(), n_plus_one), RatioKind::test, 0};
}

/// Pseudo-ratio vector E^j with a precomputed sum of observed scores, so that
/// all n vectors cost O(n K) in total.
inline RatioVector loo_ratio_vector(const CalibrationSet& cal, std::size_t j, double observed_total) {
    const std::size_t n = cal.size();
    if (n < 2) {
        throw Error(ErrorCode::precondition,
                    "leave-one-out ratios need n >= 2 calibration points, got " + std::to_string(n));
    }
    if (j >= n) {
        throw Error(ErrorCode::invalid_argument,
                    "index " + std::to_string(j) + " outside [0, " + std::to_string(n) + ")");
    }
    const double rest = observed_total - cal.observed(j);
    return {detail::mean_ratios(cal.scores().row(j), rest, static_cast<double>(n)), RatioKind::loo, j};
}

/// E^j_y = S(X_j, y) / ((sum_{i != j} S(X_i, Y_i) + S(X_j, y)) / n).
inline RatioVector loo_ratio_vector(const CalibrationSet& cal, std::size_t j) {
    return loo_ratio_vector(cal, j, cal.observed_total());
}

/// Scores divided by the expected score mu. Only meaningful when mu is known,
/// i.e. in simulation.
inline RatioVector normalized_ratio_vector(std::span<const double> point_scores, double mu) {
    if (!(mu > 0.0) || !std::isfinite(mu)) {
        throw Error(ErrorCode::invalid_argument, "mu must be positive, got " + std::to_string(mu));
    }
    std::vector<double> out(point_scores.begin(), point_scores.end());
    for (double& v : out) v /= mu;
    return {std::move(out), RatioKind::normalized, 0};
}

}  // namespace bcp

#endif
