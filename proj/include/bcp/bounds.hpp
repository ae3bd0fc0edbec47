#ifndef BCP_BOUNDS_HPP
#define BCP_BOUNDS_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "bcp/error.hpp"

namespace bcp {

/// Inputs of the finite-sample bound on |alpha_loo - E[alpha]|. Scores are
/// assumed to lie in [s_min, s_max]; mu is the expected score when known.
struct BoundParams {
    std::size_t n = 0;
    double s_min = 1.0;
    double s_max = 1.0;
    double delta = 0.05;
    std::optional<double> mu;
};

enum class TrustDecision { trust, reject };

inline const char* to_string(TrustDecision d) { return d == TrustDecision::trust ? "trust" : "reject"; }

struct TrustReport {
    double alpha_loo = 0.0;
    double r_delta = 0.0;
    double tau = 0.0;
    double lower_coverage = 0.0;
    TrustDecision decision = TrustDecision::reject;
};

/// The bound only speaks to coverage when the marginal coverage guarantee
/// holds at level 1 - E[alpha], which for data-dependent alpha is a
/// first-order approximation.
inline constexpr const char* bound_caveat =
    "valid with probability at least 1 - delta, provided coverage is at least 1 - E[alpha]; "
    "for adaptive alpha this holds only to first order";

inline void validate(const BoundParams& p) {
    if (!(p.s_min > 0.0) || !(p.s_max >= p.s_min) || !std::isfinite(p.s_max)) {
        throw Error(ErrorCode::invalid_argument, "score bounds must satisfy 0 < s_min <= s_max");
    }
    if (!(p.delta > 0.0 && p.delta < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "delta must lie in (0, 1)");
    }
    if (!(static_cast<double>(p.n) > p.s_max / p.s_min)) {
        throw Error(ErrorCode::precondition, "n = " + std::to_string(p.n) +
                                                 " must exceed s_max / s_min = " +
                                                 std::to_string(p.s_max / p.s_min));
    }
}

namespace detail {

// Shared shape of both bounds; `scale` is the factor applied to the two
// mu-dependent terms (s_max / mu, or s_max / s_min for the observable version).
inline double bound_with_scale(const BoundParams& p, double scale) {
    const double n = static_cast<double>(p.n);
    const double ratio = p.s_max / p.s_min;
    const double hoeffding = std::sqrt(std::log(4.0 / p.delta) / (2.0 * n));
    const double first = scale * (hoeffding + 2.0 / n) / (p.s_min / p.s_max - 1.0 / n);
    const double third =
        2.0 * scale * ratio * ((n + 1.0) / n) * std::sqrt(std::numbers::pi / (2.0 * (n + 1.0)));
    return first + hoeffding + third;
}

}  // namespace detail

/// Observable bound R_delta(n), independent of mu.
inline double r_delta(const BoundParams& p) {
    validate(p);
    return detail::bound_with_scale(p, p.s_max / p.s_min);
}

/// Bound in terms of the expected score mu.
inline double explicit_bound_with_mu(const BoundParams& p) {
    validate(p);
    if (!p.mu) throw Error(ErrorCode::invalid_argument, "explicit bound needs mu");
    if (!(*p.mu > 0.0) || !std::isfinite(*p.mu)) {
        throw Error(ErrorCode::invalid_argument, "mu must be positive");
    }
    return detail::bound_with_scale(p, p.s_max / *p.mu);
}

// Slack on the inclusive comparison so decimal inputs that meet tau exactly
// (0.05, 0.05, 0.90) are not rejected by representation error.
inline constexpr double trust_slack = 8.0 * std::numeric_limits<double>::epsilon();

/// Trust when 1 - alpha_loo - r >= tau.
inline TrustReport trust_decision(double alpha_loo, double r, double tau) {
    if (!std::isfinite(alpha_loo) || !std::isfinite(r) || !std::isfinite(tau)) {
        throw Error(ErrorCode::invalid_argument, "trust decision needs finite inputs");
    }
    if (!(tau > 0.0 && tau < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "tau must lie in (0, 1)");
    }
    TrustReport out;
    out.alpha_loo = alpha_loo;
    out.r_delta = r;
    out.tau = tau;
    out.lower_coverage = 1.0 - alpha_loo - r;
    out.decision = out.lower_coverage >= tau - trust_slack ? TrustDecision::trust : TrustDecision::reject;
    return out;
}

}  // namespace bcp

#endif
