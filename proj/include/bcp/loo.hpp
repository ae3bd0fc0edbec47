#ifndef BCP_LOO_HPP
#define BCP_LOO_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "bcp/backward.hpp"
#include "bcp/error.hpp"
#include "bcp/evalues.hpp"
#include "bcp/rules.hpp"
#include "bcp/scores.hpp"

namespace bcp {

/// Pseudo-miscoverages of each calibration point and their mean.
struct LooEstimate {
    std::vector<double> per_j;
    std::vector<std::size_t> per_j_caps;
    double alpha_loo = 1.0;
};

/// Treats each calibration point j in turn as the test point, with the other
/// n - 1 observed scores as its calibration set, and averages the resulting
/// adaptive miscoverages. The mean is accumulated in ascending j.
inline LooEstimate loo_estimator(const CalibrationSet& cal, const SizeRule& rule,
                                 const EmbeddingMatrix* embeddings = nullptr) {
    const std::size_t n = cal.size();
    if (n < 2) {
        throw Error(ErrorCode::precondition,
                    "leave-one-out estimation needs n >= 2, got " + std::to_string(n));
    }
    LooEstimate out;
    out.per_j_caps = loo_caps(rule, cal, embeddings);
    out.per_j.resize(n);

    const double total = cal.observed_total();
    for (std::size_t j = 0; j < n; ++j) {
        out.per_j[j] = adaptive_alpha(loo_ratio_vector(cal, j, total), out.per_j_caps[j]).alpha;
    }
    double sum = 0.0;
    for (double a : out.per_j) sum += a;
    out.alpha_loo = sum / static_cast<double>(n);
    return out;
}

}  // namespace bcp

#endif
