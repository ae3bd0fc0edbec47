#ifndef BCP_RULES_HPP
#define BCP_RULES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bcp/error.hpp"
#include "bcp/matrix.hpp"
#include "bcp/pca.hpp"
#include "bcp/scores.hpp"

namespace bcp {

/// Every test point gets the same size bound t.
struct ConstantRule {
    std::size_t t = 1;
};

/// Configuration of the entropy-adaptive rule before it is fitted.
struct EntropyRuleSpec {
    std::size_t k = 20;
    std::size_t t_min = 1;
    std::size_t t_max = 3;
    double skew_exponent = 0.5;
};

/// Fitted entropy-adaptive rule. Points are projected to 2D, their k nearest
/// calibration neighbours vote with their labels, and the local label entropy
/// (bits) is binned into a size in [t_min, t_max].
struct EntropyModel {
    Pca2 pca;
    std::vector<std::size_t> cal_labels;
    std::size_t num_labels = 0;
    std::size_t k = 0;
    std::size_t t_min = 1;
    std::size_t t_max = 1;
    double skew_exponent = 0.5;
    std::vector<double> bins;           // L = t_max - t_min + 1 thresholds, non-decreasing
    std::vector<double> cal_entropies;  // H(X_i), each point excluded from its own query
};

using RuleSpec = std::variant<ConstantRule, EntropyRuleSpec>;
using SizeRule = std::variant<ConstantRule, EntropyModel>;

inline bool is_adaptive(const RuleSpec& spec) { return std::holds_alternative<EntropyRuleSpec>(spec); }
inline bool is_adaptive(const SizeRule& rule) { return std::holds_alternative<EntropyModel>(rule); }

/// Shannon entropy in bits of the empirical label distribution.
inline double local_entropy(std::span<const std::size_t> neighbor_labels, std::size_t num_labels) {
    if (neighbor_labels.empty()) {
        throw Error(ErrorCode::invalid_argument, "local entropy of an empty neighbourhood");
    }
    std::vector<std::size_t> counts(num_labels, 0);
    for (std::size_t label : neighbor_labels) {
        if (label >= num_labels) {
            throw Error(ErrorCode::label_out_of_range,
                        "neighbour label " + std::to_string(label) + " outside [0, " +
                            std::to_string(num_labels) + ")");
        }
        ++counts[label];
    }
    const double k = static_cast<double>(neighbor_labels.size());
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / k;
        h -= p * std::log2(p);
    }
    return h;
}

/// Indices of the k points of `points` (n x 2) closest to `query` in Euclidean
/// distance, nearest first; equal distances go to the lower index.
inline std::vector<std::size_t> nearest_neighbors(const Matrix& points, std::array<double, 2> query,
                                                  std::size_t k,
                                                  std::optional<std::size_t> exclude = std::nullopt) {
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        if (exclude && *exclude == i) continue;
        const double dx = points(i, 0) - query[0];
        const double dy = points(i, 1) - query[1];
        cand.emplace_back(dx * dx + dy * dy, i);
    }
    if (k > cand.size()) {
        throw Error(ErrorCode::invalid_argument, "k = " + std::to_string(k) + " exceeds the " +
                                                     std::to_string(cand.size()) +
                                                     " available neighbours");
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = cand[i].second;
    return out;
}

/// Thresholds min + (max - min) * (l / (L - 1))^skew for l = 0..L-1.
inline std::vector<double> entropy_bins(double min_h, double max_h, std::size_t count,
                                        double skew_exponent) {
    if (count < 2) {
        throw Error(ErrorCode::invalid_argument, "entropy binning needs at least two bins");
    }
    std::vector<double> bins(count);
    for (std::size_t l = 0; l < count; ++l) {
        const double frac = static_cast<double>(l) / static_cast<double>(count - 1);
        bins[l] = min_h + (max_h - min_h) * std::pow(frac, skew_exponent);
    }
    bins.back() = max_h;
    return bins;
}

/// b(h) = t_min + #{l < L - 1 : h > bins[l]}.
inline std::size_t size_for_entropy(std::span<const double> bins, std::size_t t_min, double h) {
    std::size_t size = t_min;
    for (std::size_t l = 0; l + 1 < bins.size(); ++l) {
        if (h > bins[l]) ++size;
    }
    return size;
}

inline std::size_t size_for_entropy(const EntropyModel& model, double h) {
    return size_for_entropy(model.bins, model.t_min, h);
}

namespace detail {

inline double entropy_at(const Matrix& points, std::span<const std::size_t> labels,
                         std::size_t num_labels, std::array<double, 2> query, std::size_t k,
                         std::optional<std::size_t> exclude) {
    const auto nn = nearest_neighbors(points, query, k, exclude);
    std::vector<std::size_t> nn_labels(nn.size());
    for (std::size_t i = 0; i < nn.size(); ++i) nn_labels[i] = labels[nn[i]];
    return local_entropy(nn_labels, num_labels);
}

inline void check_embeddings(const CalibrationSet& cal, const EmbeddingMatrix& embeddings) {
    if (embeddings.rows() != cal.size()) {
        throw Error(ErrorCode::shape_mismatch, std::to_string(embeddings.rows()) +
                                                   " embedding rows for " +
                                                   std::to_string(cal.size()) +
                                                   " calibration points");
    }
}

}  // namespace detail

inline EntropyModel fit_entropy_rule(const CalibrationSet& cal, const EmbeddingMatrix& embeddings,
                                     std::size_t k, std::size_t t_min, std::size_t t_max,
                                     double skew_exponent = 0.5) {
    detail::check_embeddings(cal, embeddings);
    const std::size_t n = cal.size();
    if (k < 1 || k + 1 > n) {
        throw Error(ErrorCode::invalid_argument, "neighbour count k = " + std::to_string(k) +
                                                     " must lie in [1, n - 1] with n = " +
                                                     std::to_string(n));
    }
    // t_max stays below K so every cap is accepted by adaptive_alpha.
    if (t_min < 1 || t_max <= t_min || t_max >= cal.num_labels()) {
        throw Error(ErrorCode::invalid_argument,
                    "size bounds must satisfy 1 <= t_min < t_max < K; got t_min = " +
                        std::to_string(t_min) + ", t_max = " + std::to_string(t_max) +
                        ", K = " + std::to_string(cal.num_labels()));
    }
    if (!(skew_exponent > 0.0) || !std::isfinite(skew_exponent)) {
        throw Error(ErrorCode::invalid_argument, "skew exponent must be positive");
    }

    EntropyModel model;
    model.pca = pca_2d(embeddings);
    model.cal_labels.assign(cal.labels().begin(), cal.labels().end());
    model.num_labels = cal.num_labels();
    model.k = k;
    model.t_min = t_min;
    model.t_max = t_max;
    model.skew_exponent = skew_exponent;

    model.cal_entropies.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::array<double, 2> q{model.pca.projected(i, 0), model.pca.projected(i, 1)};
        model.cal_entropies[i] =
            detail::entropy_at(model.pca.projected, model.cal_labels, model.num_labels, q, k, i);
    }
    const auto [lo, hi] = std::minmax_element(model.cal_entropies.begin(), model.cal_entropies.end());
    model.bins = entropy_bins(*lo, *hi, t_max - t_min + 1, skew_exponent);
    return model;
}

/// Entropy of an arbitrary point against all calibration points.
inline double test_entropy(const EntropyModel& model, std::span<const double> embedding) {
    return detail::entropy_at(model.pca.projected, model.cal_labels, model.num_labels,
                              model.pca.project(embedding), model.k, std::nullopt);
}

inline SizeRule fit_rule(const RuleSpec& spec, const CalibrationSet& cal,
                         const EmbeddingMatrix* embeddings) {
    if (const auto* c = std::get_if<ConstantRule>(&spec)) {
        if (c->t < 1) throw Error(ErrorCode::invalid_argument, "constant rule needs t >= 1");
        return *c;
    }
    const auto& e = std::get<EntropyRuleSpec>(spec);
    if (embeddings == nullptr) {
        throw Error(ErrorCode::missing_embeddings, "the entropy rule needs embeddings");
    }
    return fit_entropy_rule(cal, *embeddings, e.k, e.t_min, e.t_max, e.skew_exponent);
}

/// Size bound for a test point. The constant rule ignores the embedding.
inline std::size_t apply_rule(const SizeRule& rule, const CalibrationSet& cal,
                              std::optional<std::span<const double>> test_embedding) {
    if (const auto* c = std::get_if<ConstantRule>(&rule)) return c->t;
    const auto& model = std::get<EntropyModel>(rule);
    if (!test_embedding) {
        throw Error(ErrorCode::missing_embeddings, "the entropy rule needs a test embedding");
    }
    if (cal.size() != model.cal_labels.size()) {
        throw Error(ErrorCode::shape_mismatch, "calibration set differs from the fitted rule");
    }
    return size_for_entropy(model, test_entropy(model, *test_embedding));
}

/// Size bounds for each calibration point treated as a pseudo-test point:
/// point j queries the other n - 1 points. The fitted projection is reused.
inline std::vector<std::size_t> loo_caps(const SizeRule& rule, const CalibrationSet& cal,
                                         const EmbeddingMatrix* embeddings) {
    const std::size_t n = cal.size();
    if (const auto* c = std::get_if<ConstantRule>(&rule)) return std::vector<std::size_t>(n, c->t);
    const auto& model = std::get<EntropyModel>(rule);
    if (embeddings == nullptr) {
        throw Error(ErrorCode::missing_embeddings, "the entropy rule needs embeddings");
    }
    detail::check_embeddings(cal, *embeddings);

    Matrix projected(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = model.pca.project(embeddings->row(i));
        projected(i, 0) = p[0];
        projected(i, 1) = p[1];
    }
    std::vector<std::size_t> caps(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double h = detail::entropy_at(projected, cal.labels(), cal.num_labels(),
                                            {projected(j, 0), projected(j, 1)}, model.k, j);
        caps[j] = size_for_entropy(model, h);
    }
    return caps;
}

}  // namespace bcp

#endif
