#ifndef BCP_SCORES_HPP
#define BCP_SCORES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bcp/error.hpp"
#include "bcp/matrix.hpp"

namespace bcp {

inline constexpr double default_clamp = 1e-12;

/// n x K nonnegative scores S(X_i, y). Lower means the label fits better.
class ScoreMatrix {
public:
    ScoreMatrix() = default;

    explicit ScoreMatrix(Matrix values) : values_(std::move(values)) {
        if (values_.rows() < 1) {
            throw Error(ErrorCode::shape_mismatch, "score matrix needs at least one row");
        }
        if (values_.cols() < 2) {
            throw Error(ErrorCode::too_few_labels,
                        "score matrix needs K >= 2 labels, got " + std::to_string(values_.cols()));
        }
        for (std::size_t i = 0; i < values_.rows(); ++i) {
            for (std::size_t y = 0; y < values_.cols(); ++y) {
                const double s = values_(i, y);
                if (!std::isfinite(s)) {
                    throw Error(ErrorCode::invalid_argument,
                                "nonfinite score at row " + std::to_string(i) + ", label " +
                                    std::to_string(y));
                }
                if (s < 0.0) {
                    throw Error(ErrorCode::negative_score,
                                "negative score at row " + std::to_string(i) + ", label " +
                                    std::to_string(y));
                }
            }
        }
    }

    static ScoreMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        return ScoreMatrix(Matrix::from_rows(rows));
    }

    std::size_t rows() const noexcept { return values_.rows(); }
    std::size_t num_labels() const noexcept { return values_.cols(); }
    double operator()(std::size_t i, std::size_t y) const { return values_(i, y); }
    std::span<const double> row(std::size_t i) const { return values_.row(i); }
    const Matrix& matrix() const noexcept { return values_; }

    bool operator==(const ScoreMatrix&) const = default;

private:
    Matrix values_;
};

/// Calibration scores together with the observed labels.
class CalibrationSet {
public:
    CalibrationSet() = default;

    CalibrationSet(ScoreMatrix scores, std::vector<std::size_t> labels)
        : scores_(std::move(scores)), labels_(std::move(labels)) {
        if (labels_.size() != scores_.rows()) {
            throw Error(ErrorCode::shape_mismatch,
                        std::to_string(labels_.size()) + " labels for " +
                            std::to_string(scores_.rows()) + " score rows");
        }
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i] >= scores_.num_labels()) {
                throw Error(ErrorCode::label_out_of_range,
                            "label " + std::to_string(labels_[i]) + " at row " + std::to_string(i) +
                                " outside [0, " + std::to_string(scores_.num_labels()) + ")");
            }
        }
    }

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t num_labels() const noexcept { return scores_.num_labels(); }
    const ScoreMatrix& scores() const noexcept { return scores_; }
    std::span<const std::size_t> labels() const noexcept { return labels_; }

    /// S(X_i, Y_i).
    double observed(std::size_t i) const { return scores_(i, labels_[i]); }

    std::vector<double> observed_scores() const {
        std::vector<double> out(size());
        for (std::size_t i = 0; i < size(); ++i) out[i] = observed(i);
        return out;
    }

    /// Sum of observed scores, accumulated in index order.
    double observed_total() const {
        double total = 0.0;
        for (std::size_t i = 0; i < size(); ++i) total += observed(i);
        return total;
    }

    /// Rows picked by `indices`, in that order.
    CalibrationSet subset(std::span<const std::size_t> indices) const {
        const std::size_t k = num_labels();
        std::vector<double> flat;
        flat.reserve(indices.size() * k);
        std::vector<std::size_t> labels;
        labels.reserve(indices.size());
        for (std::size_t idx : indices) {
            auto r = scores_.row(idx);
            flat.insert(flat.end(), r.begin(), r.end());
            labels.push_back(labels_[idx]);
        }
        return {ScoreMatrix(Matrix(indices.size(), k, std::move(flat))), std::move(labels)};
    }

    bool operator==(const CalibrationSet&) const = default;

private:
    ScoreMatrix scores_;
    std::vector<std::size_t> labels_;
};

/// n x d feature embeddings, row order matching a CalibrationSet.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;

    explicit EmbeddingMatrix(Matrix points) : points_(std::move(points)) {
        for (double v : points_.values()) {
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::invalid_argument, "nonfinite embedding entry");
            }
        }
    }

    static EmbeddingMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        return EmbeddingMatrix(Matrix::from_rows(rows));
    }

    std::size_t rows() const noexcept { return points_.rows(); }
    std::size_t dim() const noexcept { return points_.cols(); }
    std::span<const double> row(std::size_t i) const { return points_.row(i); }
    const Matrix& matrix() const noexcept { return points_; }

    EmbeddingMatrix subset(std::span<const std::size_t> indices) const {
        std::vector<double> flat;
        flat.reserve(indices.size() * dim());
        for (std::size_t idx : indices) {
            auto r = points_.row(idx);
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return EmbeddingMatrix(Matrix(indices.size(), dim(), std::move(flat)));
    }

    bool operator==(const EmbeddingMatrix&) const = default;

private:
    Matrix points_;
};

namespace detail {

inline void check_clamp(double clamp) {
    if (!(clamp > 0.0 && clamp < 0.5)) {
        throw Error(ErrorCode::invalid_argument,
                    "clamp must lie in (0, 0.5), got " + std::to_string(clamp));
    }
}

inline double clamped_neg_log(double p, double clamp) {
    return -std::log(std::min(std::max(p, clamp), 1.0 - clamp));
}

}  // namespace detail

/// S(x, y) = -ln p(y | x) with p clamped to [clamp, 1 - clamp].
inline ScoreMatrix cross_entropy_scores(const Matrix& probabilities, double clamp = default_clamp) {
    detail::check_clamp(clamp);
    Matrix out(probabilities.rows(), probabilities.cols());
    for (std::size_t i = 0; i < probabilities.rows(); ++i) {
        auto p = probabilities.row(i);
        double sum = 0.0;
        for (std::size_t y = 0; y < p.size(); ++y) {
            if (!std::isfinite(p[y])) {
                throw Error(ErrorCode::invalid_argument,
                            "nonfinite probability at row " + std::to_string(i));
            }
            sum += p[y];
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw Error(ErrorCode::invalid_argument,
                        "probabilities at row " + std::to_string(i) + " sum to " +
                            std::to_string(sum));
        }
        for (std::size_t y = 0; y < p.size(); ++y) out(i, y) = detail::clamped_neg_log(p[y], clamp);
    }
    return ScoreMatrix(std::move(out));
}

/// Binary case: row i is [-ln(1 - f_i), -ln f_i], f_i the predicted probability of class 1.
inline ScoreMatrix binary_cross_entropy_scores(std::span<const double> f,
                                               double clamp = default_clamp) {
    detail::check_clamp(clamp);
    Matrix out(f.size(), 2);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!std::isfinite(f[i])) {
            throw Error(ErrorCode::invalid_argument,
                        "nonfinite probability at row " + std::to_string(i));
        }
        out(i, 0) = detail::clamped_neg_log(1.0 - f[i], clamp);
        out(i, 1) = detail::clamped_neg_log(f[i], clamp);
    }
    return ScoreMatrix(std::move(out));
}

}  // namespace bcp

#endif
