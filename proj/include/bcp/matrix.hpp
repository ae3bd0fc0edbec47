#ifndef BCP_MATRIX_HPP
#define BCP_MATRIX_HPP

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bcp/error.hpp"

namespace bcp {

/// Row-major dense matrix of doubles. Plain storage, no arithmetic.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows_ * cols_) {
            throw Error(ErrorCode::shape_mismatch,
                        "matrix storage holds " + std::to_string(values_.size()) +
                            " values, expected " + std::to_string(rows_) + "x" +
                            std::to_string(cols_));
        }
    }

    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        const std::size_t n = rows.size();
        const std::size_t k = n == 0 ? 0 : rows.front().size();
        std::vector<double> flat;
        flat.reserve(n * k);
        for (std::size_t i = 0; i < n; ++i) {
            if (rows[i].size() != k) {
                throw Error(ErrorCode::shape_mismatch,
                            "row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                                " columns, expected " + std::to_string(k));
            }
            flat.insert(flat.end(), rows[i].begin(), rows[i].end());
        }
        return Matrix(n, k, std::move(flat));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * cols_, cols_};
    }
    std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }

    std::span<const double> values() const noexcept { return values_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

}  // namespace bcp

#endif
