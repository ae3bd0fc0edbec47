#ifndef BCP_PCA_HPP
#define BCP_PCA_HPP

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bcp/error.hpp"
#include "bcp/matrix.hpp"
#include "bcp/scores.hpp"

namespace bcp {

/// Two-component principal projection of an embedding set.
struct Pca2 {
    Matrix projection;         // 2 x d, rows are unit loadings (or zero when degenerate)
    std::vector<double> mean;  // d
    Matrix projected;          // n x 2
    std::array<double, 2> variances{0.0, 0.0};
    bool degenerate = false;   // fewer than two nonzero components

    std::array<double, 2> project(std::span<const double> point) const {
        if (point.size() != mean.size()) {
            throw Error(ErrorCode::shape_mismatch,
                        "point has dimension " + std::to_string(point.size()) + ", expected " +
                            std::to_string(mean.size()));
        }
        std::array<double, 2> out{0.0, 0.0};
        for (std::size_t c = 0; c < 2; ++c) {
            double acc = 0.0;
            for (std::size_t f = 0; f < mean.size(); ++f) acc += projection(c, f) * (point[f] - mean[f]);
            out[c] = acc;
        }
        return out;
    }
};

// Relative eigenvalue floor below which a component counts as absent.
inline constexpr double pca_rank_tolerance = 1e-12;

/// Top-2 eigenvectors of the sample covariance (divisor n - 1), ordered by
/// descending eigenvalue, each signed so its largest-magnitude entry is positive.
inline Pca2 pca_2d(const EmbeddingMatrix& embeddings) {
    const std::size_t n = embeddings.rows();
    const std::size_t d = embeddings.dim();
    if (n < 2) {
        throw Error(ErrorCode::precondition, "PCA needs n >= 2 points, got " + std::to_string(n));
    }
    if (d < 2) {
        throw Error(ErrorCode::precondition,
                    "PCA needs dimension d >= 2, got " + std::to_string(d));
    }

    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < d; ++f) x(i, f) = embeddings.matrix()(i, f);
    }
    const Eigen::RowVectorXd centre = x.colwise().mean();
    x.rowwise() -= centre;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::degenerate_input, "covariance eigendecomposition failed");
    }
    const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
    const Eigen::MatrixXd& evecs = solver.eigenvectors();
    const double top = evals(static_cast<Eigen::Index>(d - 1));

    Pca2 out;
    out.mean.assign(centre.data(), centre.data() + d);
    out.projection = Matrix(2, d);
    for (std::size_t c = 0; c < 2; ++c) {
        const auto col = static_cast<Eigen::Index>(d - 1 - c);
        const double lambda = evals(col);
        if (!(top > 0.0) || lambda <= pca_rank_tolerance * top) {
            out.degenerate = true;
            continue;
        }
        Eigen::VectorXd v = evecs.col(col);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        for (std::size_t f = 0; f < d; ++f) out.projection(c, f) = v(static_cast<Eigen::Index>(f));
        out.variances[c] = lambda;
    }

    out.projected = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = out.project(embeddings.row(i));
        out.projected(i, 0) = p[0];
        out.projected(i, 1) = p[1];
    }
    return out;
}

}  // namespace bcp

#endif
