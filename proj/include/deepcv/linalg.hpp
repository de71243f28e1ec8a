#pragma once

#include <Eigen/Dense>

namespace deepcv {

/// Lower-triangular C with positive diagonal such that C * C^T equals the factored matrix.
struct LowerTriangularFactor {
  Eigen::MatrixXd matrix;

  Eigen::Index dim() const noexcept { return matrix.rows(); }
  bool is_diagonal() const;
  /// Solves C * y = b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  /// Solves C^T * y = b.
  Eigen::VectorXd solve_transposed(const Eigen::VectorXd& b) const;
  /// Applies C column-wise to a d x n block.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& block) const;
};

/// Cholesky factor of a symmetric positive definite matrix.
/// Throws DecompositionError naming the first non-positive pivot.
LowerTriangularFactor cholesky(const Eigen::MatrixXd& sigma_matrix);

}  // namespace deepcv
