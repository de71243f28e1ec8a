#include "deepcv/linalg.hpp"

#include <cmath>

#include "deepcv/errors.hpp"

namespace deepcv {

bool LowerTriangularFactor::is_diagonal() const {
  for (Eigen::Index j = 0; j < matrix.cols(); ++j)
    for (Eigen::Index i = j + 1; i < matrix.rows(); ++i)
      if (matrix(i, j) != 0.0) return false;
  return true;
}

Eigen::VectorXd LowerTriangularFactor::solve(const Eigen::VectorXd& b) const {
  return matrix.triangularView<Eigen::Lower>().solve(b);
}

Eigen::VectorXd LowerTriangularFactor::solve_transposed(const Eigen::VectorXd& b) const {
  return matrix.transpose().triangularView<Eigen::Upper>().solve(b);
}

Eigen::MatrixXd LowerTriangularFactor::apply(const Eigen::MatrixXd& block) const {
  if (is_diagonal()) return matrix.diagonal().asDiagonal() * block;
  return matrix.triangularView<Eigen::Lower>() * block;
}

LowerTriangularFactor cholesky(const Eigen::MatrixXd& sigma_matrix) {
  const Eigen::Index d = sigma_matrix.rows();
  if (d == 0 || sigma_matrix.cols() != d) throw DomainError("cholesky: matrix must be square and non-empty");
  const double scale = sigma_matrix.cwiseAbs().maxCoeff();
  if (!((sigma_matrix - sigma_matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(scale, 1.0)))
    throw DomainError("cholesky: matrix is not symmetric");

  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double pivot = sigma_matrix(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= c(j, k) * c(j, k);
    if (!(pivot > 0.0)) throw DecompositionError(static_cast<std::size_t>(j), pivot);
    c(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      double s = sigma_matrix(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= c(i, k) * c(j, k);
      c(i, j) = s / c(j, j);
    }
  }
  return LowerTriangularFactor{std::move(c)};
}

}  // namespace deepcv
