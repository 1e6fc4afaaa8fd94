#include "rrp/linalg.hpp"

#include <array>
#include <cmath>
#include <string>

namespace rrp {

namespace {

// In-place lower Cholesky. Returns true on success; on failure *last_pivot
// holds the nonpositive pivot that stopped the factorization.
bool try_cholesky(const Eigen::MatrixXd& M, Eigen::MatrixXd& L,
                  double* last_pivot) {
  const Index n = M.rows();
  L = Eigen::MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double pivot = M(j, j) - L.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      *last_pivot = pivot;
      return false;
    }
    const double ljj = std::sqrt(pivot);
    L(j, j) = ljj;
    if (j + 1 < n) {
      L.col(j).tail(n - j - 1) =
          (M.col(j).tail(n - j - 1) -
           L.bottomLeftCorner(n - j - 1, j) * L.row(j).head(j).transpose()) /
          ljj;
    }
  }
  return true;
}

}  // namespace

CholeskyResult cholesky_with_jitter(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) {
    throw DimensionError("cholesky requires a square matrix, got " +
                         std::to_string(M.rows()) + "x" +
                         std::to_string(M.cols()));
  }
  const double diag_mean = M.diagonal().mean();
  constexpr std::array<double, 5> ladder = {0.0, 1e-10, 1e-8, 1e-6, 1e-4};

  CholeskyResult result;
  double last_pivot = 0.0;
  for (double level : ladder) {
    const double jitter = level * diag_mean;
    Eigen::MatrixXd Mj = M;
    Mj.diagonal().array() += jitter;
    if (try_cholesky(Mj, result.L, &last_pivot)) {
      result.jitter = jitter;
      return result;
    }
  }
  throw NotPositiveDefinite(
      "matrix is not positive definite at any jitter level (last pivot " +
          std::to_string(last_pivot) + ")",
      last_pivot);
}

Eigen::VectorXd chol_solve(const Eigen::MatrixXd& L,
                           const Eigen::VectorXd& b) {
  Eigen::VectorXd x = L.triangularView<Eigen::Lower>().solve(b);
  L.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x;
}

Eigen::MatrixXd chol_solve(const Eigen::MatrixXd& L,
                           const Eigen::MatrixXd& B) {
  Eigen::MatrixXd X = L.triangularView<Eigen::Lower>().solve(B);
  L.triangularView<Eigen::Lower>().transpose().solveInPlace(X);
  return X;
}

double chol_log_det(const Eigen::MatrixXd& L) {
  return 2.0 * L.diagonal().array().log().sum();
}

Eigen::MatrixXd chol_inverse(const Eigen::MatrixXd& L) {
  Eigen::MatrixXd inv =
      chol_solve(L, Eigen::MatrixXd(Eigen::MatrixXd::Identity(L.rows(), L.rows())));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace rrp
