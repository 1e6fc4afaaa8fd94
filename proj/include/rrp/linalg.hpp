#pragma once

#include <Eigen/Core>

#include "rrp/errors.hpp"

namespace rrp {

using Index = Eigen::Index;

struct CholeskyResult {
  Eigen::MatrixXd L;  // lower triangular
  double jitter = 0.0;
};

/// Cholesky of M + jitter * I, trying jitter levels
/// {0, 1e-10, 1e-8, 1e-6, 1e-4} * mean(diag M) and keeping the smallest
/// that succeeds. Throws NotPositiveDefinite (carrying the last failing
/// pivot) if the whole ladder fails.
CholeskyResult cholesky_with_jitter(const Eigen::MatrixXd& M);

/// Solve L L^T x = b given the lower factor.
Eigen::VectorXd chol_solve(const Eigen::MatrixXd& L, const Eigen::VectorXd& b);
Eigen::MatrixXd chol_solve(const Eigen::MatrixXd& L, const Eigen::MatrixXd& B);

/// log det(L L^T) = 2 sum_i log L_ii.
double chol_log_det(const Eigen::MatrixXd& L);

/// Inverse of L L^T, symmetrized.
Eigen::MatrixXd chol_inverse(const Eigen::MatrixXd& L);

}  // namespace rrp
