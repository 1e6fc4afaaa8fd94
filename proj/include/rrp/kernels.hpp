#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rrp/dataset.hpp"

namespace rrp {

enum class KernelKind { Matern52, Rbf };

KernelKind kernel_from_string(std::string_view name);
std::string to_string(KernelKind kind);

/// Entry (i,j) = sum_k ((X1(i,k) - X2(j,k)) / ell(k))^2.
Eigen::MatrixXd scaled_sq_dist(const Eigen::MatrixXd& X1,
                               const Eigen::MatrixXd& X2,
                               const Eigen::VectorXd& lengthscales);

/// Matern-5/2: sf2 * (1 + sqrt(5) r + 5 r^2 / 3) * exp(-sqrt(5) r).
Eigen::MatrixXd matern52(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                         const Hyperparameters& hyper);

/// Exponentiated quadratic: sf2 * exp(-scaled_sq_dist / 2).
Eigen::MatrixXd rbf(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                    const Hyperparameters& hyper);

Eigen::MatrixXd kernel_matrix(KernelKind kind, const Eigen::MatrixXd& X1,
                              const Eigen::MatrixXd& X2,
                              const Hyperparameters& hyper);

/// K0 = k(X, X) + sigma^2 I, symmetrized as (K0 + K0^T) / 2 so downstream
/// factorizations see an exactly symmetric matrix.
Eigen::MatrixXd base_cov_matrix(const Dataset& data,
                                const Hyperparameters& hyper, KernelKind kind);

/// Kernel matrix on the training inputs together with its derivatives with
/// respect to log-lengthscales and log-outputscale. grads[k] for k < d is
/// dK/dlog ell_k; grads[d] is dK/dlog sf2 (which equals K itself).
struct KernelWithGrads {
  Eigen::MatrixXd K;
  std::vector<Eigen::MatrixXd> grads;
};
KernelWithGrads kernel_with_grads(KernelKind kind, const Eigen::MatrixXd& X,
                                  const Hyperparameters& hyper);

}  // namespace rrp
