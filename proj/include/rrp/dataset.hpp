#pragma once

#include <Eigen/Core>

#include "rrp/errors.hpp"

namespace rrp {

using Index = Eigen::Index;

/// A regression dataset: n input rows in d dimensions with scalar targets.
struct Dataset {
  Eigen::MatrixXd X;  // n x d
  Eigen::VectorXd y;  // n

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }

  /// Validates shapes and finiteness, throwing DimensionError/DomainError.
  static Dataset validated(Eigen::MatrixXd X, Eigen::VectorXd y);
};

/// GP hyperparameters: ARD lengthscales, kernel variance, base noise
/// variance and a constant prior mean.
struct Hyperparameters {
  Eigen::VectorXd lengthscales;  // one per input dimension, all > 0
  double outputscale = 1.0;      // kernel variance sigma_f^2, > 0
  double noise = 1e-2;           // base noise variance sigma^2, >= 0
  double mean_const = 0.0;

  static Hyperparameters ard(Eigen::VectorXd lengthscales, double outputscale,
                             double noise, double mean_const = 0.0);
  /// Single shared lengthscale replicated across all d dimensions.
  static Hyperparameters isotropic(Index d, double lengthscale,
                                   double outputscale, double noise,
                                   double mean_const = 0.0);
  /// Unit lengthscales, unit outputscale, small noise. Sensible starting
  /// point for standardized targets.
  static Hyperparameters defaults(Index d);

  void validate() const;
};

}  // namespace rrp
