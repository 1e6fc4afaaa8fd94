#include "rrp/dataset.hpp"

#include <cmath>
#include <string>

namespace rrp {

Dataset Dataset::validated(Eigen::MatrixXd X, Eigen::VectorXd y) {
  if (X.rows() < 1 || X.cols() < 1) {
    throw DimensionError("dataset requires n >= 1 rows and d >= 1 columns, got " +
                         std::to_string(X.rows()) + "x" +
                         std::to_string(X.cols()));
  }
  if (X.rows() != y.size()) {
    throw DimensionError("X has " + std::to_string(X.rows()) +
                         " rows but y has " + std::to_string(y.size()) +
                         " entries");
  }
  if (!X.allFinite()) throw DomainError("X contains non-finite entries");
  if (!y.allFinite()) throw DomainError("y contains non-finite entries");
  return Dataset{std::move(X), std::move(y)};
}

Hyperparameters Hyperparameters::ard(Eigen::VectorXd lengthscales,
                                     double outputscale, double noise,
                                     double mean_const) {
  Hyperparameters h;
  h.lengthscales = std::move(lengthscales);
  h.outputscale = outputscale;
  h.noise = noise;
  h.mean_const = mean_const;
  h.validate();
  return h;
}

Hyperparameters Hyperparameters::isotropic(Index d, double lengthscale,
                                           double outputscale, double noise,
                                           double mean_const) {
  return ard(Eigen::VectorXd::Constant(d, lengthscale), outputscale, noise,
             mean_const);
}

Hyperparameters Hyperparameters::defaults(Index d) {
  return isotropic(d, 1.0, 1.0, 1e-2, 0.0);
}

void Hyperparameters::validate() const {
  if (lengthscales.size() < 1) {
    throw DimensionError("hyperparameters need at least one lengthscale");
  }
  if (!(lengthscales.array() > 0.0).all() || !lengthscales.allFinite()) {
    throw DomainError("lengthscales must be strictly positive and finite");
  }
  if (!(outputscale > 0.0) || !std::isfinite(outputscale)) {
    throw DomainError("outputscale must be strictly positive");
  }
  if (noise < 0.0 || !std::isfinite(noise)) {
    throw DomainError("noise variance must be nonnegative");
  }
  if (!std::isfinite(mean_const)) {
    throw DomainError("mean constant must be finite");
  }
}

}  // namespace rrp
