#pragma once

#include <Eigen/Core>

#include "rrp/dataset.hpp"
#include "rrp/kernels.hpp"
#include "rrp/linalg.hpp"
#include "rrp/optimizer.hpp"

namespace rrp {

/// Everything derived from one factorization of Sigma = K0 + diag(rho):
/// the Cholesky factor, alpha = Sigma^{-1} (y - mean), the full precision
/// matrix and the negative marginal log-likelihood
///   nmll = ((y-m)^T Sigma^{-1} (y-m) + log det Sigma + n log 2pi) / 2.
/// Immutable after construction and safe to share across threads.
struct FittedState {
  Eigen::MatrixXd cov;       // Sigma (symmetrized, before jitter)
  Eigen::MatrixXd chol;      // lower Cholesky factor of Sigma + jitter I
  double jitter = 0.0;
  Eigen::VectorXd alpha;     // Sigma^{-1} (y - mean_const)
  Eigen::MatrixXd prec;      // Sigma^{-1}
  double log_det = 0.0;
  double nmll = 0.0;
  Eigen::VectorXd y;         // training targets the state was built from
  Eigen::VectorXd rho;       // robust variances baked into cov
  double mean_const = 0.0;

  Eigen::VectorXd prec_diag() const { return prec.diagonal(); }
};

FittedState fit_state(const Dataset& data, const Hyperparameters& hyper,
                      const Eigen::VectorXd& rho, KernelKind kind);

/// nmll without keeping the state around.
double nmll_value(const Dataset& data, const Hyperparameters& hyper,
                  const Eigen::VectorXd& rho, KernelKind kind);

/// Leave-one-out posterior moments of y, read off the precision matrix:
/// mean_i = y_i - alpha_i / P_ii, var_i = 1 / P_ii.
struct LooMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};
LooMoments loo_mean_var(const FittedState& state);

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Posterior predictive moments at Xstar. The observational flag adds the
/// base noise sigma^2 (never rho, which belongs to training points only).
Prediction posterior_predict(const FittedState& state, const Dataset& data,
                             const Hyperparameters& hyper, KernelKind kind,
                             const Eigen::MatrixXd& Xstar,
                             bool observational);

/// Box bounds for the hyperparameter search, applied in log space except
/// for the mean constant.
struct HyperBounds {
  double lengthscale_min = 1e-3, lengthscale_max = 1e3;
  double outputscale_min = 1e-4, outputscale_max = 1e4;
  double noise_min = 1e-6, noise_max = 10.0;
  double mean_min = -1e3, mean_max = 1e3;
};

/// Gradient of nmll with respect to
/// (log ell_1..d, log sf2, log sigma^2, mean_const), in that order.
Eigen::VectorXd nmll_grad_hyper(const Dataset& data,
                                const Hyperparameters& hyper,
                                const Eigen::VectorXd& rho, KernelKind kind);

/// Maximum-likelihood hyperparameters with rho held fixed. Deterministic
/// given init and config.
Hyperparameters fit_hyperparameters(const Dataset& data,
                                    const Hyperparameters& init,
                                    const Eigen::VectorXd& rho,
                                    KernelKind kind,
                                    const BoxLbfgsConfig& config = {},
                                    const HyperBounds& bounds = {});

/// fit_hyperparameters from the given init plus a fixed ladder of generic
/// starting points (lengthscale and noise combinations on the standardized
/// scale), keeping the lowest nmll. The marginal likelihood is multimodal;
/// a noise-explains-everything basin can swallow a single start.
Hyperparameters fit_hyperparameters_multistart(
    const Dataset& data, const Hyperparameters& init,
    const Eigen::VectorXd& rho, KernelKind kind,
    const BoxLbfgsConfig& config = {}, const HyperBounds& bounds = {});

/// Affine map applied to targets before fitting: z = (y - shift) / scale.
/// Fitting on constant targets keeps the raw scale (scale = 1, shift = 0).
struct Standardizer {
  double shift = 0.0;
  double scale = 1.0;
  bool degenerate = false;  // target variance was (near) zero

  static Standardizer fit(const Eigen::VectorXd& y);
  Eigen::VectorXd apply(const Eigen::VectorXd& y) const;
  double apply_noise_floor(double noise) const;
  Prediction destandardize(const Prediction& p) const;
};

}  // namespace rrp
