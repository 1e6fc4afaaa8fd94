#pragma once

#include <vector>

#include <Eigen/Core>

#include "rrp/gp.hpp"

namespace rrp {

/// Per-point robust noise variances together with their active support.
struct RobustVariances {
  Eigen::VectorXd rho;         // all entries >= 0
  std::vector<Index> support;  // sorted indices with rho_i > 0

  static RobustVariances from_rho(Eigen::VectorXd rho);
};

/// The bounded reparameterization of rho. Each s_i lives in [0, s_max] with
/// s_max < 1 and maps to rho_i = k0_diag_i * (1/(1-s_i) - 1).
struct SParam {
  Eigen::VectorXd s;
  Eigen::VectorXd k0_diag;
  double s_max = kDefaultSMax;

  static constexpr double kDefaultSMax = 1.0 - 1e-3;
};

Eigen::VectorXd rho_from_s(const SParam& sparam);
Eigen::VectorXd s_from_rho(const Eigen::VectorXd& rho,
                           const Eigen::VectorXd& k0_diag);

/// Closed-form maximizer of the marginal likelihood over rho_i alone,
/// holding everything else fixed:
///   rho_i* = [(y_i - loo_mean_i)^2 - loo_var_i]_+.
/// The state must have rho_i = 0.
double optimal_rho_single(const FittedState& state, Index i);

/// Exact marginal-likelihood gain from moving rho_i from 0 to its
/// closed-form optimum. With g = alpha_i^2 / P_ii this is
///   0.5 * (g - 1 - log g) when g > 1 and 0 otherwise.
/// Throws DomainError if rho_i != 0 in the state.
double mll_gain(const FittedState& state, Index i);

/// Gains for every index outside the support, in one pass over the
/// precision matrix diagonal. Entries inside the support are set to 0.
Eigen::VectorXd mll_gains(const FittedState& state);

/// Gradient of nmll in rho: 0.5 * diag(P - alpha alpha^T).
Eigen::VectorXd nmll_grad_rho(const FittedState& state);

/// Hessian of nmll in rho: 0.5 * (2 (alpha alpha^T o P) - P o P),
/// with o the elementwise product. Symmetric by construction.
Eigen::MatrixXd nmll_hessian_rho(const FittedState& state);

/// Hessian of nmll in s, evaluated through the normalized covariance
/// Khat = D^{-1/2} Sigma D^{-1/2} with D = diag(Sigma):
///   2 H_s = D_{1-s}^{-1} [ 2 (ahat ahat^T o (Khat^{-1} - I))
///                          + 2 diag(Khat^{-1}) - Khat^{-1} o Khat^{-1} ]
///           D_{1-s}^{-1}.
/// The sparam must reproduce the state's rho.
Eigen::MatrixXd nmll_hessian_s(const FittedState& state, const SParam& sparam);

enum class Parameterization { Canonical, Convex };

struct SupportOptConfig {
  bool joint_hyper = true;  // re-optimize kernel hyperparameters alongside s
  Parameterization parameterization = Parameterization::Convex;
  double s_max = SParam::kDefaultSMax;
  BoxLbfgsConfig opt;
  HyperBounds bounds;
};

struct SupportOptResult {
  Eigen::VectorXd rho;
  double nmll = 0.0;
  Hyperparameters hyper;
  double jitter_max = 0.0;
  int iterations = 0;
};

/// Minimizes nmll over the robust variances restricted to the given
/// support (coordinates off the support stay exactly zero), optionally
/// re-optimizing the hyperparameters jointly. init_s holds the starting
/// point for the support coordinates in the s scale regardless of the
/// parameterization used for the search.
SupportOptResult optimize_rho_on_support(const Dataset& data,
                                         const Hyperparameters& hyper,
                                         const std::vector<Index>& support,
                                         const Eigen::VectorXd& init_s,
                                         KernelKind kind,
                                         const SupportOptConfig& config);

}  // namespace rrp
