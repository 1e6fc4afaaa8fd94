#pragma once

#include <vector>

#include "rrp/robust.hpp"

namespace rrp {

enum class CertKind {
  EigenConvexity,
  DdConvexity,
  EigenSmoothness,
  DdSmoothness,
};

/// Outcome of evaluating one curvature certificate. `lhs` is the computed
/// left-hand side of the inequality (may be +inf in degenerate limits) and
/// `holds` records whether lhs clears ||y||^2 together with any side
/// conditions of the certificate.
struct ConvexityCertificate {
  CertKind kind;
  double delta = 0.0;       // diagonal-dominance constant (dd kinds)
  double lambda_min = 0.0;  // extreme eigenvalues of K_s (or K0 for dd)
  double lambda_max = 0.0;
  double lambda_hat_min = 0.0;  // extreme eigenvalues of Khat (eigen kinds)
  double lambda_hat_max = 0.0;
  double m = 0.0;  // claimed strong-convexity constant
  double M = 0.0;  // claimed smoothness constant
  double s_max = 0.0;
  double y_norm_sq = 0.0;
  double lhs = 0.0;
  bool holds = false;
};

/// Smallest delta with sum_{j != i} |K_ij| <= delta * |K_ii| for all rows.
/// Throws DomainError on a zero or negative diagonal entry.
double diag_dominance_delta(const Eigen::MatrixXd& K);

/// Largest delta admitted by the dd-convexity certificate for constant m,
/// the smaller root of 2 d^2 + (m-5) d + (1-m) = 0. Negative when m >= 1.
double dd_convexity_delta_threshold(double m);

/// Strong convexity of the s-parameterized objective for every s in
/// [0,1)^n, certified from K0 alone via diagonal dominance.
ConvexityCertificate convexity_cert_dd(const Eigen::MatrixXd& K0,
                                       const Eigen::VectorXd& y, double m);

/// Pointwise strong-convexity certificate from the eigenvalues of K_s and
/// of its diagonally normalized counterpart Khat at the evaluated s.
ConvexityCertificate convexity_cert_eigen(const Eigen::MatrixXd& Ks,
                                          const Eigen::MatrixXd& Khat,
                                          const Eigen::VectorXd& y, double m);

/// Pointwise M-smoothness certificate under the box ||s||_inf <= s_max.
/// Requires M > 1 / (1 - s_max)^2.
ConvexityCertificate smoothness_cert_eigen(const Eigen::MatrixXd& Ks,
                                           const Eigen::MatrixXd& Khat,
                                           const Eigen::VectorXd& y, double M,
                                           double s_max);

/// M-smoothness for every s in the box, certified from K0 alone.
/// Requires s_max <= 1 - sqrt(1/M).
ConvexityCertificate smoothness_cert_dd(const Eigen::MatrixXd& K0,
                                        const Eigen::VectorXd& y, double M,
                                        double s_max);

struct ApproxRatioResult {
  double ratio = 1.0;   // normalized greedy value / enumerated optimum
  double bound = 0.0;   // 1 - exp(-m / M)
  bool passes = false;  // ratio >= bound - tolerance
  double greedy_value = 0.0;  // nmll(0) - nmll(greedy), >= 0
  double opt_value = 0.0;
  std::vector<Index> greedy_support;
  std::vector<Index> opt_support;
};

/// Compares r greedy forward steps against exhaustive enumeration of all
/// size-r supports, with frozen hyperparameters and the s box [0, s_max].
/// Requires 2r <= n and n small enough to enumerate (n <= 14, and at most
/// C(14,4) supports).
ApproxRatioResult approximation_ratio_check(const Dataset& data,
                                            const Hyperparameters& hyper,
                                            int r, double m, double M,
                                            double s_max, KernelKind kind,
                                            double tolerance = 1e-6);

struct LandscapePoint {
  double min_eig = 0.0;  // extreme eigenvalues of the Hessian of -2L
  double max_eig = 0.0;
};

/// A random instance constructed so that both diagonal-dominance
/// certificates hold: inputs spread far apart relative to the lengthscale
/// keep K0 near diagonal, and y is rescaled under the certificate budgets
/// when needed.
struct TheoryInstance {
  Dataset data;
  Hyperparameters hyper;
  KernelKind kernel = KernelKind::Matern52;
  double m = 0.0;
  double M = 0.0;
  double s_max = 0.0;
  ConvexityCertificate cert_convexity;  // dd certificate, valid for all s
  ConvexityCertificate cert_smoothness;
};
TheoryInstance make_certified_instance(std::uint64_t seed, Index n,
                                       KernelKind kind);

/// Eigenvalue sweep of the Hessian of -2L against the instance's
/// certificates at random admissible points. Gaps are signed slack values:
/// nonnegative means the bound held.
struct SweepResult {
  int samples = 0;
  double worst_convexity_gap = 0.0;   // min over s of lambda_min(H) - m
  double worst_smoothness_gap = 0.0;  // min over box of M - lambda_max(H)
  int eigen_convexity_checked = 0;    // pointwise eigen certificates that held
  int eigen_smoothness_checked = 0;
  double worst_eigen_convexity_gap = 0.0;
  double worst_eigen_smoothness_gap = 0.0;
};
SweepResult hessian_bound_sweep(const TheoryInstance& instance, int samples,
                                std::uint64_t seed);

/// Extreme eigenvalues of the Hessian of -2L at each grid point, in either
/// the canonical rho coordinates or the bounded s coordinates. Grid points
/// are full n-vectors.
std::vector<LandscapePoint> hessian_landscape_probe(
    const Dataset& data, const Hyperparameters& hyper,
    const std::vector<Eigen::VectorXd>& grid,
    Parameterization parameterization, KernelKind kind);

}  // namespace rrp
