#include "rrp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "rrp/pursuit.hpp"

namespace rrp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct EigRange {
  double min, max;
};

EigRange eig_range(const Eigen::MatrixXd& M) {
  const Eigen::MatrixXd sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw DomainError("symmetric eigendecomposition failed");
  }
  const Eigen::VectorXd ev = solver.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

// lhs of a certificate with an exact-zero denominator: the bound
// degenerates to a sign condition on the numerator.
double guarded_ratio(double scale, double num, double den) {
  if (den > 0.0) return scale * num / den;
  if (num > 0.0) return kInf;
  if (num == 0.0) return 0.0;
  return -kInf;
}

int binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long out = 1;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return static_cast<int>(out);
}

}  // namespace

double diag_dominance_delta(const Eigen::MatrixXd& K) {
  if (K.rows() != K.cols()) {
    throw DimensionError("diagonal dominance requires a square matrix");
  }
  double delta = 0.0;
  for (Index i = 0; i < K.rows(); ++i) {
    const double diag = K(i, i);
    if (!(diag > 0.0)) {
      throw DomainError("row " + std::to_string(i) +
                        " has a nonpositive diagonal entry");
    }
    const double off = K.row(i).cwiseAbs().sum() - std::abs(diag);
    delta = std::max(delta, off / std::abs(diag));
  }
  return delta;
}

double dd_convexity_delta_threshold(double m) {
  const double disc = (5.0 - m) * (5.0 - m) - 8.0 * (1.0 - m);
  return ((5.0 - m) - std::sqrt(disc)) / 4.0;
}

ConvexityCertificate convexity_cert_dd(const Eigen::MatrixXd& K0,
                                       const Eigen::VectorXd& y, double m) {
  if (m < 0.0) throw DomainError("convexity constant m must be >= 0");
  ConvexityCertificate cert;
  cert.kind = CertKind::DdConvexity;
  cert.m = m;
  cert.y_norm_sq = y.squaredNorm();
  cert.delta = diag_dominance_delta(K0);
  const EigRange ev = eig_range(K0);
  cert.lambda_min = ev.min;
  cert.lambda_max = ev.max;

  const double d = cert.delta;
  const double num = 2.0 / (1.0 + d) - 1.0 / ((1.0 - d) * (1.0 - d)) - m;
  const double den = 2.0 * (1.0 - (1.0 - d) / (1.0 + d));
  cert.lhs = guarded_ratio(cert.lambda_min * (1.0 - d) * (1.0 - d), num, den);
  const bool delta_ok = d < dd_convexity_delta_threshold(m);
  cert.holds = delta_ok && cert.lhs >= cert.y_norm_sq;
  return cert;
}

ConvexityCertificate convexity_cert_eigen(const Eigen::MatrixXd& Ks,
                                          const Eigen::MatrixXd& Khat,
                                          const Eigen::VectorXd& y, double m) {
  if (m < 0.0) throw DomainError("convexity constant m must be >= 0");
  ConvexityCertificate cert;
  cert.kind = CertKind::EigenConvexity;
  cert.m = m;
  cert.y_norm_sq = y.squaredNorm();
  const EigRange ev = eig_range(Ks);
  const EigRange evh = eig_range(Khat);
  cert.lambda_min = ev.min;
  cert.lambda_max = ev.max;
  cert.lambda_hat_min = evh.min;
  cert.lambda_hat_max = evh.max;
  if (!(ev.min > 0.0) || !(evh.min > 0.0)) {
    throw DomainError("certificate matrices must be positive definite");
  }

  const double num =
      2.0 / evh.max - 1.0 / (evh.min * evh.min) - m;
  const double den = 2.0 * (1.0 - ev.min / ev.max);
  cert.lhs = guarded_ratio(ev.min * evh.min * evh.min, num, den);
  cert.holds = cert.lhs > cert.y_norm_sq;
  return cert;
}

ConvexityCertificate smoothness_cert_eigen(const Eigen::MatrixXd& Ks,
                                           const Eigen::MatrixXd& Khat,
                                           const Eigen::VectorXd& y, double M,
                                           double s_max) {
  if (!(s_max >= 0.0 && s_max < 1.0)) {
    throw DomainError("s_max must lie in [0, 1)");
  }
  const double floor = 1.0 / ((1.0 - s_max) * (1.0 - s_max));
  if (!(M > floor)) {
    throw DomainError("smoothness constant must satisfy M > 1/(1-s_max)^2 = " +
                      std::to_string(floor));
  }
  ConvexityCertificate cert;
  cert.kind = CertKind::EigenSmoothness;
  cert.M = M;
  cert.s_max = s_max;
  cert.y_norm_sq = y.squaredNorm();
  const EigRange ev = eig_range(Ks);
  const EigRange evh = eig_range(Khat);
  cert.lambda_min = ev.min;
  cert.lambda_max = ev.max;
  cert.lambda_hat_min = evh.min;
  cert.lambda_hat_max = evh.max;
  if (!(ev.min > 0.0) || !(evh.min > 0.0)) {
    throw DomainError("certificate matrices must be positive definite");
  }

  const double num = M * (1.0 - s_max) * (1.0 - s_max) - 2.0 / evh.min +
                     1.0 / (evh.max * evh.max);
  const double den = 2.0 * (ev.max / ev.min - 1.0);
  cert.lhs = guarded_ratio(ev.min * evh.min * evh.min, num, den);
  cert.holds = cert.lhs > cert.y_norm_sq;
  return cert;
}

ConvexityCertificate smoothness_cert_dd(const Eigen::MatrixXd& K0,
                                        const Eigen::VectorXd& y, double M,
                                        double s_max) {
  if (!(M > 0.0)) throw DomainError("smoothness constant M must be > 0");
  const double cap = 1.0 - std::sqrt(1.0 / M);
  if (!(s_max >= 0.0) || s_max > cap) {
    throw DomainError("s_max must satisfy s_max <= 1 - sqrt(1/M) = " +
                      std::to_string(cap));
  }
  ConvexityCertificate cert;
  cert.kind = CertKind::DdSmoothness;
  cert.M = M;
  cert.s_max = s_max;
  cert.y_norm_sq = y.squaredNorm();
  cert.delta = diag_dominance_delta(K0);
  const EigRange ev = eig_range(K0);
  cert.lambda_min = ev.min;
  cert.lambda_max = ev.max;

  const double d = cert.delta;
  const double num = M * (1.0 - s_max) * (1.0 - s_max) - 2.0 / (1.0 - d) +
                     1.0 / ((1.0 + d) * (1.0 + d));
  const double den = 2.0 * ((1.0 + d) / (1.0 - d) - 1.0);
  cert.lhs = guarded_ratio(cert.lambda_min * (1.0 - d) * (1.0 - d), num, den);
  cert.holds = cert.lhs >= cert.y_norm_sq;
  return cert;
}

ApproxRatioResult approximation_ratio_check(const Dataset& data,
                                            const Hyperparameters& hyper,
                                            int r, double m, double M,
                                            double s_max, KernelKind kind,
                                            double tolerance) {
  const Index n = data.n();
  if (r < 0) throw DomainError("sparsity r must be >= 0");
  if (2 * r > n) {
    throw DomainError("the guarantee requires 2r <= n");
  }
  if (n > 14 || binom(static_cast<int>(n), r) > binom(14, 4)) {
    throw DomainError("enumeration budget exceeded (need n <= 14 and "
                      "C(n, r) <= C(14, 4))");
  }

  ApproxRatioResult out;
  out.bound = 1.0 - std::exp(-m / M);
  if (r == 0) {
    out.ratio = 1.0;
    out.passes = true;
    return out;
  }

  SupportOptConfig sc;
  sc.joint_hyper = false;  // the guarantee is for fixed hyperparameters
  sc.parameterization = Parameterization::Convex;
  sc.s_max = s_max;
  sc.opt.ftol = 1e-10;
  sc.opt.gtol = 1e-8;

  const double nmll0 =
      nmll_value(data, hyper, Eigen::VectorXd::Zero(n), kind);

  PursuitConfig pc;
  pc.kernel = kind;
  pc.joint_hyper = false;
  pc.fit_base_hyper = false;  // the guarantee is for the given theta
  pc.s_max = s_max;
  pc.opt = sc.opt;
  const PursuitResult greedy =
      forward_pursuit(data, hyper, Schedule::one_at_a_time(r),
                      SizePrior::uniform(), /*use_bms=*/false, pc);
  out.greedy_support = greedy.selected.support;
  out.greedy_value = nmll0 - greedy.selected.nmll;

  // exhaustive optimum over all supports of size r, lexicographic order
  std::vector<Index> comb(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) comb[static_cast<std::size_t>(i)] = i;
  double best = -kInf;
  std::vector<Index> best_support;
  while (true) {
    const SupportOptResult fit = optimize_rho_on_support(
        data, hyper, comb, Eigen::VectorXd::Zero(r), kind, sc);
    const double value = nmll0 - fit.nmll;
    if (value > best) {  // strict: ties keep the lexicographically first
      best = value;
      best_support = comb;
    }
    // next combination
    int i = r - 1;
    while (i >= 0 &&
           comb[static_cast<std::size_t>(i)] == n - r + i) {
      --i;
    }
    if (i < 0) break;
    ++comb[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < r; ++j) {
      comb[static_cast<std::size_t>(j)] =
          comb[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  // the greedy point is feasible for its own support, so the true optimum
  // can never lie below it
  if (out.greedy_value > best) {
    best = out.greedy_value;
    best_support = out.greedy_support;
  }
  out.opt_value = best;
  out.opt_support = best_support;

  out.ratio = best <= 1e-12 ? 1.0 : out.greedy_value / best;
  out.passes = out.ratio >= out.bound - tolerance;
  return out;
}

TheoryInstance make_certified_instance(std::uint64_t seed, Index n,
                                       KernelKind kind) {
  if (n < 2) throw DomainError("certified instances need n >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  TheoryInstance inst;
  inst.kernel = kind;
  // well-separated 1-d inputs keep the kernel matrix near diagonal
  inst.data.X.resize(n, 1);
  for (Index i = 0; i < n; ++i) {
    inst.data.X(i, 0) = 2.0 * static_cast<double>(i) + 0.5 * unit(rng);
  }
  inst.hyper = Hyperparameters::isotropic(1, 0.25, 1.0, 0.25);

  inst.m = 0.05 + 0.25 * unit(rng);
  inst.s_max = 0.3 + 0.3 * unit(rng);
  inst.M = 1.5 / ((1.0 - inst.s_max) * (1.0 - inst.s_max));

  inst.data.y.resize(n);
  for (Index i = 0; i < n; ++i) inst.data.y[i] = 1.5 * gauss(rng);

  const Eigen::MatrixXd K0 = base_cov_matrix(inst.data, inst.hyper, kind);
  ConvexityCertificate conv = convexity_cert_dd(K0, inst.data.y, inst.m);
  ConvexityCertificate smooth =
      smoothness_cert_dd(K0, inst.data.y, inst.M, inst.s_max);
  const double budget = std::min(conv.lhs, smooth.lhs);
  if (std::isfinite(budget) && conv.y_norm_sq > 0.8 * budget) {
    inst.data.y *= std::sqrt(0.8 * budget / conv.y_norm_sq);
    conv = convexity_cert_dd(K0, inst.data.y, inst.m);
    smooth = smoothness_cert_dd(K0, inst.data.y, inst.M, inst.s_max);
  }
  inst.cert_convexity = conv;
  inst.cert_smoothness = smooth;
  return inst;
}

SweepResult hessian_bound_sweep(const TheoryInstance& instance, int samples,
                                std::uint64_t seed) {
  const Index n = instance.data.n();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::VectorXd k0_diag =
      base_cov_matrix(instance.data, instance.hyper, instance.kernel)
          .diagonal();

  SweepResult out;
  out.samples = samples;
  out.worst_convexity_gap = kInf;
  out.worst_smoothness_gap = kInf;
  out.worst_eigen_convexity_gap = kInf;
  out.worst_eigen_smoothness_gap = kInf;

  auto hessian_neg2l = [&](const Eigen::VectorXd& s, double cap,
                           FittedState* state_out) {
    SParam sp;
    sp.s = s;
    sp.k0_diag = k0_diag;
    sp.s_max = cap;
    const Eigen::VectorXd rho = rho_from_s(sp);
    FittedState state =
        fit_state(instance.data, instance.hyper, rho, instance.kernel);
    const Eigen::MatrixXd H = 2.0 * nmll_hessian_s(state, sp);
    if (state_out) *state_out = std::move(state);
    return H;
  };

  for (int t = 0; t < samples; ++t) {
    // convexity holds on the whole open box; probe close to its edge
    Eigen::VectorXd s_conv(n), s_smooth(n);
    for (Index i = 0; i < n; ++i) {
      s_conv[i] = 0.999 * unit(rng);
      s_smooth[i] = instance.s_max * unit(rng);
    }

    FittedState state_conv;
    const Eigen::MatrixXd H_conv = hessian_neg2l(s_conv, 0.999, &state_conv);
    const EigRange ev_conv = eig_range(H_conv);
    out.worst_convexity_gap =
        std::min(out.worst_convexity_gap, ev_conv.min - instance.m);

    const Eigen::ArrayXd diag_conv = state_conv.cov.diagonal().array();
    const Eigen::MatrixXd Khat_conv =
        (diag_conv.rsqrt().matrix().asDiagonal() * state_conv.cov *
         diag_conv.rsqrt().matrix().asDiagonal());
    const ConvexityCertificate ce = convexity_cert_eigen(
        state_conv.cov, Khat_conv, instance.data.y, instance.m);
    if (ce.holds) {
      ++out.eigen_convexity_checked;
      out.worst_eigen_convexity_gap =
          std::min(out.worst_eigen_convexity_gap, ev_conv.min - instance.m);
    }

    FittedState state_smooth;
    const Eigen::MatrixXd H_smooth =
        hessian_neg2l(s_smooth, instance.s_max, &state_smooth);
    const EigRange ev_smooth = eig_range(H_smooth);
    out.worst_smoothness_gap =
        std::min(out.worst_smoothness_gap, instance.M - ev_smooth.max);

    const Eigen::ArrayXd diag_smooth = state_smooth.cov.diagonal().array();
    const Eigen::MatrixXd Khat_smooth =
        (diag_smooth.rsqrt().matrix().asDiagonal() * state_smooth.cov *
         diag_smooth.rsqrt().matrix().asDiagonal());
    const ConvexityCertificate se =
        smoothness_cert_eigen(state_smooth.cov, Khat_smooth, instance.data.y,
                              instance.M, instance.s_max);
    if (se.holds) {
      ++out.eigen_smoothness_checked;
      out.worst_eigen_smoothness_gap = std::min(
          out.worst_eigen_smoothness_gap, instance.M - ev_smooth.max);
    }
  }
  return out;
}

std::vector<LandscapePoint> hessian_landscape_probe(
    const Dataset& data, const Hyperparameters& hyper,
    const std::vector<Eigen::VectorXd>& grid,
    Parameterization parameterization, KernelKind kind) {
  const Index n = data.n();
  if (n > 50) throw DomainError("landscape probe is limited to n <= 50");

  const Eigen::VectorXd k0_diag =
      base_cov_matrix(data, hyper, kind).diagonal();
  std::vector<LandscapePoint> out;
  out.reserve(grid.size());
  for (const Eigen::VectorXd& point : grid) {
    if (point.size() != n) {
      throw DimensionError("grid point size does not match the dataset");
    }
    Eigen::MatrixXd H;
    if (parameterization == Parameterization::Canonical) {
      const FittedState state = fit_state(data, hyper, point, kind);
      H = 2.0 * nmll_hessian_rho(state);
    } else {
      if (!(point.array() >= 0.0).all() || !(point.array() < 1.0).all()) {
        throw DomainError("s grid points must lie in [0, 1)");
      }
      SParam sp;
      sp.s = point;
      sp.k0_diag = k0_diag;
      sp.s_max = std::max(point.maxCoeff(), 0.0);
      const Eigen::VectorXd rho = rho_from_s(sp);
      const FittedState state = fit_state(data, hyper, rho, kind);
      H = 2.0 * nmll_hessian_s(state, sp);
    }
    const EigRange ev = eig_range(H);
    out.push_back({ev.min, ev.max});
  }
  return out;
}

}  // namespace rrp
