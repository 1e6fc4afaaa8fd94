#include "rrp/robust.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace rrp {

RobustVariances RobustVariances::from_rho(Eigen::VectorXd rho) {
  if (!(rho.array() >= 0.0).all() || !rho.allFinite()) {
    throw DomainError("robust variances must be nonnegative and finite");
  }
  RobustVariances rv;
  rv.rho = std::move(rho);
  for (Index i = 0; i < rv.rho.size(); ++i) {
    if (rv.rho[i] > 0.0) rv.support.push_back(i);
  }
  return rv;
}

Eigen::VectorXd rho_from_s(const SParam& sparam) {
  if (sparam.s.size() != sparam.k0_diag.size()) {
    throw DimensionError("s and k0_diag sizes differ");
  }
  if (!(sparam.s.array() >= 0.0).all() ||
      !(sparam.s.array() <= sparam.s_max).all() || sparam.s_max >= 1.0) {
    throw DomainError("s must lie in [0, s_max] with s_max < 1");
  }
  return sparam.k0_diag.array() *
         ((1.0 - sparam.s.array()).inverse() - 1.0);
}

Eigen::VectorXd s_from_rho(const Eigen::VectorXd& rho,
                           const Eigen::VectorXd& k0_diag) {
  if (rho.size() != k0_diag.size()) {
    throw DimensionError("rho and k0_diag sizes differ");
  }
  if (!(rho.array() >= 0.0).all()) {
    throw DomainError("rho must be nonnegative");
  }
  return rho.array() / (rho.array() + k0_diag.array());
}

double optimal_rho_single(const FittedState& state, Index i) {
  const Index n = state.alpha.size();
  if (i < 0 || i >= n) {
    throw DomainError("index " + std::to_string(i) + " out of range for n = " +
                      std::to_string(n));
  }
  const double p = state.prec(i, i);
  const double resid = state.alpha[i] / p;  // y_i - loo mean
  const double loo_var = 1.0 / p;
  return std::max(0.0, resid * resid - loo_var);
}

double mll_gain(const FittedState& state, Index i) {
  const Index n = state.alpha.size();
  if (i < 0 || i >= n) {
    throw DomainError("index " + std::to_string(i) + " out of range for n = " +
                      std::to_string(n));
  }
  if (state.rho[i] != 0.0) {
    throw DomainError("mll_gain requires rho_i = 0 but index " +
                      std::to_string(i) + " is already in the support");
  }
  const double g = state.alpha[i] * state.alpha[i] / state.prec(i, i);
  if (g <= 1.0) return 0.0;
  return 0.5 * (g - 1.0 - std::log(g));
}

Eigen::VectorXd mll_gains(const FittedState& state) {
  const Index n = state.alpha.size();
  Eigen::VectorXd gains = Eigen::VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (state.rho[i] > 0.0) continue;
    const double g = state.alpha[i] * state.alpha[i] / state.prec(i, i);
    if (g > 1.0) gains[i] = 0.5 * (g - 1.0 - std::log(g));
  }
  return gains;
}

Eigen::VectorXd nmll_grad_rho(const FittedState& state) {
  return 0.5 * (state.prec.diagonal().array() -
                state.alpha.array().square())
                   .matrix();
}

Eigen::MatrixXd nmll_hessian_rho(const FittedState& state) {
  const Eigen::MatrixXd outer = state.alpha * state.alpha.transpose();
  Eigen::MatrixXd H =
      0.5 * (2.0 * outer.cwiseProduct(state.prec) -
             state.prec.cwiseProduct(state.prec));
  return 0.5 * (H + H.transpose());
}

Eigen::MatrixXd nmll_hessian_s(const FittedState& state,
                               const SParam& sparam) {
  const Index n = state.alpha.size();
  const Eigen::VectorXd rho_check = rho_from_s(sparam);
  if ((rho_check - state.rho).lpNorm<Eigen::Infinity>() >
      1e-8 * (1.0 + state.rho.lpNorm<Eigen::Infinity>())) {
    throw DomainError("sparam does not reproduce the state's rho");
  }

  const Eigen::ArrayXd diag = state.cov.diagonal().array();
  const Eigen::ArrayXd root = diag.sqrt();
  // Khat^{-1} = D^{1/2} Sigma^{-1} D^{1/2}, alpha_hat = D^{1/2} alpha
  Eigen::MatrixXd Khi =
      root.matrix().asDiagonal() * state.prec * root.matrix().asDiagonal();
  const Eigen::VectorXd alpha_hat = (root * state.alpha.array()).matrix();

  Eigen::MatrixXd bracket =
      2.0 * (alpha_hat * alpha_hat.transpose())
                .cwiseProduct(Khi - Eigen::MatrixXd::Identity(n, n)) -
      Khi.cwiseProduct(Khi);
  bracket.diagonal() += 2.0 * Khi.diagonal();

  const Eigen::ArrayXd scale = (1.0 - sparam.s.array()).inverse();
  Eigen::MatrixXd H =
      0.5 * (scale.matrix().asDiagonal() * bracket *
             scale.matrix().asDiagonal());
  return 0.5 * (H + H.transpose());
}

namespace {

// Shared objective for support-restricted optimization. The parameter
// vector is [coords on support..., hyper block...] with the hyper block
// present only under joint optimization.
struct SupportProblem {
  const Dataset& data;
  KernelKind kind;
  const std::vector<Index>& support;
  const SupportOptConfig& config;
  Hyperparameters frozen_hyper;     // used when joint_hyper is off
  Eigen::VectorXd canonical_rho_max;  // canonical box, fixed per call
  mutable double jitter_max = 0.0;

  Index d() const { return data.d(); }
  Index m() const { return static_cast<Index>(support.size()); }
  Index dim() const {
    return m() + (config.joint_hyper ? d() + 3 : Index{0});
  }

  Hyperparameters hyper_at(const Eigen::VectorXd& x) const {
    if (!config.joint_hyper) return frozen_hyper;
    const Index d_ = d();
    Hyperparameters h;
    h.lengthscales = x.segment(m(), d_).array().exp();
    h.outputscale = std::exp(x[m() + d_]);
    h.noise = std::exp(x[m() + d_ + 1]);
    h.mean_const = x[m() + d_ + 2];
    return h;
  }

  Eigen::VectorXd rho_at(const Eigen::VectorXd& x,
                         const Hyperparameters& h) const {
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(data.n());
    const double k0d = h.outputscale + h.noise;  // stationary kernel diagonal
    for (Index j = 0; j < m(); ++j) {
      if (config.parameterization == Parameterization::Convex) {
        rho[support[static_cast<std::size_t>(j)]] =
            k0d * (1.0 / (1.0 - x[j]) - 1.0);
      } else {
        rho[support[static_cast<std::size_t>(j)]] = x[j];
      }
    }
    return rho;
  }

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    const Hyperparameters h = hyper_at(x);
    const Eigen::VectorXd rho = rho_at(x, h);
    if (!grad) return nmll_value(data, h, rho, kind);

    const FittedState state = fit_state(data, h, rho, kind);
    jitter_max = std::max(jitter_max, state.jitter);
    const Eigen::VectorXd grho = nmll_grad_rho(state);

    grad->resize(dim());
    const double k0d = h.outputscale + h.noise;
    for (Index j = 0; j < m(); ++j) {
      const Index idx = support[static_cast<std::size_t>(j)];
      if (config.parameterization == Parameterization::Convex) {
        const double drho_ds = k0d / ((1.0 - x[j]) * (1.0 - x[j]));
        (*grad)[j] = grho[idx] * drho_ds;
      } else {
        (*grad)[j] = grho[idx];
      }
    }
    if (config.joint_hyper) {
      const Index d_ = d();
      const Eigen::MatrixXd A =
          state.prec - state.alpha * state.alpha.transpose();
      const KernelWithGrads kg = kernel_with_grads(kind, data.X, h);
      for (Index k = 0; k < d_ + 1; ++k) {
        (*grad)[m() + k] =
            0.5 * A.cwiseProduct(kg.grads[static_cast<std::size_t>(k)]).sum();
      }
      (*grad)[m() + d_ + 1] = 0.5 * h.noise * A.trace();
      (*grad)[m() + d_ + 2] = -state.alpha.sum();
      if (config.parameterization == Parameterization::Convex) {
        // rho depends on the kernel diagonal, which moves with sf2 and
        // sigma^2 under the convex parameterization.
        double cross_sf2 = 0.0, cross_noise = 0.0;
        for (Index j = 0; j < m(); ++j) {
          const Index idx = support[static_cast<std::size_t>(j)];
          const double c = 1.0 / (1.0 - x[j]) - 1.0;
          cross_sf2 += grho[idx] * h.outputscale * c;
          cross_noise += grho[idx] * h.noise * c;
        }
        (*grad)[m() + d_] += cross_sf2;
        (*grad)[m() + d_ + 1] += cross_noise;
      }
    }
    return state.nmll;
  }
};

}  // namespace

SupportOptResult optimize_rho_on_support(const Dataset& data,
                                         const Hyperparameters& hyper,
                                         const std::vector<Index>& support,
                                         const Eigen::VectorXd& init_s,
                                         KernelKind kind,
                                         const SupportOptConfig& config) {
  hyper.validate();
  const Index n = data.n();
  for (Index idx : support) {
    if (idx < 0 || idx >= n) {
      throw DomainError("support index " + std::to_string(idx) +
                        " out of range for n = " + std::to_string(n));
    }
  }
  if (!(config.s_max > 0.0) || !(config.s_max < 1.0)) {
    throw DomainError("s_max must lie in (0, 1)");
  }
  const Index m = static_cast<Index>(support.size());
  if (init_s.size() != m) {
    throw DimensionError("init_s has " + std::to_string(init_s.size()) +
                         " entries for a support of size " +
                         std::to_string(m));
  }
  if (!(init_s.array() >= 0.0).all() ||
      !(init_s.array() <= config.s_max).all()) {
    throw DomainError("init_s must lie within [0, s_max]");
  }

  SupportProblem problem{data, kind, support, config, hyper, {}};
  const double init_k0d = hyper.outputscale + hyper.noise;

  const Index dim = problem.dim();
  Eigen::VectorXd x0(dim), lo(dim), hi(dim);
  if (config.parameterization == Parameterization::Convex) {
    x0.head(m) = init_s;
    lo.head(m).setZero();
    hi.head(m).setConstant(config.s_max);
  } else {
    const double rho_cap = init_k0d * (config.s_max / (1.0 - config.s_max));
    x0.head(m) = init_k0d * ((1.0 - init_s.array()).inverse() - 1.0);
    lo.head(m).setZero();
    hi.head(m).setConstant(rho_cap);
  }
  if (config.joint_hyper) {
    const Index d = data.d();
    x0.segment(m, d) = hyper.lengthscales.array().log();
    x0[m + d] = std::log(hyper.outputscale);
    x0[m + d + 1] = std::log(std::max(hyper.noise, config.bounds.noise_min));
    x0[m + d + 2] = hyper.mean_const;
    lo.segment(m, d).setConstant(std::log(config.bounds.lengthscale_min));
    hi.segment(m, d).setConstant(std::log(config.bounds.lengthscale_max));
    lo[m + d] = std::log(config.bounds.outputscale_min);
    hi[m + d] = std::log(config.bounds.outputscale_max);
    lo[m + d + 1] = std::log(config.bounds.noise_min);
    hi[m + d + 1] = std::log(config.bounds.noise_max);
    lo[m + d + 2] = config.bounds.mean_min;
    hi[m + d + 2] = config.bounds.mean_max;
  }

  const BoxLbfgsResult res = minimize_box_lbfgs(
      [&problem](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        return problem(x, g);
      },
      x0, lo, hi, config.opt);

  SupportOptResult out;
  out.hyper = problem.hyper_at(res.x);
  out.rho = problem.rho_at(res.x, out.hyper);
  out.nmll = res.f;
  out.jitter_max = problem.jitter_max;
  out.iterations = res.iterations;
  return out;
}

}  // namespace rrp
