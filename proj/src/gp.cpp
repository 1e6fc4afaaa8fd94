#include "rrp/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace rrp {

namespace {

void check_rho(const Eigen::VectorXd& rho, Index n) {
  if (rho.size() != n) {
    throw DimensionError("rho has " + std::to_string(rho.size()) +
                         " entries for " + std::to_string(n) + " data points");
  }
  if (!(rho.array() >= 0.0).all() || !rho.allFinite()) {
    throw DomainError("robust variances must be nonnegative and finite");
  }
}

}  // namespace

FittedState fit_state(const Dataset& data, const Hyperparameters& hyper,
                      const Eigen::VectorXd& rho, KernelKind kind) {
  hyper.validate();
  check_rho(rho, data.n());
  if (hyper.lengthscales.size() != data.d()) {
    throw DimensionError("got " + std::to_string(hyper.lengthscales.size()) +
                         " lengthscales for " + std::to_string(data.d()) +
                         " input dimensions");
  }

  FittedState state;
  state.cov = base_cov_matrix(data, hyper, kind);
  state.cov.diagonal() += rho;
  CholeskyResult chol = cholesky_with_jitter(state.cov);
  state.chol = std::move(chol.L);
  state.jitter = chol.jitter;
  state.y = data.y;
  state.rho = rho;
  state.mean_const = hyper.mean_const;

  const Eigen::VectorXd centered = data.y.array() - hyper.mean_const;
  state.alpha = chol_solve(state.chol, centered);
  state.prec = chol_inverse(state.chol);
  state.log_det = chol_log_det(state.chol);

  const Index n = data.n();
  state.nmll = 0.5 * (centered.dot(state.alpha) + state.log_det +
                      static_cast<double>(n) * std::log(2.0 * std::numbers::pi));
  return state;
}

double nmll_value(const Dataset& data, const Hyperparameters& hyper,
                  const Eigen::VectorXd& rho, KernelKind kind) {
  hyper.validate();
  check_rho(rho, data.n());
  Eigen::MatrixXd cov = base_cov_matrix(data, hyper, kind);
  cov.diagonal() += rho;
  const CholeskyResult chol = cholesky_with_jitter(cov);
  const Eigen::VectorXd centered = data.y.array() - hyper.mean_const;
  const Eigen::VectorXd alpha = chol_solve(chol.L, centered);
  return 0.5 * (centered.dot(alpha) + chol_log_det(chol.L) +
                static_cast<double>(data.n()) *
                    std::log(2.0 * std::numbers::pi));
}

LooMoments loo_mean_var(const FittedState& state) {
  const Eigen::VectorXd pd = state.prec.diagonal();
  if (!(pd.array() > 0.0).all()) {
    throw DomainError(
        "precision diagonal has nonpositive entries; covariance is "
        "numerically degenerate");
  }
  LooMoments out;
  out.var = pd.cwiseInverse();
  out.mean = state.y - state.alpha.cwiseQuotient(pd);
  return out;
}

Prediction posterior_predict(const FittedState& state, const Dataset& data,
                             const Hyperparameters& hyper, KernelKind kind,
                             const Eigen::MatrixXd& Xstar,
                             bool observational) {
  if (Xstar.cols() != data.d()) {
    throw DimensionError("prediction inputs have " +
                         std::to_string(Xstar.cols()) + " columns, expected " +
                         std::to_string(data.d()));
  }
  const Eigen::MatrixXd Kstar = kernel_matrix(kind, data.X, Xstar, hyper);
  Prediction pred;
  pred.mean = (Kstar.transpose() * state.alpha).array() + hyper.mean_const;

  const Eigen::MatrixXd V =
      state.chol.triangularView<Eigen::Lower>().solve(Kstar);
  Eigen::VectorXd var =
      Eigen::VectorXd::Constant(Xstar.rows(), hyper.outputscale) -
      V.colwise().squaredNorm().transpose();
  var = var.cwiseMax(0.0);
  if (observational) var.array() += hyper.noise;
  pred.variance = var;
  return pred;
}

Eigen::VectorXd nmll_grad_hyper(const Dataset& data,
                                const Hyperparameters& hyper,
                                const Eigen::VectorXd& rho, KernelKind kind) {
  const Index d = data.d();
  const FittedState state = fit_state(data, hyper, rho, kind);
  // dnmll/dtheta = tr((P - alpha alpha^T) dSigma/dtheta) / 2 for covariance
  // parameters; the mean constant enters through the quadratic term only.
  const Eigen::MatrixXd A =
      state.prec - state.alpha * state.alpha.transpose();

  const KernelWithGrads kg = kernel_with_grads(kind, data.X, hyper);
  Eigen::VectorXd grad(d + 3);
  for (Index k = 0; k < d + 1; ++k) {
    grad[k] = 0.5 * A.cwiseProduct(kg.grads[static_cast<std::size_t>(k)]).sum();
  }
  // dSigma/dlog sigma^2 = sigma^2 I
  grad[d + 1] = 0.5 * hyper.noise * A.trace();
  grad[d + 2] = -state.alpha.sum();
  return grad;
}

Hyperparameters fit_hyperparameters(const Dataset& data,
                                    const Hyperparameters& init,
                                    const Eigen::VectorXd& rho,
                                    KernelKind kind,
                                    const BoxLbfgsConfig& config,
                                    const HyperBounds& bounds) {
  init.validate();
  const Index d = data.d();
  const Index dim = d + 3;

  auto pack = [&](const Hyperparameters& h) {
    Eigen::VectorXd x(dim);
    x.head(d) = h.lengthscales.array().log();
    x[d] = std::log(h.outputscale);
    x[d + 1] = std::log(std::max(h.noise, bounds.noise_min));
    x[d + 2] = h.mean_const;
    return x;
  };
  auto unpack = [&](const Eigen::VectorXd& x) {
    Hyperparameters h;
    h.lengthscales = x.head(d).array().exp();
    h.outputscale = std::exp(x[d]);
    h.noise = std::exp(x[d + 1]);
    h.mean_const = x[d + 2];
    return h;
  };

  Eigen::VectorXd lo(dim), hi(dim);
  lo.head(d).setConstant(std::log(bounds.lengthscale_min));
  hi.head(d).setConstant(std::log(bounds.lengthscale_max));
  lo[d] = std::log(bounds.outputscale_min);
  hi[d] = std::log(bounds.outputscale_max);
  lo[d + 1] = std::log(bounds.noise_min);
  hi[d + 1] = std::log(bounds.noise_max);
  lo[d + 2] = bounds.mean_min;
  hi[d + 2] = bounds.mean_max;

  auto objective = [&](const Eigen::VectorXd& x,
                       Eigen::VectorXd* grad) -> double {
    const Hyperparameters h = unpack(x);
    if (grad) *grad = nmll_grad_hyper(data, h, rho, kind);
    return nmll_value(data, h, rho, kind);
  };

  const BoxLbfgsResult res =
      minimize_box_lbfgs(objective, pack(init), lo, hi, config);
  return unpack(res.x);
}

Hyperparameters fit_hyperparameters_multistart(
    const Dataset& data, const Hyperparameters& init,
    const Eigen::VectorXd& rho, KernelKind kind, const BoxLbfgsConfig& config,
    const HyperBounds& bounds) {
  std::vector<Hyperparameters> starts{init};
  for (double ell : {0.1, 0.3, 1.0}) {
    for (double noise : {1e-2, 0.25}) {
      Hyperparameters h = Hyperparameters::isotropic(data.d(), ell, 1.0,
                                                     noise, init.mean_const);
      starts.push_back(h);
    }
  }
  Hyperparameters best;
  double best_nmll = std::numeric_limits<double>::infinity();
  for (const Hyperparameters& start : starts) {
    try {
      const Hyperparameters fitted =
          fit_hyperparameters(data, start, rho, kind, config, bounds);
      const double f = nmll_value(data, fitted, rho, kind);
      if (f < best_nmll) {
        best_nmll = f;
        best = fitted;
      }
    } catch (const Error&) {
      // a failed start is simply skipped
    }
  }
  if (!std::isfinite(best_nmll)) {
    throw OptimizationFailed("every hyperparameter start failed");
  }
  return best;
}

Standardizer Standardizer::fit(const Eigen::VectorXd& y) {
  Standardizer s;
  const Index n = y.size();
  if (n == 0) return s;
  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / static_cast<double>(n);
  const double sd = std::sqrt(var);
  if (sd < 1e-12) {
    s.degenerate = true;  // run on raw targets
    return s;
  }
  s.shift = mean;
  s.scale = sd;
  return s;
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& y) const {
  return (y.array() - shift) / scale;
}

double Standardizer::apply_noise_floor(double noise) const {
  return degenerate ? std::max(noise, 1e-6) : noise;
}

Prediction Standardizer::destandardize(const Prediction& p) const {
  Prediction out;
  out.mean = (p.mean.array() * scale) + shift;
  out.variance = p.variance * (scale * scale);
  return out;
}

}  // namespace rrp
