#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "rrp/gp.hpp"
#include "rrp/optimizer.hpp"

using namespace rrp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("cholesky_with_jitter ladder") {
  const MatrixXd I = MatrixXd::Identity(4, 4);
  const CholeskyResult id = cholesky_with_jitter(I);
  CHECK(id.jitter == 0.0);
  CHECK((id.L - I).lpNorm<Eigen::Infinity>() == 0.0);

  MatrixXd rank1(2, 2);
  rank1 << 1.0, 1.0, 1.0, 1.0;
  const CholeskyResult r1 = cholesky_with_jitter(rank1);
  CHECK(r1.jitter > 0.0);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd A(8, 8);
  for (Index i = 0; i < 8; ++i) {
    for (Index j = 0; j < 8; ++j) A(i, j) = gauss(rng);
  }
  const MatrixXd spd = A * A.transpose() + 0.5 * MatrixXd::Identity(8, 8);
  const CholeskyResult c = cholesky_with_jitter(spd);
  CHECK((c.L * c.L.transpose() - spd).lpNorm<Eigen::Infinity>() <= 1e-12 *
        spd.lpNorm<Eigen::Infinity>());

  MatrixXd indef(2, 2);
  indef << 1.0, 0.0, 0.0, -5.0;
  CHECK_THROWS_AS(cholesky_with_jitter(indef), NotPositiveDefinite);
  try {
    cholesky_with_jitter(indef);
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.last_pivot() < 0.0);
  }
}

TEST_CASE("nmll closed-form values") {
  // n = 1, Sigma = [[1]]: outputscale 0.5 + noise 0.5
  Dataset d;
  d.X = MatrixXd::Zero(1, 1);
  d.y = VectorXd::Zero(1);
  Hyperparameters h = Hyperparameters::isotropic(1, 1.0, 0.5, 0.5);
  const VectorXd rho0 = VectorXd::Zero(1);
  CHECK(nmll_value(d, h, rho0, KernelKind::Matern52) ==
        doctest::Approx(0.5 * std::log(2.0 * std::numbers::pi))
            .epsilon(1e-12));

  d.y[0] = 1.0;
  CHECK(nmll_value(d, h, rho0, KernelKind::Matern52) ==
        doctest::Approx(0.5 * (1.0 + std::log(2.0 * std::numbers::pi)))
            .epsilon(1e-12));
}

TEST_CASE("nmll matches the explicit-inverse oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    oracle::RandomInstance inst = oracle::random_instance(seed, 3, 2);
    inst.hyper.mean_const = 0.3;
    const VectorXd rho = oracle::random_rho(seed + 10, 3, 0.8);
    const MatrixXd K0 =
        base_cov_matrix(inst.data, inst.hyper, KernelKind::Matern52);
    const double expected =
        oracle::nmll_explicit(K0, inst.data.y, rho, inst.hyper.mean_const);
    CHECK(nmll_value(inst.data, inst.hyper, rho, KernelKind::Matern52) ==
          doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("fitted state invariants") {
  oracle::RandomInstance inst = oracle::random_instance(21, 9, 2);
  const VectorXd rho = oracle::random_rho(22, 9, 1.2);
  const FittedState st = fit_state(inst.data, inst.hyper, rho,
                                   KernelKind::Matern52);
  MatrixXd cov_j = st.cov;
  cov_j.diagonal().array() += st.jitter;
  CHECK((st.chol * st.chol.transpose() - cov_j).norm() <=
        1e-10 * cov_j.norm());
  const VectorXd centered = inst.data.y.array() - st.mean_const;
  CHECK((cov_j * st.alpha - centered).norm() <= 1e-8 * centered.norm());
  CHECK((st.prec_diag().array() > 0.0).all());
}

TEST_CASE("loo moments") {
  SUBCASE("single point reverts to the prior") {
    Dataset d;
    d.X = MatrixXd::Zero(1, 1);
    d.y = VectorXd::Constant(1, 3.0);
    Hyperparameters h = Hyperparameters::isotropic(1, 1.0, 1.0, 1.0);
    const FittedState st =
        fit_state(d, h, VectorXd::Zero(1), KernelKind::Matern52);
    const LooMoments loo = loo_mean_var(st);
    CHECK(loo.mean[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(loo.var[0] == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("delete-and-refit oracle, rho = 0") {
    for (Index n : {5, 8, 12}) {
      oracle::RandomInstance inst = oracle::random_instance(
          static_cast<std::uint64_t>(100 + n), n, 2);
      const VectorXd rho = VectorXd::Zero(n);
      const FittedState st =
          fit_state(inst.data, inst.hyper, rho, KernelKind::Matern52);
      const LooMoments loo = loo_mean_var(st);
      const oracle::LooOracle ref =
          oracle::loo_refit(inst.data, inst.hyper, rho, KernelKind::Matern52);
      for (Index i = 0; i < n; ++i) {
        CHECK(loo.mean[i] ==
              doctest::Approx(ref.mean[i]).epsilon(1e-8));
        CHECK(loo.var[i] == doctest::Approx(ref.var[i]).epsilon(1e-8));
      }
    }
  }

  SUBCASE("delete-and-refit with other points reweighted") {
    oracle::RandomInstance inst = oracle::random_instance(31, 6, 1);
    VectorXd rho = oracle::random_rho(32, 6, 2.0);
    rho[2] = 0.0;
    rho[4] = 0.0;
    const FittedState st =
        fit_state(inst.data, inst.hyper, rho, KernelKind::Matern52);
    const LooMoments loo = loo_mean_var(st);
    const oracle::LooOracle ref =
        oracle::loo_refit(inst.data, inst.hyper, rho, KernelKind::Matern52);
    for (Index i : {Index{2}, Index{4}}) {  // identities assume rho_i = 0
      CHECK(loo.mean[i] == doctest::Approx(ref.mean[i]).epsilon(1e-8));
      CHECK(loo.var[i] == doctest::Approx(ref.var[i]).epsilon(1e-8));
    }
  }

  SUBCASE("duplicated input pulls the loo mean toward the target") {
    Dataset d;
    d.X.resize(3, 1);
    d.X << 0.0, 0.0, 2.0;
    d.y.resize(3);
    d.y << 1.5, 1.5, -0.4;
    Hyperparameters h = Hyperparameters::isotropic(1, 1.0, 1.0, 0.1);
    const FittedState st =
        fit_state(d, h, VectorXd::Zero(3), KernelKind::Matern52);
    const LooMoments loo = loo_mean_var(st);
    const oracle::LooOracle ref =
        oracle::loo_refit(d, h, VectorXd::Zero(3), KernelKind::Matern52);
    CHECK(loo.mean[0] == doctest::Approx(ref.mean[0]).epsilon(1e-8));
    CHECK(std::abs(loo.mean[0] - d.y[0]) < std::abs(h.mean_const - d.y[0]));
  }
}

TEST_CASE("posterior prediction") {
  SUBCASE("noiseless interpolation at a training point") {
    oracle::RandomInstance inst = oracle::random_instance(41, 5, 1);
    inst.hyper.noise = 0.0;
    const FittedState st =
        fit_state(inst.data, inst.hyper, VectorXd::Zero(5), KernelKind::Rbf);
    const Prediction p = posterior_predict(st, inst.data, inst.hyper,
                                           KernelKind::Rbf,
                                           inst.data.X.row(2), false);
    CHECK(p.mean[0] == doctest::Approx(inst.data.y[2]).epsilon(1e-8));
    CHECK(p.variance[0] <= 1e-8);
  }

  SUBCASE("prior reversion far from the data") {
    oracle::RandomInstance inst = oracle::random_instance(43, 6, 1);
    inst.hyper.mean_const = -0.7;
    const FittedState st = fit_state(inst.data, inst.hyper, VectorXd::Zero(6),
                                     KernelKind::Matern52);
    MatrixXd far(1, 1);
    far << 1e3;
    const Prediction latent = posterior_predict(
        st, inst.data, inst.hyper, KernelKind::Matern52, far, false);
    CHECK(latent.mean[0] == doctest::Approx(-0.7).epsilon(1e-10));
    CHECK(latent.variance[0] ==
          doctest::Approx(inst.hyper.outputscale).epsilon(1e-10));
    const Prediction obs = posterior_predict(
        st, inst.data, inst.hyper, KernelKind::Matern52, far, true);
    CHECK(obs.variance[0] ==
          doctest::Approx(inst.hyper.outputscale + inst.hyper.noise)
              .epsilon(1e-10));
  }

  SUBCASE("explicit-inverse oracle") {
    oracle::RandomInstance inst = oracle::random_instance(47, 4, 2);
    const VectorXd rho = oracle::random_rho(48, 4, 0.6);
    const FittedState st =
        fit_state(inst.data, inst.hyper, rho, KernelKind::Matern52);
    MatrixXd Xs(3, 2);
    Xs << 0.1, 0.9, 1.2, 0.4, 1.9, 1.9;
    const Prediction p = posterior_predict(st, inst.data, inst.hyper,
                                           KernelKind::Matern52, Xs, true);

    MatrixXd S = base_cov_matrix(inst.data, inst.hyper, KernelKind::Matern52);
    S.diagonal() += rho;
    const MatrixXd Sinv = S.inverse();
    const MatrixXd Ks =
        kernel_matrix(KernelKind::Matern52, inst.data.X, Xs, inst.hyper);
    for (Index j = 0; j < 3; ++j) {
      const double mean_ref =
          inst.hyper.mean_const +
          Ks.col(j).dot(Sinv * (inst.data.y.array() - inst.hyper.mean_const)
                                   .matrix());
      const double var_ref = inst.hyper.outputscale -
                             Ks.col(j).dot(Sinv * Ks.col(j)) +
                             inst.hyper.noise;
      CHECK(p.mean[j] == doctest::Approx(mean_ref).epsilon(1e-9));
      CHECK(p.variance[j] == doctest::Approx(var_ref).epsilon(1e-9));
    }
  }

  SUBCASE("adding a training point never inflates the variance") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      oracle::RandomInstance inst = oracle::random_instance(60 + seed, 8, 2);
      MatrixXd Xs(6, 2);
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> unif(0.0, 2.0);
      for (Index i = 0; i < 6; ++i) {
        Xs(i, 0) = unif(rng);
        Xs(i, 1) = unif(rng);
      }
      Dataset smaller;
      smaller.X = inst.data.X.topRows(7);
      smaller.y = inst.data.y.head(7);
      const FittedState st_small = fit_state(
          smaller, inst.hyper, VectorXd::Zero(7), KernelKind::Matern52);
      const FittedState st_full = fit_state(
          inst.data, inst.hyper, VectorXd::Zero(8), KernelKind::Matern52);
      const Prediction p_small = posterior_predict(
          st_small, smaller, inst.hyper, KernelKind::Matern52, Xs, false);
      const Prediction p_full = posterior_predict(
          st_full, inst.data, inst.hyper, KernelKind::Matern52, Xs, false);
      for (Index j = 0; j < 6; ++j) {
        CHECK(p_full.variance[j] <= p_small.variance[j] + 1e-9);
      }
    }
  }
}

TEST_CASE("hyperparameter gradient") {
  SUBCASE("finite differences") {
    oracle::RandomInstance inst = oracle::random_instance(71, 6, 2);
    const VectorXd rho = oracle::random_rho(72, 6, 0.5);
    for (KernelKind kind : {KernelKind::Matern52, KernelKind::Rbf}) {
      const VectorXd g = nmll_grad_hyper(inst.data, inst.hyper, rho, kind);
      auto f = [&](const VectorXd& x) {
        Hyperparameters h;
        h.lengthscales = x.head(2).array().exp();
        h.outputscale = std::exp(x[2]);
        h.noise = std::exp(x[3]);
        h.mean_const = x[4];
        return nmll_value(inst.data, h, rho, kind);
      };
      VectorXd x0(5);
      x0 << inst.hyper.lengthscales.array().log().matrix(),
          std::log(inst.hyper.outputscale), std::log(inst.hyper.noise),
          inst.hyper.mean_const;
      const VectorXd fd = oracle::fd_gradient(f, x0, 1e-5);
      const double scale = std::max(1.0, fd.lpNorm<Eigen::Infinity>());
      CHECK((g - fd).lpNorm<Eigen::Infinity>() / scale < 1e-5);
    }
  }

  SUBCASE("zero targets make shrinking the signal variance attractive") {
    oracle::RandomInstance inst = oracle::random_instance(73, 6, 1);
    inst.data.y.setZero();
    const VectorXd g = nmll_grad_hyper(inst.data, inst.hyper,
                                       VectorXd::Zero(6), KernelKind::Rbf);
    CHECK(g[1] > 0.0);  // d nmll / d log outputscale
  }
}

TEST_CASE("fit_hyperparameters") {
  SUBCASE("recovers a known lengthscale") {
    // draw from a GP with known hyperparameters
    const Index n = 60;
    Dataset d;
    d.X.resize(n, 1);
    std::mt19937_64 rng(81);
    std::uniform_real_distribution<double> unif(0.0, 6.0);
    for (Index i = 0; i < n; ++i) d.X(i, 0) = unif(rng);
    Hyperparameters truth = Hyperparameters::isotropic(1, 0.5, 1.0, 1e-2);
    const MatrixXd K0 = base_cov_matrix(d, truth, KernelKind::Matern52);
    const CholeskyResult chol = cholesky_with_jitter(K0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    VectorXd z(n);
    for (Index i = 0; i < n; ++i) z[i] = gauss(rng);
    d.y = chol.L * z;

    Hyperparameters init = Hyperparameters::defaults(1);
    const Hyperparameters fitted =
        fit_hyperparameters(d, init, VectorXd::Zero(n), KernelKind::Matern52);
    CHECK(std::abs(std::log(fitted.lengthscales[0]) - std::log(0.5)) < 0.5);

    // the fit is a fixed point: restarting from it barely moves the nmll
    const double f1 =
        nmll_value(d, fitted, VectorXd::Zero(n), KernelKind::Matern52);
    const Hyperparameters again =
        fit_hyperparameters(d, fitted, VectorXd::Zero(n), KernelKind::Matern52);
    const double f2 =
        nmll_value(d, again, VectorXd::Zero(n), KernelKind::Matern52);
    CHECK(f1 - f2 >= -1e-9);
    CHECK(f1 - f2 <= 1e-6 * std::max(1.0, std::abs(f1)));
  }

  SUBCASE("single-point dataset fits without error") {
    Dataset d;
    d.X = MatrixXd::Zero(1, 1);
    d.y = VectorXd::Constant(1, 0.7);
    const Hyperparameters fitted = fit_hyperparameters(
        d, Hyperparameters::defaults(1), VectorXd::Zero(1),
        KernelKind::Matern52);
    CHECK(std::isfinite(
        nmll_value(d, fitted, VectorXd::Zero(1), KernelKind::Matern52)));
  }

  SUBCASE("projected gradient is small at a gtol-converged optimum") {
    oracle::RandomInstance inst = oracle::random_instance(91, 30, 1);
    BoxLbfgsConfig cfg;
    cfg.ftol = 0.0;  // force first-order convergence
    cfg.gtol = 1e-6;
    cfg.max_iters = 2000;
    HyperBounds bounds;
    const Hyperparameters fitted =
        fit_hyperparameters(inst.data, Hyperparameters::defaults(1),
                            VectorXd::Zero(30), KernelKind::Matern52, cfg,
                            bounds);
    const VectorXd g = nmll_grad_hyper(inst.data, fitted, VectorXd::Zero(30),
                                       KernelKind::Matern52);
    VectorXd x(4), lo(4), hi(4);
    x << std::log(fitted.lengthscales[0]), std::log(fitted.outputscale),
        std::log(fitted.noise), fitted.mean_const;
    lo << std::log(bounds.lengthscale_min), std::log(bounds.outputscale_min),
        std::log(bounds.noise_min), bounds.mean_min;
    hi << std::log(bounds.lengthscale_max), std::log(bounds.outputscale_max),
        std::log(bounds.noise_max), bounds.mean_max;
    const VectorXd projected =
        x - (x - g).cwiseMax(lo).cwiseMin(hi);
    CHECK(projected.lpNorm<Eigen::Infinity>() < 1e-4);
  }
}

TEST_CASE("box lbfgs basics") {
  SUBCASE("clipped quadratic") {
    auto f = [](const VectorXd& x, VectorXd* g) {
      if (g) (*g) = 2.0 * (x.array() - 3.0).matrix();
      return (x.array() - 3.0).square().sum();
    };
    const VectorXd lo = VectorXd::Zero(2);
    const VectorXd hi = VectorXd::Ones(2);
    const BoxLbfgsResult res =
        minimize_box_lbfgs(f, VectorXd::Constant(2, 0.2), lo, hi, {});
    CHECK(res.converged);
    CHECK(res.x[0] == doctest::Approx(1.0));
    CHECK(res.x[1] == doctest::Approx(1.0));
  }

  SUBCASE("rosenbrock") {
    auto f = [](const VectorXd& x, VectorXd* g) {
      const double a = 1.0 - x[0];
      const double b = x[1] - x[0] * x[0];
      if (g) {
        (*g)[0] = -2.0 * a - 400.0 * x[0] * b;
        (*g)[1] = 200.0 * b;
      }
      return a * a + 100.0 * b * b;
    };
    const VectorXd lo = VectorXd::Constant(2, -5.0);
    const VectorXd hi = VectorXd::Constant(2, 5.0);
    BoxLbfgsConfig cfg;
    cfg.max_iters = 5000;
    cfg.ftol = 1e-14;
    cfg.gtol = 1e-10;
    const BoxLbfgsResult res =
        minimize_box_lbfgs(f, VectorXd::Constant(2, -1.0), lo, hi, cfg);
    CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(res.x[1] == doctest::Approx(1.0).epsilon(1e-4));
  }

  SUBCASE("non-finite start throws") {
    auto f = [](const VectorXd&, VectorXd* g) {
      if (g) g->setZero();
      return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(minimize_box_lbfgs(f, VectorXd::Zero(1),
                                       VectorXd::Constant(1, -1.0),
                                       VectorXd::Ones(1), {}),
                    OptimizationFailed);
  }
}

TEST_CASE("standardizer") {
  VectorXd y(4);
  y << 2.0, 4.0, 6.0, 8.0;
  const Standardizer s = Standardizer::fit(y);
  const VectorXd z = s.apply(y);
  CHECK(z.mean() == doctest::Approx(0.0));
  CHECK(z.array().square().mean() == doctest::Approx(1.0));

  Prediction p;
  p.mean = z;
  p.variance = VectorXd::Ones(4);
  const Prediction back = s.destandardize(p);
  CHECK((back.mean - y).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(back.variance[0] == doctest::Approx(s.scale * s.scale));

  const Standardizer flat = Standardizer::fit(VectorXd::Constant(3, 5.0));
  CHECK(flat.degenerate);
  CHECK(flat.apply(VectorXd::Constant(3, 5.0))[0] == doctest::Approx(5.0));
  CHECK(flat.apply_noise_floor(0.0) == doctest::Approx(1e-6));
}
