#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rrp/robust.hpp"

using namespace rrp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
FittedState state_of(const oracle::RandomInstance& inst, const VectorXd& rho,
                     KernelKind kind = KernelKind::Matern52) {
  return fit_state(inst.data, inst.hyper, rho, kind);
}
}  // namespace

TEST_CASE("rho/s reparameterization") {
  SParam sp;
  sp.k0_diag = (VectorXd(3) << 2.0, 1.0, 1.0).finished();
  sp.s = (VectorXd(3) << 0.0, 0.5, 0.9).finished();
  sp.s_max = 0.95;
  const VectorXd rho = rho_from_s(sp);
  CHECK(rho[0] == 0.0);
  CHECK(rho[1] == doctest::Approx(1.0));
  CHECK(rho[2] == doctest::Approx(9.0));

  // rho = k0_diag maps to s = 1/2
  const VectorXd s =
      s_from_rho((VectorXd(3) << 0.0, 1.0, 2.0).finished(), sp.k0_diag);
  CHECK(s[0] == 0.0);
  CHECK(s[1] == doctest::Approx(0.5));  // rho equals the diagonal entry
  CHECK(s[2] == doctest::Approx(2.0 / 3.0));

  SParam bad = sp;
  bad.s[1] = 1.2;
  bad.s_max = 0.999;
  CHECK_THROWS_AS(rho_from_s(bad), DomainError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 5.0);
  for (int t = 0; t < 50; ++t) {
    VectorXd r(4), k0(4);
    for (int i = 0; i < 4; ++i) {
      r[i] = unif(rng);
      k0[i] = 0.5 + unif(rng);
    }
    SParam round;
    round.s = s_from_rho(r, k0);
    round.k0_diag = k0;
    round.s_max = 1.0 - 1e-9;
    const VectorXd back = rho_from_s(round);
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(back[i] - r[i]) <= 1e-12 * std::max(1.0, r[i]));
    }
  }
}

TEST_CASE("optimal_rho_single") {
  SUBCASE("vanishes when the target sits at the loo mean") {
    // far-apart points: the loo prediction reverts to the prior mean
    Dataset d;
    d.X.resize(2, 1);
    d.X << 0.0, 1e4;
    d.y.resize(2);
    d.y << 0.0, 1.3;
    Hyperparameters h = Hyperparameters::isotropic(1, 1.0, 1.0, 0.1);
    const FittedState st =
        fit_state(d, h, VectorXd::Zero(2), KernelKind::Matern52);
    CHECK(optimal_rho_single(st, 0) == 0.0);
  }

  SUBCASE("plug-in residual") {
    oracle::RandomInstance inst = oracle::random_instance(7, 6, 2);
    FittedState st = state_of(inst, VectorXd::Zero(6));
    LooMoments loo = loo_mean_var(st);
    // the loo mean at i does not depend on y_i, so we can place y_i exactly
    inst.data.y[3] = loo.mean[3] + std::sqrt(loo.var[3] + 3.7);
    st = state_of(inst, VectorXd::Zero(6));
    CHECK(optimal_rho_single(st, 3) == doctest::Approx(3.7).epsilon(1e-9));
  }

  SUBCASE("matches a dense log-grid search") {
    for (Index n = 2; n <= 8; ++n) {
      oracle::RandomInstance inst =
          oracle::random_instance(200 + static_cast<std::uint64_t>(n), n, 1);
      inst.data.y *= 2.0;  // make positive optima likely
      const VectorXd rho_base =
          oracle::random_rho(300 + static_cast<std::uint64_t>(n), n, 0.5, 0.3);
      const Index i = n / 2;
      VectorXd rho = rho_base;
      rho[i] = 0.0;
      const FittedState st = state_of(inst, rho);
      const double rho_star = optimal_rho_single(st, i);

      VectorXd rho_cf = rho;
      rho_cf[i] = rho_star;
      const double f_cf =
          nmll_value(inst.data, inst.hyper, rho_cf, KernelKind::Matern52);
      const oracle::GridBest grid = oracle::grid_best_rho(
          inst.data, inst.hyper, rho, i, KernelKind::Matern52);
      CHECK(f_cf <= grid.nmll + 1e-12);  // closed form is the true optimum
      CHECK(std::abs(f_cf - grid.nmll) <=
            1e-4 * std::max(1.0, std::abs(grid.nmll)));
    }
  }

  SUBCASE("index range") {
    oracle::RandomInstance inst = oracle::random_instance(11, 3, 1);
    const FittedState st = state_of(inst, VectorXd::Zero(3));
    CHECK_THROWS_AS(optimal_rho_single(st, 3), DomainError);
    CHECK_THROWS_AS(optimal_rho_single(st, -1), DomainError);
  }
}

TEST_CASE("mll_gain") {
  SUBCASE("zero gain at the loo mean") {
    Dataset d;
    d.X.resize(2, 1);
    d.X << 0.0, 1e4;
    d.y.resize(2);
    d.y << 0.0, -0.4;
    Hyperparameters h = Hyperparameters::isotropic(1, 1.0, 1.0, 0.1);
    const FittedState st =
        fit_state(d, h, VectorXd::Zero(2), KernelKind::Matern52);
    CHECK(mll_gain(st, 0) == 0.0);
  }

  SUBCASE("matches a full refactorization") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      oracle::RandomInstance inst = oracle::random_instance(400 + seed, 7, 2);
      inst.data.y *= 2.5;
      VectorXd rho = oracle::random_rho(500 + seed, 7, 1.0, 0.4);
      const Index i = static_cast<Index>(seed % 7);
      rho[i] = 0.0;
      const FittedState st = state_of(inst, rho);
      const double gain = mll_gain(st, i);
      VectorXd rho_new = rho;
      rho_new[i] = optimal_rho_single(st, i);
      const double direct =
          st.nmll - nmll_value(inst.data, inst.hyper, rho_new,
                               KernelKind::Matern52);
      CHECK(std::abs(gain - direct) <= 1e-8);
      CHECK(gain >= -1e-10);
    }
  }

  SUBCASE("an extreme outlier gets the largest gain") {
    oracle::RandomInstance inst = oracle::random_instance(21, 10, 1);
    inst.data.y = 0.1 * inst.data.y;
    inst.data.y[6] = 50.0;  // fifty sigma out
    const FittedState st = state_of(inst, VectorXd::Zero(10));
    const VectorXd gains = mll_gains(st);
    Index argmax = 0;
    gains.maxCoeff(&argmax);
    CHECK(argmax == 6);
  }

  SUBCASE("rejects indices already in the support") {
    oracle::RandomInstance inst = oracle::random_instance(23, 4, 1);
    VectorXd rho = VectorXd::Zero(4);
    rho[1] = 0.8;
    const FittedState st = state_of(inst, rho);
    CHECK_THROWS_AS(mll_gain(st, 1), DomainError);
    CHECK(mll_gains(st)[1] == 0.0);
  }
}

TEST_CASE("nmll_grad_rho") {
  SUBCASE("zero targets") {
    oracle::RandomInstance inst = oracle::random_instance(31, 5, 2);
    inst.data.y.setZero();
    const FittedState st = state_of(inst, VectorXd::Zero(5));
    const VectorXd g = nmll_grad_rho(st);
    CHECK((g.array() > 0.0).all());
    CHECK((g - 0.5 * st.prec.diagonal()).lpNorm<Eigen::Infinity>() < 1e-14);
  }

  SUBCASE("stationary at the single-coordinate optimum") {
    oracle::RandomInstance inst = oracle::random_instance(33, 6, 1);
    inst.data.y *= 3.0;
    VectorXd rho = VectorXd::Zero(6);
    const FittedState st0 = state_of(inst, rho);
    const Index i = 2;
    const double rho_star = optimal_rho_single(st0, i);
    REQUIRE(rho_star > 0.0);
    rho[i] = rho_star;
    const FittedState st1 = state_of(inst, rho);
    CHECK(std::abs(nmll_grad_rho(st1)[i]) <= 1e-8);
  }

  SUBCASE("finite differences") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      oracle::RandomInstance inst = oracle::random_instance(600 + seed, 6, 2);
      const VectorXd rho = oracle::random_rho(700 + seed, 6, 0.8, 1.0);
      const FittedState st = state_of(inst, rho);
      const VectorXd g = nmll_grad_rho(st);
      auto f = [&](const VectorXd& r) {
        return nmll_value(inst.data, inst.hyper, r, KernelKind::Matern52);
      };
      const VectorXd fd = oracle::fd_gradient(f, rho, 1e-5);
      CHECK((g - fd).lpNorm<Eigen::Infinity>() /
                std::max(1.0, fd.lpNorm<Eigen::Infinity>()) <
            1e-5);
    }
  }
}

TEST_CASE("nmll_hessian_rho") {
  SUBCASE("finite differences") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      oracle::RandomInstance inst = oracle::random_instance(800 + seed, 5, 2);
      const VectorXd rho = oracle::random_rho(900 + seed, 5, 0.6, 1.0);
      const FittedState st = state_of(inst, rho);
      const MatrixXd H = nmll_hessian_rho(st);
      auto f = [&](const VectorXd& r) {
        return nmll_value(inst.data, inst.hyper, r, KernelKind::Matern52);
      };
      const MatrixXd fd = oracle::fd_hessian(f, rho, 1e-4);
      CHECK((H - fd).lpNorm<Eigen::Infinity>() /
                std::max(1.0, fd.lpNorm<Eigen::Infinity>()) <
            1e-4);
    }
  }

  SUBCASE("zero targets give a negative semidefinite Hessian") {
    oracle::RandomInstance inst = oracle::random_instance(41, 5, 1);
    inst.data.y.setZero();
    const FittedState st = state_of(inst, VectorXd::Zero(5));
    const MatrixXd H = nmll_hessian_rho(st);
    const MatrixXd expected = -0.5 * st.prec.cwiseProduct(st.prec);
    CHECK((H - expected).lpNorm<Eigen::Infinity>() < 1e-14);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(H, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().maxCoeff() <= 1e-12);
    CHECK((H - H.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("nmll_hessian_s") {
  oracle::RandomInstance inst = oracle::random_instance(51, 5, 2);
  const VectorXd k0_diag =
      base_cov_matrix(inst.data, inst.hyper, KernelKind::Matern52).diagonal();
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> unif(0.05, 0.6);
  SParam sp;
  sp.s.resize(5);
  for (Index i = 0; i < 5; ++i) sp.s[i] = unif(rng);
  sp.k0_diag = k0_diag;
  sp.s_max = 0.9;

  const VectorXd rho = rho_from_s(sp);
  const FittedState st = state_of(inst, rho);
  const MatrixXd Hs = nmll_hessian_s(st, sp);

  SUBCASE("chain rule from the rho derivatives") {
    const VectorXd rp =
        (k0_diag.array() / (1.0 - sp.s.array()).square()).matrix();
    const VectorXd rpp =
        (2.0 * k0_diag.array() / (1.0 - sp.s.array()).cube()).matrix();
    const MatrixXd H_chain =
        MatrixXd(rp.asDiagonal()) * nmll_hessian_rho(st) *
            MatrixXd(rp.asDiagonal()) +
        MatrixXd(
            (nmll_grad_rho(st).array() * rpp.array()).matrix().asDiagonal());
    CHECK((Hs - H_chain).lpNorm<Eigen::Infinity>() /
              std::max(1.0, H_chain.lpNorm<Eigen::Infinity>()) <
          1e-8);
  }

  SUBCASE("finite differences in s") {
    auto f = [&](const VectorXd& s) {
      SParam q = sp;
      q.s = s;
      return nmll_value(inst.data, inst.hyper, rho_from_s(q),
                        KernelKind::Matern52);
    };
    const MatrixXd fd = oracle::fd_hessian(f, sp.s, 1e-4);
    CHECK((Hs - fd).lpNorm<Eigen::Infinity>() /
              std::max(1.0, fd.lpNorm<Eigen::Infinity>()) <
          1e-4);
  }

  SUBCASE("s = 0 drops the outer scaling") {
    SParam zero;
    zero.s = VectorXd::Zero(5);
    zero.k0_diag = k0_diag;
    zero.s_max = 0.9;
    const FittedState st0 = state_of(inst, VectorXd::Zero(5));
    const MatrixXd H0 = nmll_hessian_s(st0, zero);

    const Eigen::ArrayXd droot = st0.cov.diagonal().array().sqrt();
    const MatrixXd Khi = MatrixXd(droot.matrix().asDiagonal()) * st0.prec *
                         MatrixXd(droot.matrix().asDiagonal());
    const VectorXd ahat = (droot * st0.alpha.array()).matrix();
    MatrixXd bracket =
        2.0 * (ahat * ahat.transpose())
                  .cwiseProduct(Khi - MatrixXd::Identity(5, 5)) -
        Khi.cwiseProduct(Khi);
    bracket.diagonal() += 2.0 * Khi.diagonal();
    CHECK((H0 - 0.5 * bracket).lpNorm<Eigen::Infinity>() < 1e-12);
  }

  SUBCASE("rejects inconsistent sparam") {
    SParam wrong = sp;
    wrong.s[0] = 0.11 * wrong.s[0];
    CHECK_THROWS_AS(nmll_hessian_s(st, wrong), DomainError);
  }
}

TEST_CASE("optimize_rho_on_support") {
  SUBCASE("empty support returns the plain fit") {
    oracle::RandomInstance inst = oracle::random_instance(61, 6, 1);
    SupportOptConfig cfg;
    cfg.joint_hyper = false;
    const SupportOptResult res = optimize_rho_on_support(
        inst.data, inst.hyper, {}, VectorXd(0), KernelKind::Matern52, cfg);
    CHECK(res.rho.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(res.nmll == doctest::Approx(nmll_value(inst.data, inst.hyper,
                                                 VectorXd::Zero(6),
                                                 KernelKind::Matern52)));
  }

  SUBCASE("single support coordinate matches the closed form") {
    oracle::RandomInstance inst = oracle::random_instance(63, 7, 1);
    inst.data.y *= 3.0;
    const FittedState st0 = state_of(inst, VectorXd::Zero(7));
    const Index i = 4;
    const double rho_star = optimal_rho_single(st0, i);
    REQUIRE(rho_star > 0.1);

    SupportOptConfig cfg;
    cfg.joint_hyper = false;
    cfg.opt.ftol = 1e-12;
    cfg.opt.gtol = 1e-10;
    const SupportOptResult res = optimize_rho_on_support(
        inst.data, inst.hyper, {i}, VectorXd::Zero(1), KernelKind::Matern52,
        cfg);
    CHECK(res.rho[i] == doctest::Approx(rho_star).epsilon(1e-4));
    for (Index j = 0; j < 7; ++j) {
      if (j != i) CHECK(res.rho[j] == 0.0);
    }
  }

  SUBCASE("descent from the starting point, both parameterizations") {
    oracle::RandomInstance inst = oracle::random_instance(65, 8, 2);
    inst.data.y *= 2.0;
    const std::vector<Index> support{1, 3, 6};
    const VectorXd init_s = VectorXd::Constant(3, 0.2);
    for (Parameterization p :
         {Parameterization::Convex, Parameterization::Canonical}) {
      SupportOptConfig cfg;
      cfg.joint_hyper = false;
      cfg.parameterization = p;
      const double k0d = inst.hyper.outputscale + inst.hyper.noise;
      VectorXd rho0 = VectorXd::Zero(8);
      for (std::size_t j = 0; j < support.size(); ++j) {
        rho0[support[j]] =
            k0d * (1.0 / (1.0 - init_s[static_cast<Index>(j)]) - 1.0);
      }
      const double f0 =
          nmll_value(inst.data, inst.hyper, rho0, KernelKind::Matern52);
      const SupportOptResult res = optimize_rho_on_support(
          inst.data, inst.hyper, support, init_s, KernelKind::Matern52, cfg);
      CHECK(res.nmll <= f0 + 1e-9);
      // off-support coordinates stay pinned at zero
      for (Index j : {0, 2, 4, 5, 7}) CHECK(res.rho[j] == 0.0);
    }
  }

  SUBCASE("joint optimization also descends and keeps rho feasible") {
    oracle::RandomInstance inst = oracle::random_instance(67, 10, 1);
    inst.data.y *= 2.0;
    SupportOptConfig cfg;
    cfg.joint_hyper = true;
    const std::vector<Index> support{0, 5};
    const double f0 = nmll_value(inst.data, inst.hyper, VectorXd::Zero(10),
                                 KernelKind::Matern52);
    const SupportOptResult res = optimize_rho_on_support(
        inst.data, inst.hyper, support, VectorXd::Zero(2),
        KernelKind::Matern52, cfg);
    CHECK(res.nmll <= f0 + 1e-9);
    CHECK((res.rho.array() >= 0.0).all());
    res.hyper.validate();
  }

  SUBCASE("joint gradient matches finite differences") {
    // the convex parameterization couples rho to the kernel diagonal, so
    // probe the combined objective directly
    oracle::RandomInstance inst = oracle::random_instance(68, 6, 2);
    inst.data.y *= 2.0;
    const std::vector<Index> support{1, 4};
    auto value = [&](const VectorXd& x) {
      Hyperparameters h;
      h.lengthscales = x.segment(2, 2).array().exp();
      h.outputscale = std::exp(x[4]);
      h.noise = std::exp(x[5]);
      h.mean_const = x[6];
      VectorXd rho = VectorXd::Zero(6);
      const double k0d = h.outputscale + h.noise;
      rho[1] = k0d * (1.0 / (1.0 - x[0]) - 1.0);
      rho[4] = k0d * (1.0 / (1.0 - x[1]) - 1.0);
      return nmll_value(inst.data, h, rho, KernelKind::Matern52);
    };
    VectorXd x0(7);
    x0 << 0.3, 0.15, inst.hyper.lengthscales.array().log().matrix(),
        std::log(inst.hyper.outputscale), std::log(inst.hyper.noise), 0.1;
    const VectorXd fd = oracle::fd_gradient(value, x0, 1e-6);

    // reproduce the packed gradient through one tiny optimizer run
    // (zero iterations are not exposed, so evaluate the pieces directly)
    Hyperparameters h = inst.hyper;
    h.mean_const = 0.1;
    const double k0d = h.outputscale + h.noise;
    VectorXd rho = VectorXd::Zero(6);
    rho[1] = k0d * (1.0 / (1.0 - 0.3) - 1.0);
    rho[4] = k0d * (1.0 / (1.0 - 0.15) - 1.0);
    const FittedState st = fit_state(inst.data, h, rho, KernelKind::Matern52);
    const VectorXd grho = nmll_grad_rho(st);
    VectorXd g(7);
    g[0] = grho[1] * k0d / (0.7 * 0.7);
    g[1] = grho[4] * k0d / (0.85 * 0.85);
    const VectorXd ghyp = nmll_grad_hyper(inst.data, h, rho,
                                          KernelKind::Matern52);
    g.segment(2, 2) = ghyp.head(2);
    g[4] = ghyp[2] + h.outputscale * (grho[1] * (1.0 / 0.7 - 1.0) +
                                      grho[4] * (1.0 / 0.85 - 1.0));
    g[5] = ghyp[3] + h.noise * (grho[1] * (1.0 / 0.7 - 1.0) +
                                grho[4] * (1.0 / 0.85 - 1.0));
    g[6] = ghyp[4];
    CHECK((g - fd).lpNorm<Eigen::Infinity>() /
              std::max(1.0, fd.lpNorm<Eigen::Infinity>()) <
          1e-5);
  }

  SUBCASE("objective is the same function under both parameterizations") {
    oracle::RandomInstance inst = oracle::random_instance(69, 5, 1);
    const VectorXd k0_diag =
        base_cov_matrix(inst.data, inst.hyper, KernelKind::Matern52)
            .diagonal();
    const VectorXd rho = oracle::random_rho(70, 5, 1.5, 1.0);
    SParam sp;
    sp.s = s_from_rho(rho, k0_diag);
    sp.k0_diag = k0_diag;
    sp.s_max = 1.0 - 1e-9;
    const VectorXd back = rho_from_s(sp);
    const double direct =
        nmll_value(inst.data, inst.hyper, rho, KernelKind::Matern52);
    const double through_s =
        nmll_value(inst.data, inst.hyper, back, KernelKind::Matern52);
    CHECK(std::abs(direct - through_s) <=
          1e-12 * std::max(1.0, std::abs(direct)));
  }
}
