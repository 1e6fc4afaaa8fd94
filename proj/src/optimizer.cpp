#include "rrp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace rrp {

namespace {

Eigen::VectorXd clamp(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                      const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Infinity norm of the projected gradient, the first-order measure that is
// zero exactly at box-constrained stationary points.
double projected_grad_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                           const Eigen::VectorXd& lo,
                           const Eigen::VectorXd& hi) {
  return (x - clamp(x - g, lo, hi)).lpNorm<Eigen::Infinity>();
}

}  // namespace

BoxLbfgsResult minimize_box_lbfgs(const BoxObjective& objective,
                                  Eigen::VectorXd x0,
                                  const Eigen::VectorXd& lo,
                                  const Eigen::VectorXd& hi,
                                  const BoxLbfgsConfig& config) {
  if (x0.size() != lo.size() || x0.size() != hi.size()) {
    throw DimensionError("box bounds do not match the variable count");
  }
  const Index n = x0.size();
  BoxLbfgsResult result;
  if (n == 0) {
    Eigen::VectorXd g;
    result.x = x0;
    result.f = objective(x0, nullptr);
    result.converged = true;
    return result;
  }

  Eigen::VectorXd x = clamp(x0, lo, hi);
  Eigen::VectorXd g(n);
  double f = objective(x, &g);
  if (!std::isfinite(f) || !g.allFinite()) {
    throw OptimizationFailed("objective is non-finite at the starting point");
  }

  result.x = x;
  result.f = f;

  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  std::deque<Pair> memory;

  constexpr double kArmijo = 1e-4;
  const double inf = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < config.max_iters; ++iter) {
    result.iterations = iter + 1;
    if (projected_grad_norm(x, g, lo, hi) < config.gtol) {
      result.converged = true;
      break;
    }

    // Two-loop recursion for d = -H g.
    Eigen::VectorXd d = -g;
    if (!memory.empty()) {
      std::vector<double> a(memory.size());
      for (int i = static_cast<int>(memory.size()) - 1; i >= 0; --i) {
        a[i] = memory[i].rho * memory[i].s.dot(d);
        d -= a[i] * memory[i].y;
      }
      const Pair& last = memory.back();
      d *= last.s.dot(last.y) / last.y.squaredNorm();
      for (std::size_t i = 0; i < memory.size(); ++i) {
        const double b = memory[i].rho * memory[i].y.dot(d);
        d += (a[i] - b) * memory[i].s;
      }
    }
    if (!d.allFinite() || d.dot(g) >= 0.0) d = -g;  // fall back to descent

    // Backtracking over the projected path, retrying along the steepest
    // descent direction if the quasi-Newton direction yields nothing.
    double f_new = inf;
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      const Eigen::VectorXd dir = attempt == 0 ? d : -g;
      double t = 1.0;
      for (int ls = 0; ls < config.max_line_search; ++ls) {
        x_new = clamp(x + t * dir, lo, hi);
        const Eigen::VectorXd step = x_new - x;
        if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
        const double slope = g.dot(step);
        f_new = objective(x_new, nullptr);
        if (std::isfinite(f_new) && slope < 0.0 &&
            f_new <= f + kArmijo * slope) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      // a quasi-Newton step that only shaves rounding noise off f means the
      // curvature memory has gone stale; retry along the gradient
      const double noise_floor =
          1e-12 * std::max({std::abs(f), std::abs(f_new), 1.0});
      const bool negligible = accepted && (f - f_new) < noise_floor;
      if (attempt == 0 && (!accepted || negligible)) {
        if ((d + g).lpNorm<Eigen::Infinity>() == 0.0) break;
        memory.clear();
        if (negligible) {
          accepted = false;
          continue;
        }
      }
    }
    if (!accepted) {
      // No acceptable step along either direction; the projected-gradient
      // test above governs whether that is convergence or stagnation.
      result.converged = projected_grad_norm(x, g, lo, hi) < config.gtol;
      break;
    }

    Eigen::VectorXd g_new(n);
    const double f_check = objective(x_new, &g_new);
    if (!std::isfinite(f_check) || !g_new.allFinite()) {
      throw OptimizationFailed("objective became non-finite after a step");
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {
      memory.push_back({s, yv, 1.0 / sy});
      if (static_cast<int>(memory.size()) > config.history)
        memory.pop_front();
    }

    const double f_prev = f;
    x = x_new;
    f = f_new;
    g = g_new;
    if (f < result.f) {
      result.f = f;
      result.x = x;
    }

    const double denom = std::max({std::abs(f_prev), std::abs(f), 1.0});
    if ((f_prev - f) / denom < config.ftol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace rrp
