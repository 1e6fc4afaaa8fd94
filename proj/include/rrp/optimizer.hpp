#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>

#include "rrp/errors.hpp"

namespace rrp {

using Index = Eigen::Index;

/// Objective callback. Must fill *grad (same size as x) when grad != nullptr
/// and return the objective value.
using BoxObjective =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct BoxLbfgsConfig {
  double ftol = 1e-8;       // relative objective change
  double gtol = 1e-6;       // projected-gradient infinity norm
  int max_iters = 500;
  int history = 10;         // L-BFGS memory
  int max_line_search = 50;
};

struct BoxLbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Projected L-BFGS with backtracking Armijo line search over the box
/// [lo, hi]. Deterministic: the iterate path depends only on the inputs.
/// The returned point is the best one evaluated, so the result never
/// exceeds the objective at x0. Throws OptimizationFailed if the objective
/// is non-finite at x0 or stays non-finite along a whole line search.
BoxLbfgsResult minimize_box_lbfgs(const BoxObjective& objective,
                                  Eigen::VectorXd x0,
                                  const Eigen::VectorXd& lo,
                                  const Eigen::VectorXd& hi,
                                  const BoxLbfgsConfig& config = {});

}  // namespace rrp
