#include "rrp/pursuit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

namespace rrp {

Schedule Schedule::one_at_a_time(int total) {
  if (total < 0) throw DomainError("schedule total must be nonnegative");
  Schedule s;
  s.steps.assign(static_cast<std::size_t>(total), 1);
  return s;
}

Schedule Schedule::fraction_based(Index n, double fraction,
                                  double max_fraction) {
  if (fraction <= 0.0 || max_fraction <= 0.0 || max_fraction > 1.0) {
    throw DomainError("schedule fractions must satisfy 0 < fraction and "
                      "0 < max_fraction <= 1");
  }
  const int budget =
      std::min<int>(static_cast<int>(n),
                    static_cast<int>(std::llround(max_fraction * n)));
  const int per_step = std::max<int>(
      1, static_cast<int>(std::llround(fraction * static_cast<double>(n))));
  Schedule s;
  int used = 0;
  while (used < budget) {
    const int k = std::min(per_step, budget - used);
    s.steps.push_back(k);
    used += k;
  }
  return s;
}

int Schedule::total() const {
  return std::accumulate(steps.begin(), steps.end(), 0);
}

void Schedule::validate(Index n) const {
  for (int k : steps) {
    if (k < 1) throw DomainError("every schedule step must be >= 1");
  }
  if (total() > n) {
    throw DomainError("schedule adds " + std::to_string(total()) +
                      " points but the dataset has only " + std::to_string(n));
  }
}

SizePrior SizePrior::exponential(double rate, Index max_size) {
  if (!(rate > 0.0)) throw DomainError("exponential prior rate must be > 0");
  return SizePrior{Kind::Exponential, rate, max_size};
}

SizePrior SizePrior::uniform(Index max_size) {
  return SizePrior{Kind::Uniform, 0.0, max_size};
}

double SizePrior::default_rate(Index n) {
  // p(|S| = 0.2 n) / p(|S| = 0) = 1e-3
  return 3.0 * std::log(10.0) / (0.2 * static_cast<double>(n));
}

double SizePrior::log_prior(Index support_size) const {
  if (support_size < 0 || (max_size >= 0 && support_size > max_size)) {
    return -std::numeric_limits<double>::infinity();
  }
  return kind == Kind::Exponential ? -rate * static_cast<double>(support_size)
                                   : 0.0;
}

std::vector<Index> TraceEntry::active_support() const {
  std::vector<Index> active;
  for (Index i : support) {
    if (rho[i] > 0.0) active.push_back(i);
  }
  return active;
}

double model_posterior_score(const TraceEntry& entry, const SizePrior& prior) {
  return -entry.nmll +
         prior.log_prior(static_cast<Index>(entry.support.size()));
}

namespace {

SupportOptConfig support_config(const PursuitConfig& config) {
  SupportOptConfig sc;
  sc.joint_hyper = config.joint_hyper;
  sc.parameterization = config.parameterization;
  sc.s_max = config.s_max;
  sc.opt = config.opt;
  sc.bounds = config.bounds;
  return sc;
}

double nmll_at_s(const Dataset& data, const Hyperparameters& hyper,
                 const std::vector<Index>& support, const Eigen::VectorXd& s,
                 KernelKind kind) {
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(data.n());
  const double k0d = hyper.outputscale + hyper.noise;
  for (std::size_t j = 0; j < support.size(); ++j) {
    rho[support[j]] = k0d * (1.0 / (1.0 - s[static_cast<Index>(j)]) - 1.0);
  }
  return nmll_value(data, hyper, rho, kind);
}

TraceEntry failed_entry(Index n, const std::vector<Index>& support,
                        const Hyperparameters& hyper, const Error& e) {
  TraceEntry entry;
  entry.support = support;
  entry.rho = Eigen::VectorXd::Zero(n);
  entry.hyper = hyper;
  entry.nmll = std::numeric_limits<double>::quiet_NaN();
  entry.failed = true;
  entry.error = e.what();
  return entry;
}

PursuitResult select_from_trace(std::vector<TraceEntry> trace,
                                const SizePrior& prior, bool use_bms) {
  for (TraceEntry& entry : trace) {
    if (!entry.failed) {
      entry.log_model_posterior = model_posterior_score(entry, prior);
    }
  }
  Index best = -1;
  if (use_bms) {
    double best_score = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < static_cast<Index>(trace.size()); ++i) {
      if (trace[static_cast<std::size_t>(i)].failed) continue;
      const double score =
          trace[static_cast<std::size_t>(i)].log_model_posterior;
      if (score > best_score) {  // ties keep the earlier (smaller) support
        best_score = score;
        best = i;
      }
    }
  } else {
    for (Index i = static_cast<Index>(trace.size()) - 1; i >= 0; --i) {
      if (!trace[static_cast<std::size_t>(i)].failed) {
        best = i;
        break;
      }
    }
  }
  if (best < 0) {
    throw PursuitFailed("every pursuit trace entry failed to fit");
  }
  PursuitResult result;
  result.selected = trace[static_cast<std::size_t>(best)];
  result.selected_index = best;
  result.trace = std::move(trace);
  return result;
}

}  // namespace

PursuitResult forward_pursuit(const Dataset& data,
                              const Hyperparameters& init_hyper,
                              const Schedule& schedule, const SizePrior& prior,
                              bool use_bms, const PursuitConfig& config) {
  const Index n = data.n();
  schedule.validate(n);
  init_hyper.validate();
  const SupportOptConfig sc = support_config(config);

  // BMS explores supports up to the prior's maximum; the fixed-budget mode
  // follows the schedule exactly.
  const Index support_cap =
      (use_bms && prior.max_size >= 0) ? std::min<Index>(n, prior.max_size)
                                       : n;

  std::vector<TraceEntry> trace;
  std::vector<Index> support;  // sorted
  // candidate starting points for the next fit, aligned with `support`
  Eigen::VectorXd s_warm(0), s_conservative(0);
  Hyperparameters hyper = init_hyper;
  if (config.fit_base_hyper) {
    // the base fit anchors the whole trace; escape bad basins here
    hyper = fit_hyperparameters_multistart(data, init_hyper,
                                           Eigen::VectorXd::Zero(n),
                                           config.kernel, config.opt,
                                           config.bounds);
  }

  std::size_t step_idx = 0;
  while (true) {
    Eigen::VectorXd init = s_conservative;
    if (support.size() > 0 &&
        (s_warm - s_conservative).lpNorm<Eigen::Infinity>() > 0.0 &&
        nmll_at_s(data, hyper, support, s_warm, config.kernel) <
            nmll_at_s(data, hyper, support, s_conservative, config.kernel)) {
      init = s_warm;
    }
    SupportOptResult fit;
    try {
      fit = optimize_rho_on_support(data, hyper, support, init, config.kernel,
                                    sc);
    } catch (const Error& e) {
      trace.push_back(failed_entry(n, support, hyper, e));
      break;  // no state to expand from
    }
    TraceEntry entry;
    entry.support = support;
    entry.rho = fit.rho;
    entry.hyper = fit.hyper;
    entry.nmll = fit.nmll;
    entry.jitter_max = fit.jitter_max;
    trace.push_back(std::move(entry));
    hyper = fit.hyper;

    if (step_idx >= schedule.steps.size()) break;
    const Index remaining =
        support_cap - static_cast<Index>(support.size());
    const int k = std::min<int>(schedule.steps[step_idx],
                                static_cast<int>(remaining));
    ++step_idx;
    if (k <= 0) break;

    const FittedState state =
        fit_state(data, fit.hyper, fit.rho, config.kernel);
    const Eigen::VectorXd gains = mll_gains(state);

    std::vector<Index> candidates;
    for (Index j = 0; j < n; ++j) {
      if (!std::binary_search(support.begin(), support.end(), j)) {
        candidates.push_back(j);
      }
    }
    if (candidates.empty()) break;
    // largest gain first, ties by lowest index
    std::sort(candidates.begin(), candidates.end(), [&](Index a, Index b) {
      if (gains[a] != gains[b]) return gains[a] > gains[b];
      return a < b;
    });
    const int take = std::min<int>(k, static_cast<int>(candidates.size()));

    const double k0d = fit.hyper.outputscale + fit.hyper.noise;
    std::vector<Index> added(candidates.begin(), candidates.begin() + take);
    std::sort(added.begin(), added.end());

    std::vector<Index> new_support;
    std::vector<double> warm_v, cons_v;
    new_support.reserve(support.size() + added.size());
    std::merge(support.begin(), support.end(), added.begin(), added.end(),
               std::back_inserter(new_support));
    for (Index idx : new_support) {
      if (std::binary_search(added.begin(), added.end(), idx)) {
        const double rho_star = optimal_rho_single(state, idx);
        warm_v.push_back(std::min(config.s_max, rho_star / (rho_star + k0d)));
        cons_v.push_back(0.0);
      } else {
        const double rho_j = fit.rho[idx];
        const double s_j = std::min(config.s_max, rho_j / (rho_j + k0d));
        warm_v.push_back(s_j);
        cons_v.push_back(s_j);
      }
    }
    support = std::move(new_support);
    s_warm = Eigen::Map<const Eigen::VectorXd>(
        warm_v.data(), static_cast<Index>(warm_v.size()));
    s_conservative = Eigen::Map<const Eigen::VectorXd>(
        cons_v.data(), static_cast<Index>(cons_v.size()));
  }

  return select_from_trace(std::move(trace), prior, use_bms);
}

PursuitResult backward_pursuit(const Dataset& data,
                               const Hyperparameters& init_hyper,
                               const Schedule& schedule,
                               const SizePrior& prior,
                               const PursuitConfig& config) {
  const Index n = data.n();
  schedule.validate(n);
  init_hyper.validate();
  const SupportOptConfig sc = support_config(config);

  std::vector<TraceEntry> trace;
  std::vector<Index> support(static_cast<std::size_t>(n));
  std::iota(support.begin(), support.end(), Index{0});
  Eigen::VectorXd s_carry = Eigen::VectorXd::Zero(n);
  Hyperparameters hyper = init_hyper;
  if (config.fit_base_hyper) {
    hyper = fit_hyperparameters_multistart(data, init_hyper,
                                           Eigen::VectorXd::Zero(n),
                                           config.kernel, config.opt,
                                           config.bounds);
  }

  std::size_t step_idx = 0;
  while (true) {
    SupportOptResult fit;
    try {
      fit = optimize_rho_on_support(data, hyper, support, s_carry,
                                    config.kernel, sc);
    } catch (const Error& e) {
      trace.push_back(failed_entry(n, support, hyper, e));
      break;
    }
    TraceEntry entry;
    entry.support = support;
    entry.rho = fit.rho;
    entry.hyper = fit.hyper;
    entry.nmll = fit.nmll;
    entry.jitter_max = fit.jitter_max;
    trace.push_back(std::move(entry));
    hyper = fit.hyper;

    if (step_idx >= schedule.steps.size() || support.empty()) break;
    const int k = std::min<int>(schedule.steps[step_idx],
                                static_cast<int>(support.size()));
    ++step_idx;

    // drop the k support coordinates with the smallest fitted rho,
    // ties broken toward the lowest index
    std::vector<Index> order(support.begin(), support.end());
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      if (fit.rho[a] != fit.rho[b]) return fit.rho[a] < fit.rho[b];
      return a < b;
    });
    std::vector<Index> removed(order.begin(), order.begin() + k);
    std::sort(removed.begin(), removed.end());

    const double k0d = fit.hyper.outputscale + fit.hyper.noise;
    std::vector<Index> new_support;
    std::vector<double> new_s;
    for (Index idx : support) {
      if (std::binary_search(removed.begin(), removed.end(), idx)) continue;
      new_support.push_back(idx);
      const double rho_j = fit.rho[idx];
      new_s.push_back(std::min(config.s_max, rho_j / (rho_j + k0d)));
    }
    support = std::move(new_support);
    s_carry = Eigen::Map<const Eigen::VectorXd>(
        new_s.data(), static_cast<Index>(new_s.size()));
  }

  return select_from_trace(std::move(trace), prior, /*use_bms=*/true);
}

DetectResult detect_outliers(const Dataset& data, const DetectConfig& config) {
  const Index n = data.n();
  Standardizer std_ =
      config.standardize ? Standardizer::fit(data.y) : Standardizer{};
  Dataset work{data.X, std_.apply(data.y)};

  // forward grows the support up to a fraction of n; backward starts from
  // the full support and must be able to shrink it all the way so model
  // selection sees every size
  const Schedule schedule =
      config.schedule
          ? *config.schedule
          : (config.algorithm == PursuitAlgorithm::Forward
                 ? Schedule::fraction_based(n)
                 : Schedule::fraction_based(n, 0.05, 1.0));
  const SizePrior prior =
      config.prior ? *config.prior
                   : SizePrior::exponential(SizePrior::default_rate(n));

  Hyperparameters init = Hyperparameters::defaults(data.d());
  PursuitConfig pc = config.pursuit;
  if (std_.degenerate) {
    // constant targets: keep a noise floor so the covariance stays regular
    pc.bounds.noise_min = std::max(pc.bounds.noise_min, 1e-6);
    init.noise = std::max(init.noise, 1e-6);
  }

  const PursuitResult result =
      config.algorithm == PursuitAlgorithm::Forward
          ? forward_pursuit(work, init, schedule, prior, config.use_bms, pc)
          : backward_pursuit(work, init, schedule, prior, pc);

  DetectResult out;
  out.indices = result.selected.active_support();
  out.rho = result.selected.rho;
  out.hyper = result.selected.hyper;
  out.standardizer = std_;
  out.trace = result.trace;
  out.selected_index = result.selected_index;
  const double diag_scale =
      result.selected.hyper.outputscale + result.selected.hyper.noise;
  for (const TraceEntry& entry : result.trace) {
    if (!entry.failed && entry.jitter_max > 1e-6 * diag_scale) {
      ++out.jitter_warnings;
    }
  }
  return out;
}

}  // namespace rrp
