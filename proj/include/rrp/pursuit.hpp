#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rrp/robust.hpp"

namespace rrp {

/// How many points to add (forward) or remove (backward) per iteration.
struct Schedule {
  std::vector<int> steps;

  static Schedule one_at_a_time(int total);
  /// Steps of round(fraction * n) points until max_fraction * n is reached.
  static Schedule fraction_based(Index n, double fraction = 0.05,
                                 double max_fraction = 0.3);

  int total() const;
  void validate(Index n) const;
};

/// Prior over the support size |S|.
struct SizePrior {
  enum class Kind { Exponential, Uniform };
  Kind kind = Kind::Exponential;
  double rate = 1.0;    // exponential: log p(|S|=k) = -rate * k + const
  Index max_size = -1;  // -1 means unbounded

  static SizePrior exponential(double rate, Index max_size = -1);
  static SizePrior uniform(Index max_size = -1);
  /// Rate making p(|S| = 0.2 n) / p(|S| = 0) = 1e-3.
  static double default_rate(Index n);

  double log_prior(Index support_size) const;  // -inf above max_size
};

/// One greedy iteration's model: the allowed support, the fitted robust
/// variances and hyperparameters, and the achieved nmll.
struct TraceEntry {
  std::vector<Index> support;  // allowed set S_i, sorted
  Eigen::VectorXd rho;
  Hyperparameters hyper;
  double nmll = 0.0;
  double log_model_posterior = 0.0;
  double jitter_max = 0.0;
  bool failed = false;
  std::string error;

  /// Indices with rho_i > 0 (a subset of `support`).
  std::vector<Index> active_support() const;
};

struct PursuitConfig {
  KernelKind kernel = KernelKind::Matern52;
  bool joint_hyper = true;     // re-optimize hyperparameters per trace entry
  bool fit_base_hyper = true;  // multistart fit at the empty support; when
                               // joint_hyper is off the result stays frozen
  double s_max = SParam::kDefaultSMax;
  BoxLbfgsConfig opt;
  HyperBounds bounds;
  Parameterization parameterization = Parameterization::Convex;
};

struct PursuitResult {
  TraceEntry selected;
  std::vector<TraceEntry> trace;
  Index selected_index = 0;  // position in trace
};

/// -nmll + log p(|S|) with |S| the entry's allowed-support size.
double model_posterior_score(const TraceEntry& entry, const SizePrior& prior);

/// Greedy forward selection. Starts from the empty support, alternates
/// optimizing rho on the current support with adding the largest-gain
/// indices, and either returns the final entry (fixed budget) or the trace
/// entry with the highest model posterior (use_bms).
PursuitResult forward_pursuit(const Dataset& data,
                              const Hyperparameters& init_hyper,
                              const Schedule& schedule, const SizePrior& prior,
                              bool use_bms, const PursuitConfig& config);

/// Backward variant: starts from the full support and iteratively drops
/// the coordinates with the smallest fitted rho. Model selection over the
/// trace always applies.
PursuitResult backward_pursuit(const Dataset& data,
                               const Hyperparameters& init_hyper,
                               const Schedule& schedule,
                               const SizePrior& prior,
                               const PursuitConfig& config);

enum class PursuitAlgorithm { Forward, Backward };

struct DetectConfig {
  PursuitAlgorithm algorithm = PursuitAlgorithm::Forward;
  std::optional<Schedule> schedule;  // default: fraction_based(n)
  std::optional<SizePrior> prior;    // default: exponential(default_rate(n))
  bool use_bms = true;
  bool standardize = true;
  PursuitConfig pursuit;
};

struct DetectResult {
  std::vector<Index> indices;  // active support of the selected model
  Eigen::VectorXd rho;         // standardized scale when standardize is on
  Hyperparameters hyper;
  Standardizer standardizer;
  std::vector<TraceEntry> trace;
  Index selected_index = 0;
  int jitter_warnings = 0;
};

/// Facade over the pursuit algorithms: standardizes targets, runs the
/// configured algorithm and reports the detected outliers plus diagnostics.
DetectResult detect_outliers(const Dataset& data, const DetectConfig& config);

}  // namespace rrp
