#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rrp/corruption.hpp"
#include "rrp/metrics.hpp"
#include "rrp/pursuit.hpp"
#include "rrp/testfunctions.hpp"

namespace rrp {

enum class Method { StandardGp, RrpForward, RrpBackward };

Method method_from_string(std::string_view name);
std::string to_string(Method m);

struct ExperimentConfig {
  TestFunction function = TestFunction::Sine;
  std::string csv_path;  // non-empty: load data instead of generating
  Index n_train = 100;
  Index n_test = 200;
  double noise_sigma = 0.1;
  CorruptionSpec corruption;
  std::vector<Method> methods{Method::StandardGp, Method::RrpForward};
  int replications = 10;
  std::uint64_t base_seed = 0;
  KernelKind kernel = KernelKind::Matern52;
  DetectConfig detect;   // pursuit settings shared by the rrp methods
  int threads = 0;       // 0: hardware concurrency
  bool record_timing = false;  // wall-clock timing breaks byte-identical output

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
};

struct ExperimentResult {
  std::vector<MetricRow> rows;  // ordered by (replication, method)
};

/// Runs every (replication, method) cell. Per-replication data generation
/// and corruption are seeded by (base_seed, replication); test points are
/// never corrupted and never seen during fitting. Failures are recorded in
/// the row rather than thrown.
ExperimentResult run_experiment(const ExperimentConfig& config);

void write_results_csv(const std::string& path,
                       const std::vector<MetricRow>& rows);
/// {method -> metric -> {median, q25, q75}} as a JSON text.
std::string summarize_json(const std::vector<MetricRow>& rows);

struct ConvergenceRow {
  double ftol = 0.0;
  double nmll_canonical = 0.0;
  double nmll_convex = 0.0;
};

/// Full-support joint optimization under both parameterizations at each
/// tolerance. The canonical search runs over rho boxes matched to the s
/// box through the reparameterization.
std::vector<ConvergenceRow> parameterization_convergence_report(
    const Dataset& data, const std::vector<double>& tolerances,
    KernelKind kind);

}  // namespace rrp
