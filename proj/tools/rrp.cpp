#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rrp/csv.hpp"
#include "rrp/experiment.hpp"
#include "rrp/model_io.hpp"
#include "rrp/pursuit.hpp"
#include "rrp/theory.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace rrp;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

Eigen::VectorXd read_rho_file(const std::string& path, Index n) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open rho file: " + path);
  std::vector<double> values;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    try {
      values.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw DomainError("rho file line " + std::to_string(row) +
                        " is not a number: '" + line + "'");
    }
  }
  if (static_cast<Index>(values.size()) != n) {
    throw DomainError("rho file has " + std::to_string(values.size()) +
                      " values for " + std::to_string(n) + " data points");
  }
  Eigen::VectorXd rho(n);
  for (Index i = 0; i < n; ++i) rho[i] = values[static_cast<std::size_t>(i)];
  return rho;
}

Schedule parse_schedule(const std::string& spec, Index n) {
  if (spec == "one") {
    return Schedule::one_at_a_time(
        Schedule::fraction_based(n).total());  // one at a time, same budget
  }
  if (spec.rfind("one:", 0) == 0) {
    return Schedule::one_at_a_time(std::stoi(spec.substr(4)));
  }
  if (spec.rfind("frac:", 0) == 0) {
    const auto rest = spec.substr(5);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) {
      throw DomainError("schedule spec must look like frac:0.05:0.3");
    }
    return Schedule::fraction_based(n, std::stod(rest.substr(0, colon)),
                                    std::stod(rest.substr(colon + 1)));
  }
  throw DomainError("unknown schedule spec '" + spec +
                    "' (expected one, one:K, or frac:F:MAX)");
}

SizePrior parse_prior(const std::string& spec, Index n) {
  if (spec == "uniform") return SizePrior::uniform();
  if (spec == "exp") {
    return SizePrior::exponential(SizePrior::default_rate(n));
  }
  if (spec.rfind("exp:", 0) == 0) {
    return SizePrior::exponential(std::stod(spec.substr(4)));
  }
  throw DomainError("unknown prior spec '" + spec +
                    "' (expected uniform, exp, or exp:RATE)");
}

int cmd_fit(const std::string& data_path, const std::string& kernel,
            const std::string& rho_path, const std::string& out_path) {
  const Dataset data = load_csv(data_path);
  const KernelKind kind = kernel_from_string(kernel);
  const Standardizer std_ = Standardizer::fit(data.y);
  const Dataset work{data.X, std_.apply(data.y)};

  Eigen::VectorXd rho = Eigen::VectorXd::Zero(data.n());
  if (!rho_path.empty()) {
    // raw-scale variances are converted into the standardized scale
    rho = read_rho_file(rho_path, data.n()) / (std_.scale * std_.scale);
    if (!(rho.array() >= 0.0).all()) {
      throw DomainError("rho values must be nonnegative");
    }
  }

  Hyperparameters init = Hyperparameters::defaults(data.d());
  init.noise = std_.apply_noise_floor(init.noise);
  const Hyperparameters fitted = fit_hyperparameters(work, init, rho, kind);

  Model model;
  model.kernel = kind;
  model.hyper = fitted;
  model.rho = rho;
  model.support = RobustVariances::from_rho(rho).support;
  model.standardizer = std_;
  model.train = data;
  save_model(out_path, model);
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                bool observational, const std::string& out_path) {
  const Model model = load_model(model_path);
  const Eigen::MatrixXd Xstar = load_csv_features(data_path);
  const Dataset work{model.train.X,
                     model.standardizer.apply(model.train.y)};
  const FittedState state =
      fit_state(work, model.hyper, model.rho, model.kernel);
  const Prediction pred = model.standardizer.destandardize(
      posterior_predict(state, work, model.hyper, model.kernel, Xstar,
                        observational));

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DomainError("cannot write file: " + out_path);
  out << "mean,variance\n";
  for (Index i = 0; i < pred.mean.size(); ++i) {
    out << format_double(pred.mean[i]) << ","
        << format_double(pred.variance[i]) << "\n";
  }
  return kExitOk;
}

int cmd_detect(const std::string& data_path, const std::string& algorithm,
               const std::string& schedule_spec, const std::string& prior_spec,
               bool no_bms, const std::string& out_path) {
  const Dataset data = load_csv(data_path);
  DetectConfig config;
  if (algorithm == "forward") {
    config.algorithm = PursuitAlgorithm::Forward;
  } else if (algorithm == "backward") {
    config.algorithm = PursuitAlgorithm::Backward;
  } else {
    throw DomainError("algorithm must be forward or backward");
  }
  config.schedule = parse_schedule(schedule_spec, data.n());
  config.prior = parse_prior(prior_spec, data.n());
  config.use_bms = !no_bms;

  const DetectResult result = detect_outliers(data, config);

  json j;
  j["indices"] = result.indices;
  json rho = json::array();
  for (Index i = 0; i < result.rho.size(); ++i) rho.push_back(result.rho[i]);
  j["rho"] = rho;
  j["selected_index"] = result.selected_index;
  j["jitter_warnings"] = result.jitter_warnings;
  j["standardization"] = {{"shift", result.standardizer.shift},
                          {"scale", result.standardizer.scale},
                          {"degenerate", result.standardizer.degenerate}};
  json trace = json::array();
  for (const TraceEntry& entry : result.trace) {
    json e;
    e["support_size"] = entry.support.size();
    e["active_size"] = entry.active_support().size();
    e["failed"] = entry.failed;
    if (entry.failed) {
      e["error"] = entry.error;
    } else {
      e["nmll"] = entry.nmll;
      e["log_model_posterior"] = entry.log_model_posterior;
    }
    trace.push_back(e);
  }
  j["trace"] = trace;

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DomainError("cannot write file: " + out_path);
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_benchmark(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig config = ExperimentConfig::from_json_file(config_path);
  std::filesystem::create_directories(out_dir);
  const ExperimentResult result = run_experiment(config);
  write_results_csv(out_dir + "/results.csv", result.rows);
  std::ofstream out(out_dir + "/summary.json", std::ios::binary);
  if (!out) throw DomainError("cannot write summary.json");
  out << summarize_json(result.rows);
  return kExitOk;
}

int cmd_theory_check(int instances, std::uint64_t seed, int sweep_samples,
                     const std::string& out_path) {
  json report = json::array();
  bool all_sound = true;
  for (int t = 0; t < instances; ++t) {
    const TheoryInstance inst = make_certified_instance(
        seed + static_cast<std::uint64_t>(t), 8 + (t % 5), KernelKind::Matern52);
    const SweepResult sweep = hessian_bound_sweep(
        inst, sweep_samples, seed + 1000 + static_cast<std::uint64_t>(t));

    json j;
    j["n"] = inst.data.n();
    j["m"] = inst.m;
    j["M"] = inst.M;
    j["s_max"] = inst.s_max;
    j["delta"] = inst.cert_convexity.delta;
    j["y_norm_sq"] = inst.cert_convexity.y_norm_sq;
    j["convexity_holds"] = inst.cert_convexity.holds;
    j["smoothness_holds"] = inst.cert_smoothness.holds;
    j["worst_convexity_gap"] = sweep.worst_convexity_gap;
    j["worst_smoothness_gap"] = sweep.worst_smoothness_gap;
    j["eigen_convexity_checked"] = sweep.eigen_convexity_checked;
    j["eigen_smoothness_checked"] = sweep.eigen_smoothness_checked;

    bool sound = true;
    if (inst.cert_convexity.holds && sweep.worst_convexity_gap < -1e-8) {
      sound = false;
    }
    if (inst.cert_smoothness.holds && sweep.worst_smoothness_gap < -1e-8) {
      sound = false;
    }

    json ratios = json::array();
    for (int r = 1; r <= 3; ++r) {
      if (2 * r > inst.data.n()) break;
      const ApproxRatioResult ar = approximation_ratio_check(
          inst.data, inst.hyper, r, inst.m, inst.M, inst.s_max, inst.kernel);
      json rj;
      rj["r"] = r;
      rj["ratio"] = ar.ratio;
      rj["bound"] = ar.bound;
      rj["passes"] = ar.passes;
      ratios.push_back(rj);
      if (!ar.passes) sound = false;
    }
    j["approximation_ratios"] = ratios;
    j["sound"] = sound;
    all_sound = all_sound && sound;
    report.push_back(j);
  }

  json top;
  top["instances"] = report;
  top["all_sound"] = all_sound;
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DomainError("cannot write file: " + out_path);
  out << top.dump(2) << "\n";
  std::cout << (all_sound ? "all certificates sound\n"
                          : "certificate violation found\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust Gaussian process regression with automatic outlier "
               "detection"};
  app.require_subcommand(1);

  std::string data_path, kernel = "matern52", rho_path, out_path;
  auto* fit = app.add_subcommand("fit", "Fit hyperparameters to a CSV dataset");
  fit->add_option("--data", data_path, "training CSV (header x1,...,xd,y)")
      ->required();
  fit->add_option("--kernel", kernel, "matern52 or rbf");
  fit->add_option("--rho-file", rho_path,
                  "optional per-point raw-scale variances, one per line");
  fit->add_option("--out", out_path, "output model JSON")->required();

  std::string model_path, pred_data, pred_out;
  bool observational = false;
  auto* predict = app.add_subcommand("predict", "Predict at new inputs");
  predict->add_option("--model", model_path, "model JSON from fit")->required();
  predict->add_option("--data", pred_data, "inputs CSV (header x1,...,xd)")
      ->required();
  predict->add_flag("--observational", observational,
                    "add the noise variance to the predictive variance");
  predict->add_option("--out", pred_out, "output CSV (mean,variance)")
      ->required();

  std::string det_data, det_alg = "forward", det_schedule = "frac:0.05:0.3",
              det_prior = "exp", det_out;
  bool det_no_bms = false;
  auto* detect = app.add_subcommand("detect", "Detect label outliers");
  detect->add_option("--data", det_data, "training CSV")->required();
  detect->add_option("--algorithm", det_alg, "forward or backward");
  detect->add_option("--schedule", det_schedule, "one, one:K, or frac:F:MAX");
  detect->add_option("--prior", det_prior, "uniform, exp, or exp:RATE");
  detect->add_flag("--no-bms", det_no_bms,
                   "return the final support instead of the model-posterior "
                   "maximizer (forward only)");
  detect->add_option("--out", det_out, "output JSON")->required();

  std::string bench_config, bench_dir;
  auto* benchmark = app.add_subcommand("benchmark", "Run a benchmark config");
  benchmark->add_option("--config", bench_config, "experiment config JSON")
      ->required();
  benchmark->add_option("--out-dir", bench_dir, "output directory")
      ->required();

  int tc_instances = 10;
  std::uint64_t tc_seed = 0;
  int tc_sweep = 100;
  std::string tc_out;
  auto* theory = app.add_subcommand(
      "theory-check", "Validate curvature certificates on random instances");
  theory->add_option("--instances", tc_instances, "number of instances");
  theory->add_option("--seed", tc_seed, "base seed");
  theory->add_option("--sweep-samples", tc_sweep,
                     "Hessian samples per instance");
  theory->add_option("--out", tc_out, "output JSON report")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (fit->parsed()) return cmd_fit(data_path, kernel, rho_path, out_path);
    if (predict->parsed()) {
      return cmd_predict(model_path, pred_data, observational, pred_out);
    }
    if (detect->parsed()) {
      return cmd_detect(det_data, det_alg, det_schedule, det_prior, det_no_bms,
                        det_out);
    }
    if (benchmark->parsed()) return cmd_benchmark(bench_config, bench_dir);
    if (theory->parsed()) {
      return cmd_theory_check(tc_instances, tc_seed, tc_sweep, tc_out);
    }
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const OptimizationFailed& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const PursuitFailed& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
