#include "rrp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rrp/csv.hpp"

namespace rrp {

namespace {
using json = nlohmann::ordered_json;

// Independent per-replication streams derived from the base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t rep,
                          std::uint64_t salt) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (rep + 1) + salt;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

Method method_from_string(std::string_view name) {
  if (name == "standard_gp") return Method::StandardGp;
  if (name == "rrp_forward") return Method::RrpForward;
  if (name == "rrp_backward") return Method::RrpBackward;
  throw DomainError("unknown method '" + std::string(name) + "'");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::StandardGp: return "standard_gp";
    case Method::RrpForward: return "rrp_forward";
    case Method::RrpBackward: return "rrp_backward";
  }
  throw DomainError("invalid method");
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DomainError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    if (j.contains("csv_path")) cfg.csv_path = j["csv_path"].get<std::string>();
    if (j.contains("function")) {
      cfg.function =
          test_function_from_string(j["function"].get<std::string>());
    }
    if (j.contains("n_train")) cfg.n_train = j["n_train"].get<Index>();
    if (j.contains("n_test")) cfg.n_test = j["n_test"].get<Index>();
    if (j.contains("noise_sigma")) cfg.noise_sigma = j["noise_sigma"].get<double>();
    if (j.contains("replications")) cfg.replications = j["replications"].get<int>();
    if (j.contains("seed")) cfg.base_seed = j["seed"].get<std::uint64_t>();
    if (j.contains("kernel")) {
      cfg.kernel = kernel_from_string(j["kernel"].get<std::string>());
    }
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("record_timing")) cfg.record_timing = j["record_timing"].get<bool>();
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : j["methods"]) {
        cfg.methods.push_back(method_from_string(m.get<std::string>()));
      }
    }
    if (j.contains("corruption")) {
      const auto& c = j["corruption"];
      if (c.contains("kind")) {
        cfg.corruption.kind = corruption_from_string(c["kind"].get<std::string>());
      }
      if (c.contains("probability")) cfg.corruption.probability = c["probability"].get<double>();
      if (c.contains("value")) cfg.corruption.value = c["value"].get<double>();
      if (c.contains("t_dof")) cfg.corruption.t_dof = c["t_dof"].get<double>();
      if (c.contains("scale")) cfg.corruption.scale = c["scale"].get<double>();
      if (c.contains("cluster_count")) cfg.corruption.cluster_count = c["cluster_count"].get<int>();
      if (c.contains("cluster_width")) cfg.corruption.cluster_width = c["cluster_width"].get<double>();
    }
    if (j.contains("detect")) {
      const auto& d = j["detect"];
      if (d.contains("schedule_fraction") || d.contains("schedule_max_fraction")) {
        // resolved per replication below because it depends on n
      }
      if (d.contains("prior_rate")) {
        cfg.detect.prior = SizePrior::exponential(d["prior_rate"].get<double>());
      }
      if (d.contains("use_bms")) cfg.detect.use_bms = d["use_bms"].get<bool>();
      if (d.contains("joint_hyper")) {
        cfg.detect.pursuit.joint_hyper = d["joint_hyper"].get<bool>();
      }
    }
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed config value: ") + e.what());
  }
  if (cfg.replications < 1) throw DomainError("replications must be >= 1");
  if (cfg.methods.empty()) throw DomainError("methods must be non-empty");
  return cfg;
}

namespace {

struct SplitData {
  Dataset train;
  Eigen::VectorXd train_latent;
  Dataset test;
};

SplitData make_split(const ExperimentConfig& cfg, std::uint64_t gen_seed) {
  SplitData out;
  if (!cfg.csv_path.empty()) {
    const Dataset full = load_csv(cfg.csv_path);
    const Index n = full.n();
    if (cfg.n_train + cfg.n_test > n) {
      throw DomainError("csv file has fewer rows than n_train + n_test");
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(gen_seed);
    std::shuffle(order.begin(), order.end(), rng);
    out.train.X.resize(cfg.n_train, full.d());
    out.train.y.resize(cfg.n_train);
    out.test.X.resize(cfg.n_test, full.d());
    out.test.y.resize(cfg.n_test);
    for (Index i = 0; i < cfg.n_train; ++i) {
      out.train.X.row(i) = full.X.row(order[static_cast<std::size_t>(i)]);
      out.train.y[i] = full.y[order[static_cast<std::size_t>(i)]];
    }
    for (Index i = 0; i < cfg.n_test; ++i) {
      const Index src = order[static_cast<std::size_t>(cfg.n_train + i)];
      out.test.X.row(i) = full.X.row(src);
      out.test.y[i] = full.y[src];
    }
    out.train_latent = out.train.y;  // no oracle for file data
  } else {
    const GeneratedData gen =
        gen_function(cfg.function, cfg.n_train + cfg.n_test, cfg.noise_sigma,
                     gen_seed);
    out.train.X = gen.data.X.topRows(cfg.n_train);
    out.train.y = gen.data.y.head(cfg.n_train);
    out.train_latent = gen.latent.head(cfg.n_train);
    out.test.X = gen.data.X.bottomRows(cfg.n_test);
    out.test.y = gen.data.y.tail(cfg.n_test);
  }
  return out;
}

MetricRow run_cell(const ExperimentConfig& cfg, Method method, int rep) {
  MetricRow row;
  row.method = to_string(method);
  row.replication = rep;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const std::uint64_t gen_seed =
        derive_seed(cfg.base_seed, static_cast<std::uint64_t>(rep), 1);
    SplitData split = make_split(cfg, gen_seed);

    CorruptionSpec corr = cfg.corruption;
    corr.seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(rep), 2);
    const CorruptionResult corrupted =
        corrupt(split.train, split.train_latent, corr);
    const Dataset& train = corrupted.data;

    Prediction pred;
    if (method == Method::StandardGp) {
      const Standardizer std_ = Standardizer::fit(train.y);
      const Dataset work{train.X, std_.apply(train.y)};
      Hyperparameters init = Hyperparameters::defaults(train.d());
      init.noise = std_.apply_noise_floor(init.noise);
      const Eigen::VectorXd zero = Eigen::VectorXd::Zero(train.n());
      const Hyperparameters fitted =
          fit_hyperparameters_multistart(work, init, zero, cfg.kernel);
      const FittedState state = fit_state(work, fitted, zero, cfg.kernel);
      if (state.jitter > 1e-6 * state.cov.diagonal().mean()) {
        row.jitter_warnings = 1;
      }
      pred = std_.destandardize(posterior_predict(
          state, work, fitted, cfg.kernel, split.test.X, true));
    } else {
      DetectConfig dc = cfg.detect;
      dc.algorithm = method == Method::RrpForward ? PursuitAlgorithm::Forward
                                                  : PursuitAlgorithm::Backward;
      dc.pursuit.kernel = cfg.kernel;
      const DetectResult det = detect_outliers(train, dc);
      const Dataset work{train.X, det.standardizer.apply(train.y)};
      const FittedState state =
          fit_state(work, det.hyper, det.rho, cfg.kernel);
      pred = det.standardizer.destandardize(posterior_predict(
          state, work, det.hyper, cfg.kernel, split.test.X, true));
      row.jitter_warnings = det.jitter_warnings;
      row.detect_precision =
          detection_precision(det.indices, corrupted.indices);
      row.detect_recall = detection_recall(det.indices, corrupted.indices);
    }

    row.rmse = rmse(pred.mean, split.test.y);
    row.mae = mae(pred.mean, split.test.y);
    row.nlpd = nlpd(pred, split.test.y);
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
  }
  if (cfg.record_timing) {
    row.fit_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
  }
  row.validate();
  return row;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  struct Cell {
    int rep;
    Method method;
  };
  std::vector<Cell> cells;
  for (int rep = 0; rep < config.replications; ++rep) {
    for (Method m : config.methods) cells.push_back({rep, m});
  }

  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int threads =
      config.threads > 0 ? config.threads : std::max(1, hw);

  std::vector<MetricRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) break;
      rows[i] = run_cell(config, cells[i].method, cells[i].rep);
    }
  };
  if (threads <= 1 || cells.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min<int>(threads, static_cast<int>(cells.size()));
         ++t) {
      pool.emplace_back(worker);
    }
    for (std::thread& t : pool) t.join();
  }

  ExperimentResult result;
  result.rows = std::move(rows);  // already ordered by (replication, method)
  return result;
}

void write_results_csv(const std::string& path,
                       const std::vector<MetricRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write file: " + path);
  out << "method,replication,rmse,mae,nlpd,detect_precision,detect_recall,"
         "fit_seconds,jitter_warnings,failed,error\n";
  for (const MetricRow& row : rows) {
    std::string err = row.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << row.method << "," << row.replication << ",";
    if (row.failed) {
      out << ",,,,,";
    } else {
      out << format_double(row.rmse) << "," << format_double(row.mae) << ","
          << format_double(row.nlpd) << ",";
      out << (row.detect_precision ? format_double(*row.detect_precision)
                                   : std::string())
          << ",";
      out << (row.detect_recall ? format_double(*row.detect_recall)
                                : std::string())
          << ",";
    }
    out << format_double(row.fit_seconds) << "," << row.jitter_warnings << ","
        << (row.failed ? "1" : "0") << "," << err << "\n";
  }
}

namespace {
double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}
}  // namespace

std::string summarize_json(const std::vector<MetricRow>& rows) {
  std::vector<std::string> methods;
  for (const MetricRow& row : rows) {
    if (std::find(methods.begin(), methods.end(), row.method) ==
        methods.end()) {
      methods.push_back(row.method);
    }
  }
  json out = json::object();
  for (const std::string& method : methods) {
    json per = json::object();
    auto collect = [&](auto getter) {
      std::vector<double> values;
      for (const MetricRow& row : rows) {
        if (row.failed || row.method != method) continue;
        const auto v = getter(row);
        if (v) values.push_back(*v);
      }
      return values;
    };
    const std::vector<std::pair<std::string,
                                std::function<std::optional<double>(
                                    const MetricRow&)>>>
        metrics = {
            {"rmse", [](const MetricRow& r) { return std::optional<double>(r.rmse); }},
            {"mae", [](const MetricRow& r) { return std::optional<double>(r.mae); }},
            {"nlpd", [](const MetricRow& r) { return std::optional<double>(r.nlpd); }},
            {"detect_precision", [](const MetricRow& r) { return r.detect_precision; }},
            {"detect_recall", [](const MetricRow& r) { return r.detect_recall; }},
        };
    for (const auto& [name, getter] : metrics) {
      const std::vector<double> values = collect(getter);
      if (values.empty()) continue;
      per[name] = {{"median", quantile(values, 0.5)},
                   {"q25", quantile(values, 0.25)},
                   {"q75", quantile(values, 0.75)}};
    }
    int failures = 0;
    for (const MetricRow& row : rows) {
      if (row.method == method && row.failed) ++failures;
    }
    per["failures"] = failures;
    out[method] = per;
  }
  return out.dump(2) + "\n";
}

std::vector<ConvergenceRow> parameterization_convergence_report(
    const Dataset& data, const std::vector<double>& tolerances,
    KernelKind kind) {
  const Index n = data.n();
  std::vector<Index> full(static_cast<std::size_t>(n));
  std::iota(full.begin(), full.end(), Index{0});
  const Eigen::VectorXd init_s = Eigen::VectorXd::Zero(n);
  const Hyperparameters init = Hyperparameters::defaults(data.d());

  std::vector<ConvergenceRow> rows;
  for (double ftol : tolerances) {
    SupportOptConfig sc;
    sc.joint_hyper = true;
    sc.opt.ftol = ftol;
    sc.opt.gtol = 0.0;  // termination is governed by ftol alone here
    ConvergenceRow row;
    row.ftol = ftol;
    sc.parameterization = Parameterization::Canonical;
    row.nmll_canonical =
        optimize_rho_on_support(data, init, full, init_s, kind, sc).nmll;
    sc.parameterization = Parameterization::Convex;
    row.nmll_convex =
        optimize_rho_on_support(data, init, full, init_s, kind, sc).nmll;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rrp
