#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rrp/gp.hpp"

namespace rrp {

struct MetricRow {
  std::string method;
  int replication = 0;
  double rmse = 0.0;
  double mae = 0.0;
  double nlpd = 0.0;
  std::optional<double> detect_precision;
  std::optional<double> detect_recall;
  double fit_seconds = 0.0;
  int jitter_warnings = 0;
  bool failed = false;
  std::string error;

  void validate() const;
};

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);
double mae(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

/// Mean of 0.5 * ((y - mu)^2 / v + log v + log 2pi) over the test set.
/// Variances are floored at 1e-12; `floored` reports whether the floor was
/// hit.
double nlpd(const Prediction& pred, const Eigen::VectorXd& truth,
            bool* floored = nullptr);

/// Precision of `selected` against `truth` index sets. An empty selection
/// has no false positives and scores 1 by convention.
double detection_precision(const std::vector<Index>& selected,
                           const std::vector<Index>& truth);
double detection_recall(const std::vector<Index>& selected,
                        const std::vector<Index>& truth);

}  // namespace rrp
