#include "rrp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rrp {

void MetricRow::validate() const {
  if (failed) return;
  if (!(rmse >= 0.0) || !(mae >= 0.0)) {
    throw DomainError("rmse and mae must be nonnegative");
  }
  if (!std::isfinite(nlpd)) throw DomainError("nlpd must be finite");
  for (const auto& v : {detect_precision, detect_recall}) {
    if (v && (*v < 0.0 || *v > 1.0)) {
      throw DomainError("precision/recall must lie in [0, 1]");
    }
  }
  if (fit_seconds < 0.0) throw DomainError("fit_seconds must be nonnegative");
  if (jitter_warnings < 0) throw DomainError("jitter_warnings must be >= 0");
}

namespace {
void check_sizes(Index a, Index b) {
  if (a != b) {
    throw DimensionError("prediction and target lengths differ");
  }
}
}  // namespace

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  check_sizes(pred.size(), truth.size());
  return std::sqrt((pred - truth).squaredNorm() /
                   static_cast<double>(truth.size()));
}

double mae(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  check_sizes(pred.size(), truth.size());
  return (pred - truth).cwiseAbs().mean();
}

double nlpd(const Prediction& pred, const Eigen::VectorXd& truth,
            bool* floored) {
  check_sizes(pred.mean.size(), truth.size());
  check_sizes(pred.variance.size(), truth.size());
  if (floored) *floored = false;
  double total = 0.0;
  for (Index i = 0; i < truth.size(); ++i) {
    double v = pred.variance[i];
    if (v < 1e-12) {
      v = 1e-12;
      if (floored) *floored = true;
    }
    const double r = truth[i] - pred.mean[i];
    total += 0.5 * (r * r / v + std::log(v) + std::log(2.0 * std::numbers::pi));
  }
  return total / static_cast<double>(truth.size());
}

namespace {
std::size_t intersection_size(std::vector<Index> a, std::vector<Index> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<Index> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(common));
  return common.size();
}
}  // namespace

double detection_precision(const std::vector<Index>& selected,
                           const std::vector<Index>& truth) {
  if (selected.empty()) return 1.0;  // no false positives by convention
  return static_cast<double>(intersection_size(selected, truth)) /
         static_cast<double>(selected.size());
}

double detection_recall(const std::vector<Index>& selected,
                        const std::vector<Index>& truth) {
  if (truth.empty()) return 1.0;
  return static_cast<double>(intersection_size(selected, truth)) /
         static_cast<double>(truth.size());
}

}  // namespace rrp
