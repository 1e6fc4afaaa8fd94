#include "rrp/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace rrp {

CorruptionKind corruption_from_string(std::string_view name) {
  if (name == "none") return CorruptionKind::None;
  if (name == "constant") return CorruptionKind::Constant;
  if (name == "uniform_in_range") return CorruptionKind::UniformInRange;
  if (name == "student_t") return CorruptionKind::StudentT;
  if (name == "laplace") return CorruptionKind::Laplace;
  if (name == "asymmetric") return CorruptionKind::Asymmetric;
  if (name == "focused") return CorruptionKind::Focused;
  throw DomainError("unknown corruption kind '" + std::string(name) + "'");
}

std::string to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::None: return "none";
    case CorruptionKind::Constant: return "constant";
    case CorruptionKind::UniformInRange: return "uniform_in_range";
    case CorruptionKind::StudentT: return "student_t";
    case CorruptionKind::Laplace: return "laplace";
    case CorruptionKind::Asymmetric: return "asymmetric";
    case CorruptionKind::Focused: return "focused";
  }
  throw DomainError("invalid corruption kind");
}

CorruptionResult corrupt(const Dataset& data, const Eigen::VectorXd& latent,
                         const CorruptionSpec& spec) {
  if (spec.probability < 0.0 || spec.probability > 1.0) {
    throw DomainError("corruption probability must lie in [0, 1]");
  }
  if (latent.size() != data.n()) {
    throw DimensionError("latent vector size does not match the dataset");
  }

  CorruptionResult out;
  out.data = data;
  if (spec.kind == CorruptionKind::None || spec.probability == 0.0) {
    return out;
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index n = data.n();
  for (Index i = 0; i < n; ++i) {
    if (unit(rng) < spec.probability) out.indices.push_back(i);
  }
  if (out.indices.empty()) return out;

  const double y_min = data.y.minCoeff();
  const double y_max = data.y.maxCoeff();
  const double y_range = y_max - y_min;
  const double y_sd = std::sqrt(
      (data.y.array() - data.y.mean()).square().sum() /
      static_cast<double>(n));

  switch (spec.kind) {
    case CorruptionKind::Constant:
      for (Index i : out.indices) out.data.y[i] = spec.value;
      break;
    case CorruptionKind::UniformInRange:
      for (Index i : out.indices) {
        out.data.y[i] = y_min + unit(rng) * y_range;
      }
      break;
    case CorruptionKind::StudentT: {
      std::student_t_distribution<double> t(spec.t_dof);
      for (Index i : out.indices) {
        out.data.y[i] = latent[i] + spec.scale * t(rng);
      }
      break;
    }
    case CorruptionKind::Laplace: {
      const double b = spec.scale * std::max(y_sd, 1e-12);
      for (Index i : out.indices) {
        const double u = unit(rng) - 0.5;
        const double draw =
            -b * (u < 0.0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::abs(u));
        out.data.y[i] = latent[i] + draw;
      }
      break;
    }
    case CorruptionKind::Asymmetric:
      // strictly negative shifts, uniform in magnitude
      for (Index i : out.indices) {
        out.data.y[i] -= spec.scale * (0.5 + unit(rng)) * std::max(y_range, 1e-12);
      }
      break;
    case CorruptionKind::Focused: {
      const int clusters = std::max(1, spec.cluster_count);
      Eigen::MatrixXd centers_x(clusters, data.d());
      Eigen::VectorXd centers_y(clusters);
      Eigen::RowVectorXd col_min = data.X.colwise().minCoeff();
      Eigen::RowVectorXd col_range =
          data.X.colwise().maxCoeff() - col_min;
      for (int c = 0; c < clusters; ++c) {
        for (Index k = 0; k < data.d(); ++k) {
          centers_x(c, k) = col_min[k] + unit(rng) * col_range[k];
        }
        centers_y[c] = y_min + unit(rng) * y_range;
      }
      for (std::size_t j = 0; j < out.indices.size(); ++j) {
        const Index i = out.indices[j];
        const int c = static_cast<int>(j % static_cast<std::size_t>(clusters));
        for (Index k = 0; k < data.d(); ++k) {
          const double off =
              spec.cluster_width * (unit(rng) - 0.5) * std::max(col_range[k], 1e-12);
          out.data.X(i, k) = centers_x(c, k) + off;
        }
        out.data.y[i] = centers_y[c] + spec.cluster_width * (unit(rng) - 0.5) *
                                           std::max(y_range, 1e-12);
      }
      break;
    }
    case CorruptionKind::None:
      break;
  }
  return out;
}

}  // namespace rrp
