#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rrp/dataset.hpp"

namespace rrp {

enum class CorruptionKind {
  None,
  Constant,        // y_i := value
  UniformInRange,  // y_i ~ U[min y, max y] of the clean targets
  StudentT,        // y_i := latent_i + scale * t_dof noise
  Laplace,         // y_i := latent_i + Laplace(scale * sd(y)) noise
  Asymmetric,      // y_i := y_i - shift, shifts strictly negative
  Focused,         // clusters co-located in x and y
};

CorruptionKind corruption_from_string(std::string_view name);
std::string to_string(CorruptionKind kind);

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::None;
  double probability = 0.0;  // in [0, 1]
  double value = 0.0;        // Constant
  double t_dof = 2.0;        // StudentT
  double scale = 1.0;        // StudentT / Laplace / Asymmetric magnitude
  int cluster_count = 2;     // Focused
  double cluster_width = 0.05;
  std::uint64_t seed = 0;
};

struct CorruptionResult {
  Dataset data;
  std::vector<Index> indices;  // ground-truth corrupted indices, sorted
};

/// Corrupts each index independently with the configured probability.
/// Deterministic given the spec's seed.
CorruptionResult corrupt(const Dataset& data, const Eigen::VectorXd& latent,
                         const CorruptionSpec& spec);

}  // namespace rrp
