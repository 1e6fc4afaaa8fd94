#pragma once

#include <string>

#include "rrp/gp.hpp"
#include "rrp/robust.hpp"

namespace rrp {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// A fitted model as persisted by the CLI: enough to reconstruct the
/// posterior on new inputs. rho and hyperparameters live in the
/// standardized target scale.
struct Model {
  KernelKind kernel = KernelKind::Matern52;
  Hyperparameters hyper;
  Eigen::VectorXd rho;
  std::vector<Index> support;
  Standardizer standardizer;
  Dataset train;  // raw-scale training data
};

std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);

void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace rrp
