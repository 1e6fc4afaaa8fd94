#include "rrp/model_io.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace rrp {

namespace {
using json = nlohmann::ordered_json;

json vec_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vec_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Index>(arr.size()));
  Index i = 0;
  for (const auto& x : arr) v[i++] = x.get<double>();
  return v;
}
}  // namespace

std::string model_to_json(const Model& model) {
  json j;
  j["library_version"] = kLibraryVersion;
  j["kernel"] = to_string(model.kernel);
  j["hyperparameters"] = {
      {"lengthscales", vec_to_json(model.hyper.lengthscales)},
      {"outputscale", model.hyper.outputscale},
      {"noise", model.hyper.noise},
      {"mean_const", model.hyper.mean_const},
  };
  j["rho"] = vec_to_json(model.rho);
  j["support"] = model.support;
  j["standardization"] = {
      {"shift", model.standardizer.shift},
      {"scale", model.standardizer.scale},
      {"degenerate", model.standardizer.degenerate},
  };
  json X = json::array();
  for (Index i = 0; i < model.train.n(); ++i) {
    json row = json::array();
    for (Index k = 0; k < model.train.d(); ++k) {
      row.push_back(model.train.X(i, k));
    }
    X.push_back(row);
  }
  j["data"] = {{"X", X}, {"y", vec_to_json(model.train.y)}};
  return j.dump(2) + "\n";
}

Model model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DomainError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    Model model;
    model.kernel = kernel_from_string(j.at("kernel").get<std::string>());
    const auto& h = j.at("hyperparameters");
    model.hyper.lengthscales = vec_from_json(h.at("lengthscales"));
    model.hyper.outputscale = h.at("outputscale").get<double>();
    model.hyper.noise = h.at("noise").get<double>();
    model.hyper.mean_const = h.at("mean_const").get<double>();
    model.hyper.validate();
    model.rho = vec_from_json(j.at("rho"));
    model.support = j.at("support").get<std::vector<Index>>();
    const auto& s = j.at("standardization");
    model.standardizer.shift = s.at("shift").get<double>();
    model.standardizer.scale = s.at("scale").get<double>();
    model.standardizer.degenerate = s.at("degenerate").get<bool>();
    const auto& d = j.at("data");
    const auto& X = d.at("X");
    const Index n = static_cast<Index>(X.size());
    const Index dim = n > 0 ? static_cast<Index>(X.at(0).size()) : 0;
    Eigen::MatrixXd Xm(n, dim);
    for (Index i = 0; i < n; ++i) {
      const auto& row = X.at(static_cast<std::size_t>(i));
      for (Index k = 0; k < dim; ++k) {
        Xm(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
      }
    }
    model.train = Dataset::validated(std::move(Xm), vec_from_json(d.at("y")));
    if (model.rho.size() != model.train.n()) {
      throw DomainError("rho length does not match the stored training data");
    }
    return model;
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write file: " + path);
  out << model_to_json(model);
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open model file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace rrp
