#include "rrp/testfunctions.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace rrp {

namespace {

// Hartmann 6-dimensional constant tables (4 mixture components).
constexpr double kHartmannAlpha[4] = {1.0, 1.2, 3.0, 3.2};
constexpr double kHartmannA[4][6] = {
    {10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
    {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
    {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
    {17.0, 8.0, 0.05, 10.0, 0.1, 14.0},
};
constexpr double kHartmannP[4][6] = {
    {0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
    {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
    {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
    {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381},
};

// Friedman #1. Inputs beyond the first five are inert, which turns the
// same formula into the 10-dimensional variant.
double friedman(const Eigen::RowVectorXd& x) {
  return 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) +
         20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] + 5.0 * x[4];
}

double hartmann6(const Eigen::RowVectorXd& x) {
  double value = 0.0;
  for (int i = 0; i < 4; ++i) {
    double arg = 0.0;
    for (int j = 0; j < 6; ++j) {
      const double diff = x[j] - kHartmannP[i][j];
      arg += kHartmannA[i][j] * diff * diff;
    }
    value -= kHartmannAlpha[i] * std::exp(-arg);
  }
  return value;
}

double neal(const Eigen::RowVectorXd& x) {
  const double t = 6.0 * x[0] - 3.0;  // unit interval mapped to [-3, 3]
  return 0.3 + 0.4 * t + 0.5 * std::sin(2.7 * t) + 1.1 / (1.0 + t * t);
}

}  // namespace

TestFunction test_function_from_string(std::string_view name) {
  if (name == "sine") return TestFunction::Sine;
  if (name == "friedman5") return TestFunction::Friedman5;
  if (name == "friedman10") return TestFunction::Friedman10;
  if (name == "hartmann6") return TestFunction::Hartmann6;
  if (name == "neal") return TestFunction::Neal;
  throw DomainError("unknown test function '" + std::string(name) + "'");
}

std::string to_string(TestFunction f) {
  switch (f) {
    case TestFunction::Sine: return "sine";
    case TestFunction::Friedman5: return "friedman5";
    case TestFunction::Friedman10: return "friedman10";
    case TestFunction::Hartmann6: return "hartmann6";
    case TestFunction::Neal: return "neal";
  }
  throw DomainError("invalid test function");
}

Index test_function_dim(TestFunction f) {
  switch (f) {
    case TestFunction::Sine: return 1;
    case TestFunction::Friedman5: return 5;
    case TestFunction::Friedman10: return 10;
    case TestFunction::Hartmann6: return 6;
    case TestFunction::Neal: return 1;
  }
  throw DomainError("invalid test function");
}

double test_function_value(TestFunction f, const Eigen::RowVectorXd& x) {
  if (x.size() != test_function_dim(f)) {
    throw DimensionError("input has " + std::to_string(x.size()) +
                         " dimensions, " + to_string(f) + " needs " +
                         std::to_string(test_function_dim(f)));
  }
  switch (f) {
    case TestFunction::Sine:
      return std::sin(2.0 * std::numbers::pi * x[0]);
    case TestFunction::Friedman5:
    case TestFunction::Friedman10:
      return friedman(x);
    case TestFunction::Hartmann6:
      return hartmann6(x);
    case TestFunction::Neal:
      return neal(x);
  }
  throw DomainError("invalid test function");
}

GeneratedData gen_function(TestFunction f, Index n, double noise_sigma,
                           std::uint64_t seed) {
  if (n < 1) throw DomainError("need n >= 1 samples");
  if (noise_sigma < 0.0) throw DomainError("noise_sigma must be >= 0");
  const Index d = test_function_dim(f);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  GeneratedData out;
  out.data.X.resize(n, d);
  out.data.y.resize(n);
  out.latent.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) out.data.X(i, k) = unit(rng);
  }
  for (Index i = 0; i < n; ++i) {
    out.latent[i] = test_function_value(f, out.data.X.row(i));
    out.data.y[i] =
        out.latent[i] + (noise_sigma > 0.0 ? noise_sigma * gauss(rng) : 0.0);
  }
  return out;
}

}  // namespace rrp
