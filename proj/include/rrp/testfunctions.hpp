#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "rrp/dataset.hpp"

namespace rrp {

enum class TestFunction { Sine, Friedman5, Friedman10, Hartmann6, Neal };

TestFunction test_function_from_string(std::string_view name);
std::string to_string(TestFunction f);
Index test_function_dim(TestFunction f);

/// f(x) for a single input in the unit cube of the function's dimension.
double test_function_value(TestFunction f, const Eigen::RowVectorXd& x);

struct GeneratedData {
  Dataset data;
  Eigen::VectorXd latent;  // noise-free function values
};

/// n inputs uniform on the unit cube, targets latent + N(0, noise_sigma^2).
GeneratedData gen_function(TestFunction f, Index n, double noise_sigma,
                           std::uint64_t seed);

}  // namespace rrp
