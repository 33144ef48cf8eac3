#pragma once

// Named scalar test functions with their Lipschitz and sup bounds, shared
// by the CLI verbs and the test suites so configs can refer to them by name.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace gexp {

struct NamedFunction {
  std::string name;
  std::function<double(double)> fn;
  double lip;    // Lipschitz constant (upper bound)
  double bound;  // sup |fn|
};

inline const std::vector<NamedFunction>& named_functions() {
  static const std::vector<NamedFunction> fns = {
      {"zero", [](double) { return 0.0; }, 0.0, 0.0},
      {"absmin10", [](double x) { return std::min(std::abs(x), 10.0); }, 1.0,
       10.0},
      {"neg_absmin10", [](double x) { return -std::min(std::abs(x), 10.0); },
       1.0, 10.0},
      {"tanh", [](double x) { return std::tanh(x); }, 1.0, 1.0},
      {"atan", [](double x) { return std::atan(x); }, 1.0,
       std::numbers::pi / 2},
      {"gauss", [](double x) { return std::exp(-x * x); }, 0.8578, 1.0},
      {"clip5", [](double x) { return std::clamp(x, -5.0, 5.0); }, 1.0, 5.0},
      {"bump_mix",
       [](double x) {
         return std::exp(-(x - 0.4) * (x - 0.4)) + 0.3 * std::tanh(x);
       },
       1.158, 1.3},
  };
  return fns;
}

inline const NamedFunction& named_function(const std::string& name) {
  for (const auto& f : named_functions())
    if (f.name == name) return f;
  throw std::invalid_argument("unknown function name: " + name);
}

}  // namespace gexp
