#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "renewal/errors.hpp"

namespace renewal {

// Converts a time or age to a whole number of grid steps.
//
// Values must be multiples of the step up to a relative slack of 1e-9;
// anything else is a contract error because every solver in the library
// relies on characteristics landing exactly on grid nodes.
inline std::size_t steps_of(double value, double h) {
  if (!(h > 0.0)) throw ContractError("grid step must be positive");
  if (value < 0.0) throw ContractError("negative time or age: " + std::to_string(value));
  const double ratio = value / h;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw ContractError("value " + std::to_string(value) + " is not a multiple of the grid step " +
                        std::to_string(h));
  }
  return static_cast<std::size_t>(rounded);
}

// Composite trapezoid over uniformly spaced samples.
inline double trapezoid(std::span<const double> values, double h) {
  if (values.size() < 2) return 0.0;
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
  return h * sum;
}

// Trapezoid weight of node `j` in a rule with `n` nodes (without the factor h).
inline double trapezoid_weight(std::size_t j, std::size_t n) {
  return (j == 0 || j + 1 == n) ? 0.5 : 1.0;
}

// Node values of a function on the uniform grid {0, h, 2h, ...}, linearly
// interpolated between nodes.
struct GridFunction {
  double h = 1e-3;
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] double extent() const {
    return values.empty() ? 0.0 : h * static_cast<double>(values.size() - 1);
  }
  [[nodiscard]] double node(std::size_t j) const { return h * static_cast<double>(j); }

  [[nodiscard]] double at(double a) const {
    if (values.empty()) throw DomainError("empty grid function");
    if (a < 0.0 || a > extent() * (1.0 + 1e-12) + 1e-14) {
      throw DomainError("age " + std::to_string(a) + " outside grid [0, " + std::to_string(extent()) + "]");
    }
    const double x = a / h;
    const auto j = std::min(static_cast<std::size_t>(x), values.size() - 1);
    if (j + 1 >= values.size()) return values.back();
    const double s = x - static_cast<double>(j);
    return values[j] + s * (values[j + 1] - values[j]);
  }

  [[nodiscard]] double sup_norm() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

}  // namespace renewal
