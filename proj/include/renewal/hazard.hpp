#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "renewal/errors.hpp"
#include "renewal/grid.hpp"

namespace renewal {

// Declared structural bounds of a division rate:
// beta_min on [a_star, inf) <= beta <= beta_max. a_star == 0 means the lower
// bound holds everywhere.
struct HazardBounds {
  double beta_min = 1.0;
  double beta_max = 1.0;
  double a_star = 0.0;
};

// Increments between neighbouring nodes larger than this fraction of
// beta_max are reported as discontinuities.
inline constexpr double kContinuityJumpFraction = 0.05;

// Division rate sampled on a uniform age grid together with its cumulative
// hazard B(a) = int_0^a beta. Between nodes beta is taken piecewise linear,
// and B is the exact integral of that interpolant, so B is exact at every
// node for piecewise-linear rates with breakpoints on the grid.
class HazardRate {
 public:
  HazardRate(std::function<double(double)> rate, HazardBounds bounds, double h, double extent)
      : rate_(std::move(rate)), bounds_(bounds), h_(h) {
    if (!(h > 0.0)) throw ContractError("hazard grid step must be positive");
    if (!(extent > 0.0)) throw ContractError("hazard grid extent must be positive");
    const auto n = static_cast<std::size_t>(std::ceil(extent / h - 1e-9)) + 1;
    beta_.resize(n);
    cumulative_.resize(n);
    for (std::size_t j = 0; j < n; ++j) beta_[j] = rate_(h * static_cast<double>(j));
    cumulative_[0] = 0.0;
    for (std::size_t j = 1; j < n; ++j) cumulative_[j] = cumulative_[j - 1] + 0.5 * h * (beta_[j - 1] + beta_[j]);
  }

  [[nodiscard]] const HazardBounds& bounds() const { return bounds_; }
  [[nodiscard]] double h() const { return h_; }
  [[nodiscard]] std::size_t nodes() const { return beta_.size(); }
  [[nodiscard]] double extent() const { return h_ * static_cast<double>(beta_.size() - 1); }

  // Rate from the underlying evaluator, valid at any age.
  [[nodiscard]] double operator()(double a) const { return rate_(a); }

  [[nodiscard]] double beta_node(std::size_t j) const { return beta_.at(j); }
  [[nodiscard]] double cumulative_node(std::size_t j) const { return cumulative_.at(j); }
  [[nodiscard]] const std::vector<double>& beta_nodes() const { return beta_; }
  [[nodiscard]] const std::vector<double>& cumulative_nodes() const { return cumulative_; }

  // Piecewise-linear interpolant of the sampled rate.
  [[nodiscard]] double beta_interpolated(double a) const {
    const auto [j, s] = locate(a);
    if (j + 1 >= beta_.size()) return beta_.back();
    return beta_[j] + s * (beta_[j + 1] - beta_[j]);
  }

  // B(a). Throws DomainError beyond the padded grid.
  [[nodiscard]] double cumulative(double a) const {
    const auto [j, s] = locate(a);
    if (j + 1 >= beta_.size()) return cumulative_.back();
    const double slope = beta_[j + 1] - beta_[j];
    return cumulative_[j] + h_ * s * (beta_[j] + 0.5 * s * slope);
  }

  // Probability of no reset while ageing from a to a + t.
  [[nodiscard]] double survival(double a, double t) const {
    return std::exp(-(cumulative(a + t) - cumulative(a)));
  }

 private:
  [[nodiscard]] std::pair<std::size_t, double> locate(double a) const {
    if (!(a >= 0.0) || a > extent() * (1.0 + 1e-12) + 1e-14) {
      throw DomainError("age " + std::to_string(a) + " outside the hazard grid [0, " +
                        std::to_string(extent()) + "]");
    }
    const double x = a / h_;
    auto j = static_cast<std::size_t>(x);
    if (j >= beta_.size() - 1) return {beta_.size() - 1, 0.0};
    return {j, x - static_cast<double>(j)};
  }

  std::function<double(double)> rate_;
  HazardBounds bounds_;
  double h_;
  std::vector<double> beta_;
  std::vector<double> cumulative_;
};

struct HazardViolation {
  std::string kind;  // "negative", "above_beta_max", "below_beta_min", "discontinuity", "bounds"
  double age = 0.0;
  double value = 0.0;
  double bound = 0.0;
};

struct ValidationReport {
  std::vector<HazardViolation> violations;

  [[nodiscard]] bool passed() const { return violations.empty(); }
  [[nodiscard]] std::string summary() const {
    if (passed()) return "rate valid";
    const auto& v = violations.front();
    return v.kind + " at age " + std::to_string(v.age) + " (value " + std::to_string(v.value) +
           ", bound " + std::to_string(v.bound) + "), " + std::to_string(violations.size()) +
           " violation(s) in total";
  }
};

// Checks the declared bounds and grid-level continuity at every node.
inline ValidationReport validate(const HazardRate& rate) {
  ValidationReport report;
  const auto& b = rate.bounds();
  if (!(b.beta_min > 0.0) || !(b.beta_max >= b.beta_min) || !(b.a_star >= 0.0)) {
    report.violations.push_back({"bounds", 0.0, b.beta_min, b.beta_max});
  }
  const double slack = 1e-12 * std::max(1.0, b.beta_max);
  const double jump = kContinuityJumpFraction * b.beta_max;
  const auto& beta = rate.beta_nodes();
  for (std::size_t j = 0; j < beta.size(); ++j) {
    const double a = rate.h() * static_cast<double>(j);
    const double v = beta[j];
    if (!std::isfinite(v) || v < 0.0) report.violations.push_back({"negative", a, v, 0.0});
    if (v > b.beta_max + slack) report.violations.push_back({"above_beta_max", a, v, b.beta_max});
    if (a >= b.a_star && v < b.beta_min - slack) report.violations.push_back({"below_beta_min", a, v, b.beta_min});
    if (j > 0 && std::abs(v - beta[j - 1]) > jump) report.violations.push_back({"discontinuity", a, v, jump});
  }
  return report;
}

inline HazardRate constant_rate(double value, double h, double extent, double a_star = 0.0) {
  return {[value](double) { return value; }, {value, value, a_star}, h, extent};
}

// Piecewise-linear rate through (age, value) points, constant beyond the last point.
inline std::function<double(double)> table_function(std::vector<std::pair<double, double>> points) {
  if (points.empty()) throw ContractError("rate table needs at least one point");
  std::sort(points.begin(), points.end());
  return [points = std::move(points)](double a) {
    if (a <= points.front().first) return points.front().second;
    if (a >= points.back().first) return points.back().second;
    auto hi = std::upper_bound(points.begin(), points.end(), a,
                               [](double x, const std::pair<double, double>& p) { return x < p.first; });
    auto lo = hi - 1;
    const double s = (a - lo->first) / (hi->first - lo->first);
    return lo->second + s * (hi->second - lo->second);
  };
}

}  // namespace renewal
