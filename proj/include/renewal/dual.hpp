#pragma once

// Right (dual) semigroup f0 -> M_t f0 of the renewal equation, built as the
// fixed point of the Duhamel map
//
//   Gf(t,a) = f0(t+a) e^{-(B(a+t)-B(a))}
//           + int_0^t e^{-(B(a+s)-B(a))} beta(a+s) f(t-s,0) ds
//
// on short time windows. Gf depends on f only through the boundary trace
// f(.,0), so the Picard iteration runs on the trace; the full age profile is
// assembled once the trace has converged. Time and age share one grid step,
// so a+s always lands on a node.
//
// The reset integral is taken cell by cell: the kernel e^{-B} beta integrates
// exactly to the reset probability of the cell and the trace enters through
// the trapezoid mean of its end values. The weights are positive and sum to
// 1 - e^{-(B(a+t)-B(a))}, so constants are kept exactly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "renewal/errors.hpp"
#include "renewal/grid.hpp"
#include "renewal/hazard.hpp"
#include "renewal/measure.hpp"

namespace renewal {

struct DualOptions {
  double tol_picard = 1e-12;
  int max_iter = 200;
};

// a -> f'(a) + beta(a) (f(0) - f(a)).
inline TestFunction apply_generator(const TestFunction& f, const HazardRate& rate) {
  if (!f.has_derivative()) throw ContractError("the generator needs a test function with a derivative");
  TestFunction out;
  out.value = [f, rate](double a) { return f.derivative(a) + rate(a) * (f(0.0) - f(a)); };
  return out;
}

// One window of the dual problem.
struct DualSolution {
  double h = 0.0;
  std::size_t steps = 0;
  GridFunction initial;                    // f(0, .)
  std::vector<double> trace;               // f(t_n, 0), n = 0..steps
  GridFunction final;                      // f(steps * h, .)
  std::vector<double> picard_differences;  // sup |g_{i+1} - g_i| per iteration

  [[nodiscard]] double window_length() const { return h * static_cast<double>(steps); }

  // f(t_n, a_j) from the stored trace, for j + n < initial.size().
  [[nodiscard]] double value(const HazardRate& rate, std::size_t n, std::size_t j) const {
    if (n > steps || j + n >= initial.size()) throw DomainError("dual value requested outside the window");
    const auto& B = rate.cumulative_nodes();
    double v = initial.values[j + n] * std::exp(B[j] - B[j + n]);
    for (std::size_t k = 1; k <= n; ++k) {
      const double reset = std::exp(B[j] - B[j + k - 1]) * -std::expm1(B[j + k - 1] - B[j + k]);
      v += reset * 0.5 * (trace[n - k] + trace[n - k + 1]);
    }
    return v;
  }
};

namespace detail {

inline void check_grid(const HazardRate& rate, double h, std::size_t nodes) {
  if (std::abs(rate.h() - h) > 1e-12 * h) throw ContractError("profile and hazard grids have different steps");
  if (nodes > rate.nodes()) {
    throw DomainError("hazard grid too short: need " + std::to_string(nodes) + " nodes, have " +
                      std::to_string(rate.nodes()));
  }
}

// Number of steps per Picard window: window * beta_max <= 1/2.
inline std::size_t window_steps(const HazardRate& rate) {
  const double beta_max = rate.bounds().beta_max;
  const auto steps = beta_max > 0.0 ? static_cast<std::size_t>(std::floor(0.5 / (beta_max * rate.h()) + 1e-9))
                                    : std::size_t{1} << 30;
  if (steps == 0) throw ContractError("grid step too coarse for a contractive Picard window (h * beta_max > 1/2)");
  return steps;
}

}  // namespace detail

// Solves one window of length steps * h starting from the age profile
// `initial`. The returned final profile has steps fewer nodes than the input.
inline DualSolution picard_window(const GridFunction& initial, const HazardRate& rate, std::size_t steps,
                                  const DualOptions& options = {}) {
  const double h = initial.h;
  detail::check_grid(rate, h, initial.size());
  if (steps == 0) return {h, 0, initial, {initial.values.empty() ? 0.0 : initial.values[0]}, initial, {}};
  if (initial.size() <= steps) throw ContractError("initial profile shorter than the window");
  if (h * static_cast<double>(steps) * rate.bounds().beta_max > 0.5 + 1e-12) {
    throw ContractError("window too long: T_w * beta_max must not exceed 1/2");
  }

  const auto& B = rate.cumulative_nodes();
  const auto& p = initial.values;

  // Probability of a reset in cell [a_i, a_{i+1}] given survival to a_i.
  const std::size_t span_nodes = initial.size();
  std::vector<double> cell(span_nodes - 1);
  for (std::size_t i = 0; i + 1 < span_nodes; ++i) cell[i] = -std::expm1(B[i] - B[i + 1]);

  // Kernel and free term of the trace equation (a = 0).
  std::vector<double> kernel(steps + 1, 0.0);
  std::vector<double> free_term(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double survival = std::exp(-B[k]);
    if (k > 0) kernel[k] = std::exp(-B[k - 1]) * cell[k - 1];
    free_term[k] = p[k] * survival;
  }

  DualSolution sol;
  sol.h = h;
  sol.steps = steps;
  sol.initial = initial;
  sol.trace = free_term;
  std::vector<double> next(steps + 1);
  for (int iter = 0;; ++iter) {
    if (iter >= options.max_iter) {
      throw ConvergenceError("Picard iteration did not reach tolerance in " + std::to_string(options.max_iter) +
                             " iterations");
    }
    next[0] = free_term[0];
    for (std::size_t n = 1; n <= steps; ++n) {
      double sum = 0.0;
      for (std::size_t k = 1; k <= n; ++k) sum += kernel[k] * (sol.trace[n - k] + sol.trace[n - k + 1]);
      next[n] = free_term[n] + 0.5 * sum;
    }
    double diff = 0.0;
    for (std::size_t n = 0; n <= steps; ++n) diff = std::max(diff, std::abs(next[n] - sol.trace[n]));
    sol.trace.swap(next);
    sol.picard_differences.push_back(diff);
    if (diff <= options.tol_picard) break;
  }

  // Assemble f(T_w, a_j). Survival ratios are formed blockwise against a
  // local reference age so that e^{-B} never underflows.
  const std::size_t out_nodes = initial.size() - steps;
  sol.final.h = h;
  sol.final.values.assign(out_nodes, 0.0);
  const std::size_t block = std::max<std::size_t>(steps, 64);
  std::vector<double> local(block + steps);
  for (std::size_t start = 0; start < out_nodes; start += block) {
    const std::size_t stop = std::min(out_nodes, start + block);
    const std::size_t span = stop - start + steps;
    for (std::size_t i = 0; i < span; ++i) local[i] = std::exp(B[start] - B[start + i]);
    for (std::size_t j = start; j < stop; ++j) {
      const std::size_t r = j - start;
      double sum = 0.0;
      for (std::size_t k = 1; k <= steps; ++k) {
        sum += local[r + k - 1] * cell[j + k - 1] * (sol.trace[steps - k] + sol.trace[steps - k + 1]);
      }
      sol.final.values[j] = (p[j + steps] * local[r + steps] + 0.5 * sum) / local[r];
    }
  }
  return sol;
}

// M_t applied to a grid profile. The input must cover [0, out_extent + t];
// the result covers [0, out_extent].
inline GridFunction evolve_dual(const GridFunction& f0, const HazardRate& rate, double t, double out_extent,
                                const DualOptions& options = {}) {
  const double h = f0.h;
  const std::size_t total = steps_of(t, h);
  const std::size_t out_nodes = static_cast<std::size_t>(std::llround(std::ceil(out_extent / h - 1e-9))) + 1;
  if (f0.size() < out_nodes + total) {
    throw DomainError("initial profile does not cover [0, out_extent + t]");
  }
  const std::size_t per_window = detail::window_steps(rate);
  GridFunction profile = f0;
  profile.values.resize(out_nodes + total);
  std::size_t done = 0;
  while (done < total) {
    const std::size_t steps = std::min(per_window, total - done);
    profile = picard_window(profile, rate, steps, options).final;
    done += steps;
  }
  return profile;
}

// Samples f0 on [0, out_extent + t] and returns M_t f0 on [0, out_extent].
inline GridFunction evolve_dual(const TestFunction& f0, const HazardRate& rate, double t, double out_extent,
                                const DualOptions& options = {}) {
  const double h = rate.h();
  const std::size_t total = steps_of(t, h);
  const std::size_t out_nodes = static_cast<std::size_t>(std::llround(std::ceil(out_extent / h - 1e-9))) + 1;
  GridFunction sampled{h, std::vector<double>(out_nodes + total)};
  for (std::size_t j = 0; j < sampled.size(); ++j) sampled.values[j] = f0.checked(sampled.node(j));
  return evolve_dual(sampled, rate, t, out_extent, options);
}

struct GeneratorReport {
  double h = 0.0;
  double generator_residual = 0.0;  // sup |(M_h f0 - f0)/h - A f0|
  double evolved_residual = 0.0;    // sup |(M_h f0 - f0)/h - A M_h f0|
};

// Finite-difference check of d/dt M_t f0 at t = 0 against the generator, on ages [0, a_check].
inline GeneratorReport generator_consistency(const TestFunction& f0, const HazardRate& rate, double h,
                                             double a_check, const DualOptions& options = {}) {
  const TestFunction generator = apply_generator(f0, rate);
  // One extra node so the evolved profile can be differentiated at a_check.
  const double grid_h = rate.h();
  const GridFunction evolved = evolve_dual(f0, rate, h, a_check + grid_h, options);
  GeneratorReport report{h, 0.0, 0.0};
  const double at_zero = evolved.values[0];
  const std::size_t last = evolved.size() - 1;
  for (std::size_t j = 0; j < last; ++j) {
    const double a = evolved.node(j);
    const double quotient = (evolved.values[j] - f0.checked(a)) / h;
    report.generator_residual = std::max(report.generator_residual, std::abs(quotient - generator(a)));
    const double slope = j == 0 ? (-3.0 * evolved.values[0] + 4.0 * evolved.values[1] - evolved.values[2]) / (2.0 * grid_h)
                                : (evolved.values[j + 1] - evolved.values[j - 1]) / (2.0 * grid_h);
    const double evolved_generator = slope + rate.beta_node(j) * (at_zero - evolved.values[j]);
    report.evolved_residual = std::max(report.evolved_residual, std::abs(quotient - evolved_generator));
  }
  return report;
}

}  // namespace renewal
