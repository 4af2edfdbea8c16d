#pragma once

// Left action mu_in -> mu_in M_t, i.e. the measure solution of the
// conservative renewal equation started from mu_in.
//
// Every atom (a_i, w_i) ages deterministically and keeps the weight
// w_i e^{-(B(a_i+t)-B(a_i))}; the initial density is transported and decayed
// the same way; everything else is the newborn density b(t-a) e^{-B(a)} on
// [0, t), where b is the flux of resets through age zero. The flux is fixed
// by the balance "mass born by time t = mass lost by the initial datum by
// time t",
//
//   int_0^t b(s) e^{-B(t-s)} ds = L(t),
//
// which is the time integral of the renewal equation for b. Discretising that
// balance with the trapezoid rule (the same rule used to measure mass on the
// density grid) makes the scheme conserve mass to rounding error.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "renewal/dual.hpp"
#include "renewal/errors.hpp"
#include "renewal/grid.hpp"
#include "renewal/hazard.hpp"
#include "renewal/measure.hpp"

namespace renewal {

// Sampled flux of newborns b(t_n), n = 0..N.
struct BoundaryFlux {
  double h = 0.0;
  std::vector<double> values;

  [[nodiscard]] double horizon() const {
    return values.empty() ? 0.0 : h * static_cast<double>(values.size() - 1);
  }
};

class ForwardSolution {
 public:
  ForwardSolution(SignedMeasure initial, HazardRate rate, double horizon)
      : initial_(std::move(initial)), rate_(std::move(rate)) {
    const double h = rate_.h();
    steps_ = steps_of(horizon, h);
    const auto& density = initial_.density();
    if (initial_.has_density() && std::abs(density.h - h) > 1e-12 * h) {
      throw ContractError("initial density and hazard grids have different steps");
    }
    const std::size_t needed = std::max(initial_.has_density() ? density.size() : 0, std::size_t{1}) + steps_;
    if (needed > rate_.nodes()) {
      throw DomainError("horizon " + std::to_string(horizon) + " exceeds the padded hazard grid (extent " +
                        std::to_string(rate_.extent()) + ")");
    }
    for (const auto& atom : initial_.atoms()) {
      if (atom.location + horizon > rate_.extent() * (1.0 + 1e-12)) {
        throw DomainError("atom at " + std::to_string(atom.location) + " leaves the hazard grid before the horizon");
      }
    }
    solve();
  }

  [[nodiscard]] const BoundaryFlux& flux() const { return flux_; }
  [[nodiscard]] const SignedMeasure& initial() const { return initial_; }
  [[nodiscard]] const HazardRate& rate() const { return rate_; }
  [[nodiscard]] double horizon() const { return flux_.horizon(); }
  [[nodiscard]] std::size_t steps() const { return steps_; }

  [[nodiscard]] SignedMeasure at(double t) const { return at_step(steps_of(t, rate_.h())); }

  [[nodiscard]] SignedMeasure at_step(std::size_t n) const {
    if (n > steps_) throw DomainError("requested time beyond the solved horizon");
    if (n == 0) return initial_;
    const double h = rate_.h();
    const double t = h * static_cast<double>(n);
    const auto& B = rate_.cumulative_nodes();
    const auto& b = flux_.values;

    std::vector<Atom> atoms;
    atoms.reserve(initial_.atoms().size());
    for (const auto& atom : initial_.atoms()) {
      atoms.push_back({atom.location + t, atom.weight * rate_.survival(atom.location, t)});
    }

    const auto& v = initial_.density().values;
    const std::size_t m = initial_.has_density() ? v.size() : 0;
    GridFunction density{h, std::vector<double>(std::max(m + n, n + 2), 0.0)};
    for (std::size_t k = 0; k < n; ++k) density.values[k] = b[n - k] * std::exp(-B[k]);
    // Node n separates newborns from transported mass; it stores the mean of
    // the one-sided limits so the trapezoid rule weighs each side by h/2.
    density.values[n] = 0.5 * b[0] * std::exp(-B[n]) + (m > 0 ? 0.5 * v[0] * std::exp(-B[n]) : 0.0);
    for (std::size_t j = 1; j < m; ++j) density.values[n + j] = v[j] * std::exp(B[j] - B[j + n]);
    return {std::move(atoms), std::move(density)};
  }

  // Snapshots at every multiple of `step` up to the horizon.
  [[nodiscard]] std::vector<std::pair<double, SignedMeasure>> snapshots(double step) const {
    const std::size_t stride = steps_of(step, rate_.h());
    if (stride == 0) throw ContractError("snapshot step must be positive");
    std::vector<std::pair<double, SignedMeasure>> out;
    for (std::size_t n = 0; n <= steps_; n += stride) out.emplace_back(rate_.h() * static_cast<double>(n), at_step(n));
    return out;
  }

 private:
  void solve() {
    const double h = rate_.h();
    const auto& B = rate_.cumulative_nodes();
    const auto& beta = rate_.beta_nodes();
    const auto& v = initial_.density().values;
    const std::size_t m = initial_.has_density() ? v.size() : 0;
    const double mass0 = initial_.mass();

    flux_.h = h;
    flux_.values.assign(steps_ + 1, 0.0);
    auto& b = flux_.values;

    // b(0) = int beta d mu_in.
    double b0 = 0.0;
    for (const auto& atom : initial_.atoms()) b0 += atom.weight * rate_.beta_interpolated(atom.location);
    for (std::size_t j = 0; j < m; ++j) b0 += h * trapezoid_weight(j, m) * v[j] * beta[j];
    b[0] = b0;
    if (steps_ == 0) return;

    // Mass still carried by the initial datum at t_n.
    std::vector<double> remaining(steps_ + 1, 0.0);
    for (std::size_t n = 1; n <= steps_; ++n) {
      const double t = h * static_cast<double>(n);
      double r = 0.0;
      for (const auto& atom : initial_.atoms()) r += atom.weight * rate_.survival(atom.location, t);
      remaining[n] = r;
    }
    if (m > 0) {
      const bool safe = B[m - 1 + steps_] < 600.0;
      std::vector<double> scaled(m);
      for (std::size_t j = 0; j < m; ++j) scaled[j] = h * trapezoid_weight(j, m) * v[j] * (safe ? std::exp(B[j]) : 1.0);
      std::vector<double> decay;
      if (safe) {
        decay.resize(m + steps_);
        for (std::size_t i = 0; i < decay.size(); ++i) decay[i] = std::exp(-B[i]);
      }
      for (std::size_t n = 1; n <= steps_; ++n) {
        double r = 0.0;
        if (safe) {
          for (std::size_t j = 0; j < m; ++j) r += scaled[j] * decay[j + n];
        } else {
          for (std::size_t j = 0; j < m; ++j) r += scaled[j] * std::exp(B[j] - B[j + n]);
        }
        remaining[n] += r;
      }
    }

    std::vector<double> survival(steps_ + 1);
    for (std::size_t k = 0; k <= steps_; ++k) survival[k] = std::exp(-B[k]);
    for (std::size_t n = 1; n <= steps_; ++n) {
      const double lost = mass0 - remaining[n];
      double born = 0.5 * b[0] * survival[n];
      for (std::size_t k = 1; k < n; ++k) born += b[n - k] * survival[k];
      b[n] = 2.0 * (lost / h - born);
    }
  }

  SignedMeasure initial_;
  HazardRate rate_;
  std::size_t steps_ = 0;
  BoundaryFlux flux_;
};

inline BoundaryFlux solve_flux(const SignedMeasure& initial, const HazardRate& rate, double horizon) {
  return ForwardSolution(initial, rate, horizon).flux();
}

inline SignedMeasure evolve_measure(const SignedMeasure& initial, const HazardRate& rate, double t) {
  return ForwardSolution(initial, rate, t).at(t);
}

// Smallest grid-aligned extent covering every age that carries mass.
inline double covering_extent(const SignedMeasure& mu, double h) {
  return h * std::ceil(mu.support_end() / h - 1e-9);
}

// |(mu_in M_t) f0 - mu_in (M_t f0)|.
inline double duality_gap(const SignedMeasure& initial, const TestFunction& f0, const HazardRate& rate, double t,
                          const DualOptions& options = {}) {
  const double forward = integrate(evolve_measure(initial, rate, t), f0);
  const GridFunction evolved = evolve_dual(f0, rate, t, covering_extent(initial, rate.h()), options);
  return std::abs(forward - integrate(initial, evolved));
}

// |mu_t f - mu_in f - int_0^t mu_s(A f) ds| with the time integral taken by
// the trapezoid rule over snapshots spaced by `snapshot_step`.
inline double meassol_residual(const ForwardSolution& solution, const TestFunction& f, double t,
                               double snapshot_step) {
  const HazardRate& rate = solution.rate();
  const TestFunction generator = apply_generator(f, rate);
  const std::size_t stride = steps_of(snapshot_step, rate.h());
  const std::size_t total = steps_of(t, rate.h());
  if (stride == 0 || total % stride != 0) throw ContractError("t must be a multiple of the snapshot step");
  std::vector<double> samples;
  for (std::size_t n = 0; n <= total; n += stride) samples.push_back(integrate(solution.at_step(n), generator));
  const double integral = trapezoid(samples, snapshot_step);
  return std::abs(integrate(solution.at_step(total), f) - integrate(solution.initial(), f) - integral);
}

inline double meassol_residual(const SignedMeasure& initial, const TestFunction& f, const HazardRate& rate, double t,
                               double snapshot_step) {
  return meassol_residual(ForwardSolution(initial, rate, t), f, t, snapshot_step);
}

}  // namespace renewal
