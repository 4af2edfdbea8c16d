#pragma once

// Reference values for a constant division rate beta0. With a constant rate
// the reset clock is a Poisson process, and the age at time t is either the
// initial age plus t (no reset, probability e^{-beta0 t}) or the backward
// recurrence time, with density beta0 e^{-beta0 u} on [0, t). Everything here
// is evaluated from those formulas with plain Simpson quadrature and shares
// no code with the solvers.

#include <cmath>
#include <functional>
#include <vector>

namespace reference {

inline double simpson(const std::function<double(double)>& f, double lo, double hi, int intervals = 20000) {
  if (hi <= lo) return 0.0;
  if (intervals % 2 == 1) ++intervals;
  const double h = (hi - lo) / intervals;
  double sum = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * f(lo + h * i);
  return sum * h / 3.0;
}

// M_t f(a) = e^{-beta0 t} f(a + t) + int_0^t beta0 e^{-beta0 u} f(u) du.
inline double dual(const std::function<double(double)>& f, double beta0, double t, double a) {
  const double newborn = simpson([&](double u) { return beta0 * std::exp(-beta0 * u) * f(u); }, 0.0, t);
  return std::exp(-beta0 * t) * f(a + t) + newborn;
}

struct PointMass {
  double location;
  double weight;
};

// (mu_in M_t) f for mu_in = sum of atoms plus a density on [0, density_end].
inline double forward(const std::vector<PointMass>& atoms, const std::function<double(double)>& density,
                      double density_end, const std::function<double(double)>& f, double beta0, double t) {
  const double survive = std::exp(-beta0 * t);
  double mass = 0.0;
  double transported = 0.0;
  for (const auto& p : atoms) {
    mass += p.weight;
    transported += p.weight * survive * f(p.location + t);
  }
  if (density) {
    mass += simpson(density, 0.0, density_end);
    transported += survive * simpson([&](double a) { return density(a) * f(a + t); }, 0.0, density_end);
  }
  const double newborn = simpson([&](double a) { return beta0 * std::exp(-beta0 * a) * f(a); }, 0.0, t);
  return transported + mass * newborn;
}

// Newborn density of a unit-mass datum at age a < t.
inline double newborn_density(double beta0, double a) { return beta0 * std::exp(-beta0 * a); }

// ||delta_0 M_t - mu_inf||_TV: the surviving atom carries e^{-beta0 t}, and
// mu_inf puts the same mass on (t, inf) where the evolved measure has none.
inline double tv_dirac_zero_to_stationary(double beta0, double t) { return 2.0 * std::exp(-beta0 * t); }

// Distribution function of delta_{a0} M_t.
inline double cdf_from_dirac(double a0, double beta0, double t, double x) {
  double cdf = 1.0 - std::exp(-beta0 * std::min(x, t));
  if (x >= a0 + t) cdf += std::exp(-beta0 * t);
  return cdf;
}

}  // namespace reference
