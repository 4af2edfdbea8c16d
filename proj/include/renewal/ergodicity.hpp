#pragma once

// Long-time behaviour: the invariant probability measure, Doeblin
// minorization constants for the renewal semigroup, and experiments measuring
// the total-variation contraction they imply.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "renewal/dual.hpp"
#include "renewal/errors.hpp"
#include "renewal/forward.hpp"
#include "renewal/grid.hpp"
#include "renewal/hazard.hpp"
#include "renewal/measure.hpp"

namespace renewal {

struct StationaryMeasure {
  double n0 = 0.0;  // density at age zero
  SignedMeasure measure;
};

// Density N(a) = N(0) e^{-B(a)} on [0, a_max], normalised by the trapezoid rule.
inline StationaryMeasure stationary(const HazardRate& rate, double a_max) {
  const std::size_t nodes = steps_of(a_max, rate.h()) + 1;
  if (nodes > rate.nodes()) throw DomainError("a_max beyond the hazard grid");
  GridFunction density{rate.h(), std::vector<double>(nodes)};
  for (std::size_t j = 0; j < nodes; ++j) density.values[j] = std::exp(-rate.cumulative_node(j));
  const double n0 = 1.0 / trapezoid(density.values, density.h);
  for (auto& v : density.values) v *= n0;
  return {n0, SignedMeasure::from_density(std::move(density))};
}

struct DoeblinCertificate {
  double eta = 0.0;    // width of the minorizing window [0, eta]
  double t0 = 0.0;     // a_star + eta
  double c = 0.0;      // eta beta_min e^{-beta_max t0}
  double alpha = 0.0;  // -log(1 - c) / t0

  // nu f = (1/eta) int_0^eta f, by composite Simpson.
  [[nodiscard]] double nu(const TestFunction& f) const {
    constexpr int intervals = 2000;
    const double step = eta / intervals;
    double sum = f.checked(0.0) + f.checked(eta);
    for (int i = 1; i < intervals; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * f.checked(step * i);
    return sum * step / 3.0 / eta;
  }
};

inline DoeblinCertificate certificate(const HazardBounds& bounds, double eta) {
  if (!(eta > 0.0)) throw ContractError("eta must be positive");
  if (!(bounds.beta_min > 0.0) || bounds.beta_min > bounds.beta_max) {
    throw ContractError("certificate needs 0 < beta_min <= beta_max");
  }
  DoeblinCertificate cert;
  cert.eta = eta;
  cert.t0 = bounds.a_star + eta;
  cert.c = eta * bounds.beta_min * std::exp(-bounds.beta_max * cert.t0);
  if (!(cert.c > 0.0 && cert.c < 1.0)) throw ContractError("Doeblin constant outside (0, 1)");
  cert.alpha = -std::log1p(-cert.c) / cert.t0;
  return cert;
}

inline DoeblinCertificate certificate(const HazardRate& rate, double eta) { return certificate(rate.bounds(), eta); }

// Maximises alpha(eta) over (0, eta_max]: a dense scan picks the best grid
// point, then golden-section search refines inside its neighbouring cells.
// The scan is authoritative; refinement is only kept when it improves alpha.
inline DoeblinCertificate best_certificate(const HazardBounds& bounds, double eta_max = 10.0, int scan_points = 2000) {
  if (scan_points < 3) throw ContractError("scan needs at least three points");
  const double step = eta_max / scan_points;
  DoeblinCertificate best = certificate(bounds, step);
  int best_index = 1;
  for (int i = 2; i <= scan_points; ++i) {
    const auto cert = certificate(bounds, step * i);
    if (cert.alpha > best.alpha) {
      best = cert;
      best_index = i;
    }
  }
  double lo = std::max(step * (best_index - 1), 1e-9 * eta_max);
  double hi = std::min(step * (best_index + 1), eta_max);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = certificate(bounds, x1).alpha;
  double f2 = certificate(bounds, x2).alpha;
  for (int iter = 0; iter < 200 && hi - lo > 1e-12 * eta_max; ++iter) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = certificate(bounds, x2).alpha;
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = certificate(bounds, x1).alpha;
    }
  }
  const auto refined = certificate(bounds, 0.5 * (lo + hi));
  return refined.alpha > best.alpha ? refined : best;
}

inline DoeblinCertificate best_certificate(const HazardRate& rate, double eta_max = 10.0, int scan_points = 2000) {
  return best_certificate(rate.bounds(), eta_max, scan_points);
}

struct NamedTestFunction {
  std::string name;
  TestFunction f;
};

// C^infinity bump supported on (center - width, center + width), peak 1.
inline TestFunction smooth_bump(double center, double width) {
  TestFunction f;
  f.sup_bound = 1.0;
  f.value = [center, width](double a) {
    const double x = (a - center) / width;
    if (std::abs(x) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - x * x));
  };
  f.derivative = [center, width](double a) {
    const double x = (a - center) / width;
    if (std::abs(x) >= 1.0) return 0.0;
    const double q = 1.0 - x * x;
    return std::exp(1.0 - 1.0 / q) * (-2.0 * x / (q * q)) / width;
  };
  return f;
}

inline TestFunction exponential_function(double rate) {
  return {[rate](double a) { return std::exp(-rate * a); }, [rate](double a) { return -rate * std::exp(-rate * a); },
          1.0};
}

// Nonnegative functions used to probe the minorization M_{t0} f >= c nu f.
inline std::vector<NamedTestFunction> minorization_battery(double eta) {
  std::vector<NamedTestFunction> battery;
  battery.push_back({"one", constant_function(1.0)});
  for (int n : {0, 1, 2, 5}) battery.push_back({"truncation_" + std::to_string(n), truncation_family(constant_function(1.0), n)});
  for (double center : {0.5 * eta, eta, 2.0 * eta, 5.0}) {
    for (double width : {0.5 * eta, 0.25 * eta}) {
      battery.push_back({"bump_" + format_number(center) + "_" + format_number(width), smooth_bump(center, width)});
    }
  }
  battery.push_back({"inside_window", smooth_bump(0.5 * eta, 0.5 * eta)});
  battery.push_back({"beyond_window", smooth_bump(eta + 1.0, 0.9)});
  battery.push_back({"exp_1", exponential_function(1.0)});
  battery.push_back({"exp_3", exponential_function(3.0)});
  return battery;
}

struct MinorizationEntry {
  std::string name;
  double nu_f = 0.0;
  double min_evolved = 0.0;
  double margin = 0.0;  // min_a M_t f(a) - c_t nu f
};

struct MinorizationReport {
  double t = 0.0;  // grid time actually used (t0 rounded up to a node)
  double c = 0.0;  // constant valid at that time
  std::vector<MinorizationEntry> entries;

  [[nodiscard]] double min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& e : entries) m = std::min(m, e.margin);
    return m;
  }
  [[nodiscard]] bool passed(double epsilon) const { return min_margin() >= -epsilon; }
};

// Checks M_{t0} f(a) >= c nu f on ages [0, a_check] for each battery entry.
// When t0 is not a grid node the next node t is used together with the
// constant eta beta_min e^{-beta_max t}, which the minorization guarantees
// for every t >= t0.
inline MinorizationReport verify_minorization(const HazardRate& rate, const DoeblinCertificate& cert,
                                              const std::vector<NamedTestFunction>& battery, double a_check,
                                              const DualOptions& options = {}) {
  const double h = rate.h();
  const double steps = std::ceil(cert.t0 / h - 1e-9);
  MinorizationReport report;
  report.t = h * steps;
  report.c = cert.eta * rate.bounds().beta_min * std::exp(-rate.bounds().beta_max * std::max(report.t, cert.t0));
  if (report.t <= cert.t0) report.c = cert.c;
  for (const auto& [name, f] : battery) {
    const GridFunction evolved = evolve_dual(f, rate, report.t, a_check, options);
    MinorizationEntry entry{name, cert.nu(f), 0.0, 0.0};
    entry.min_evolved = *std::min_element(evolved.values.begin(), evolved.values.end());
    entry.margin = entry.min_evolved - report.c * entry.nu_f;
    report.entries.push_back(entry);
  }
  return report;
}

struct DecayRow {
  double t = 0.0;
  double tv = 0.0;
  double bound = 0.0;
};

struct DecayTable {
  double initial_tv = 0.0;
  std::vector<DecayRow> rows;
  double fitted_rate = 0.0;  // minus the least-squares slope of log tv against t

  // Largest excess of a measured distance over its bound.
  [[nodiscard]] double max_excess() const {
    double e = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows) e = std::max(e, r.tv - r.bound);
    return e;
  }
};

// Least-squares decay rate of points (t, tv) with tv above `floor`.
inline double fitted_decay_rate(const std::vector<DecayRow>& rows, double floor = 1e-12) {
  double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (const auto& r : rows) {
    if (r.tv <= floor) continue;
    const double y = std::log(r.tv);
    n += 1;
    st += r.t;
    sy += y;
    stt += r.t * r.t;
    sty += r.t * y;
  }
  if (n < 2) return std::numeric_limits<double>::infinity();
  const double denom = n * stt - st * st;
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return -(n * sty - st * sy) / denom;
}

// Measures ||mu1 M_t - mu2 M_t||_TV against e^{-alpha (t - t0)} ||mu1 - mu2||_TV.
inline DecayTable tv_decay_experiment(const SignedMeasure& mu1, const SignedMeasure& mu2, const HazardRate& rate,
                                      const DoeblinCertificate& cert, const std::vector<double>& times,
                                      double mass_tolerance = 1e-8) {
  const double m1 = mu1.mass();
  const double m2 = mu2.mass();
  if (std::abs(m1 - m2) > mass_tolerance * std::max(1.0, std::abs(m1))) {
    throw ContractError("measures must carry the same mass (" + format_number(m1) + " vs " + format_number(m2) + ")");
  }
  double horizon = 0.0;
  for (double t : times) horizon = std::max(horizon, t);
  const ForwardSolution first(mu1, rate, horizon);
  const ForwardSolution second(mu2, rate, horizon);

  DecayTable table;
  table.initial_tv = tv_norm(mu1 - mu2);
  for (double t : times) {
    const double tv = tv_norm(first.at(t) - second.at(t));
    table.rows.push_back({t, tv, std::exp(-cert.alpha * (t - cert.t0)) * table.initial_tv});
  }
  table.fitted_rate = fitted_decay_rate(table.rows);
  return table;
}

}  // namespace renewal
