#pragma once

// Finite signed measures on the half line, represented as a finite list of
// atoms plus a piecewise-linear density on a uniform age grid. This class is
// closed under the renewal dynamics: transported atoms stay atoms, and
// everything born after time zero is absolutely continuous.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "renewal/errors.hpp"
#include "renewal/grid.hpp"

namespace renewal {

// Atoms closer than this are merged into one.
inline constexpr double kAtomMergeTolerance = 1e-12;

struct Atom {
  double location = 0.0;
  double weight = 0.0;
};

// Bounded continuous test function with an optional derivative.
struct TestFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;  // empty when unavailable
  double sup_bound = std::numeric_limits<double>::infinity();

  double operator()(double a) const { return value(a); }
  [[nodiscard]] bool has_derivative() const { return static_cast<bool>(derivative); }

  double checked(double a) const {
    const double v = value(a);
    if (!std::isfinite(v)) {
      throw EvaluationError("test function is not finite at age " + std::to_string(a));
    }
    return v;
  }
};

inline TestFunction constant_function(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; }, std::abs(c)};
}

class SignedMeasure {
 public:
  SignedMeasure() = default;

  SignedMeasure(std::vector<Atom> atoms, GridFunction density) : density_(std::move(density)) {
    for (const auto& atom : atoms) {
      if (!(atom.location >= 0.0) || !std::isfinite(atom.location) || !std::isfinite(atom.weight)) {
        throw ContractError("atom must have a finite nonnegative location and a finite weight");
      }
    }
    for (double v : density_.values) {
      if (!std::isfinite(v)) throw ContractError("density values must be finite");
    }
    if (density_.values.size() == 1) density_.values.clear();
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& l, const Atom& r) { return l.location < r.location; });
    for (const auto& atom : atoms) {
      if (!atoms_.empty() && atom.location - atoms_.back().location <= kAtomMergeTolerance) {
        atoms_.back().weight += atom.weight;
      } else {
        atoms_.push_back(atom);
      }
    }
    std::erase_if(atoms_, [](const Atom& a) { return a.weight == 0.0; });
  }

  static SignedMeasure dirac(double location, double weight = 1.0) {
    return SignedMeasure({{location, weight}}, {});
  }
  static SignedMeasure from_density(GridFunction density) { return SignedMeasure({}, std::move(density)); }

  [[nodiscard]] const std::vector<Atom>& atoms() const { return atoms_; }
  [[nodiscard]] const GridFunction& density() const { return density_; }
  [[nodiscard]] bool has_density() const { return density_.values.size() >= 2; }

  // Largest age carrying mass in the representation.
  [[nodiscard]] double support_end() const {
    double end = has_density() ? density_.extent() : 0.0;
    if (!atoms_.empty()) end = std::max(end, atoms_.back().location);
    return end;
  }

  [[nodiscard]] double mass() const {
    double m = 0.0;
    for (const auto& atom : atoms_) m += atom.weight;
    return m + trapezoid(density_.values, density_.h);
  }

  [[nodiscard]] bool is_nonnegative(double slack = 0.0) const {
    for (const auto& atom : atoms_) {
      if (atom.weight < -slack) return false;
    }
    for (double v : density_.values) {
      if (v < -slack) return false;
    }
    return true;
  }

  [[nodiscard]] SignedMeasure scaled(double factor) const {
    auto atoms = atoms_;
    for (auto& atom : atoms) atom.weight *= factor;
    auto density = density_;
    for (auto& v : density.values) v *= factor;
    return {std::move(atoms), std::move(density)};
  }

  friend SignedMeasure operator+(const SignedMeasure& l, const SignedMeasure& r) {
    return combine(l, r, 1.0);
  }
  friend SignedMeasure operator-(const SignedMeasure& l, const SignedMeasure& r) {
    return combine(l, r, -1.0);
  }

 private:
  static SignedMeasure combine(const SignedMeasure& l, const SignedMeasure& r, double sign) {
    std::vector<Atom> atoms = l.atoms_;
    for (const auto& atom : r.atoms_) atoms.push_back({atom.location, sign * atom.weight});

    GridFunction density;
    if (!l.has_density()) {
      density = r.density_;
      for (auto& v : density.values) v *= sign;
    } else if (!r.has_density()) {
      density = l.density_;
    } else {
      if (std::abs(l.density_.h - r.density_.h) > 1e-12 * l.density_.h) {
        throw ContractError("cannot combine densities on grids with different steps");
      }
      density.h = l.density_.h;
      density.values.assign(std::max(l.density_.size(), r.density_.size()), 0.0);
      for (std::size_t j = 0; j < l.density_.size(); ++j) density.values[j] += l.density_.values[j];
      for (std::size_t j = 0; j < r.density_.size(); ++j) density.values[j] += sign * r.density_.values[j];
    }
    return {std::move(atoms), std::move(density)};
  }

  std::vector<Atom> atoms_;
  GridFunction density_;
};

// Integral of a test function: exact on atoms, trapezoid on the density grid.
inline double integrate(const SignedMeasure& mu, const TestFunction& f) {
  double sum = 0.0;
  for (const auto& atom : mu.atoms()) sum += atom.weight * f.checked(atom.location);
  const auto& d = mu.density();
  if (mu.has_density()) {
    double dens = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (d.values[j] == 0.0) continue;
      dens += trapezoid_weight(j, d.size()) * d.values[j] * f.checked(d.node(j));
    }
    sum += d.h * dens;
  }
  return sum;
}

// Integral of a grid profile against the measure, interpolating the profile
// linearly at atom locations.
inline double integrate(const SignedMeasure& mu, const GridFunction& profile) {
  TestFunction f{[&profile](double a) { return profile.at(a); }, {}, profile.sup_norm()};
  return integrate(mu, f);
}

struct JordanParts {
  SignedMeasure plus;
  SignedMeasure minus;
};

// Jordan decomposition: atoms split by weight sign, density split nodewise.
inline JordanParts jordan(const SignedMeasure& mu) {
  std::vector<Atom> plus_atoms;
  std::vector<Atom> minus_atoms;
  for (const auto& atom : mu.atoms()) {
    if (atom.weight > 0.0) plus_atoms.push_back(atom);
    if (atom.weight < 0.0) minus_atoms.push_back({atom.location, -atom.weight});
  }
  GridFunction plus_density{mu.density().h, {}};
  GridFunction minus_density{mu.density().h, {}};
  plus_density.values.reserve(mu.density().size());
  minus_density.values.reserve(mu.density().size());
  for (double v : mu.density().values) {
    plus_density.values.push_back(std::max(v, 0.0));
    minus_density.values.push_back(std::max(-v, 0.0));
  }
  return {SignedMeasure(std::move(plus_atoms), std::move(plus_density)),
          SignedMeasure(std::move(minus_atoms), std::move(minus_density))};
}

inline double tv_norm(const SignedMeasure& mu) {
  double tv = 0.0;
  for (const auto& atom : mu.atoms()) tv += std::abs(atom.weight);
  const auto& d = mu.density();
  if (mu.has_density()) {
    double dens = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) dens += trapezoid_weight(j, d.size()) * std::abs(d.values[j]);
    tv += d.h * dens;
  }
  return tv;
}

// Damped truncation: f on [0, n], (n + 1 - x) f(x) on (n, n + 1), zero beyond.
inline TestFunction truncation_family(const TestFunction& f, int n) {
  if (n < 0) throw ContractError("truncation index must be nonnegative");
  const double cut = n;
  TestFunction out;
  out.sup_bound = f.sup_bound;
  out.value = [f, cut](double x) {
    if (x <= cut) return f(x);
    if (x < cut + 1.0) return (cut + 1.0 - x) * f(x);
    return 0.0;
  };
  if (f.has_derivative()) {
    out.derivative = [f, cut](double x) {
      if (x <= cut) return f.derivative(x);
      if (x < cut + 1.0) return (cut + 1.0 - x) * f.derivative(x) - f(x);
      return 0.0;
    };
  }
  return out;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// CSV with header `kind,age,value`: one row per atom, then one row per density node.
inline void write_csv(std::ostream& out, const SignedMeasure& mu) {
  out << "kind,age,value\n";
  for (const auto& atom : mu.atoms()) {
    out << "atom," << format_number(atom.location) << ',' << format_number(atom.weight) << '\n';
  }
  const auto& d = mu.density();
  for (std::size_t j = 0; j < d.size(); ++j) {
    out << "density," << format_number(d.node(j)) << ',' << format_number(d.values[j]) << '\n';
  }
}

}  // namespace renewal
