#pragma once

// Monte Carlo simulation of the age process behind the renewal equation: the
// age grows at unit speed and is reset to zero at rate beta(age). Reset times
// are drawn exactly by thinning a Poisson clock of rate beta_max. Each path
// owns its own generator, seeded from (seed, path index), so results do not
// depend on the order in which paths are simulated.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "renewal/errors.hpp"
#include "renewal/grid.hpp"
#include "renewal/hazard.hpp"
#include "renewal/measure.hpp"

namespace renewal {

struct PathEnsemble {
  std::size_t size = 0;
  std::uint64_t seed = 0;
  std::vector<double> final_ages;
  std::vector<std::uint32_t> resets;  // number of resets per path
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform on [0, 1) from the top 53 bits; portable across standard libraries.
inline double uniform01(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

inline void require_probability(const SignedMeasure& mu) {
  if (!mu.is_nonnegative(1e-14)) throw ContractError("expected a nonnegative measure");
  if (std::abs(mu.mass() - 1.0) > 1e-6) {
    throw ContractError("expected a probability measure, mass is " + std::to_string(mu.mass()));
  }
}

// Inverse-CDF sampler for atoms plus a piecewise-linear density.
class MeasureSampler {
 public:
  explicit MeasureSampler(const SignedMeasure& mu) : mu_(mu) {
    double acc = 0.0;
    for (const auto& atom : mu.atoms()) {
      acc += atom.weight;
      atom_cdf_.push_back(acc);
    }
    const auto& d = mu.density();
    if (mu.has_density()) {
      cell_cdf_.push_back(acc);
      for (std::size_t j = 0; j + 1 < d.size(); ++j) {
        acc += 0.5 * d.h * (std::max(d.values[j], 0.0) + std::max(d.values[j + 1], 0.0));
        cell_cdf_.push_back(acc);
      }
    }
    total_ = acc;
  }

  double operator()(std::mt19937_64& gen) const {
    const double u = uniform01(gen) * total_;
    auto it = std::upper_bound(atom_cdf_.begin(), atom_cdf_.end(), u);
    if (it != atom_cdf_.end()) return mu_.atoms()[static_cast<std::size_t>(it - atom_cdf_.begin())].location;
    if (cell_cdf_.size() < 2) return mu_.atoms().back().location;
    auto cell = std::upper_bound(cell_cdf_.begin(), cell_cdf_.end(), u);
    std::size_t j = cell == cell_cdf_.begin() ? 0 : static_cast<std::size_t>(cell - cell_cdf_.begin()) - 1;
    j = std::min(j, cell_cdf_.size() - 2);
    const auto& d = mu_.density();
    const double lo = std::max(d.values[j], 0.0);
    const double hi = std::max(d.values[j + 1], 0.0);
    // Solve h (lo s + (hi - lo) s^2 / 2) = target for s in [0, 1].
    const double target = (u - cell_cdf_[j]) / d.h;
    const double disc = std::max(lo * lo + 2.0 * (hi - lo) * target, 0.0);
    const double denom = lo + std::sqrt(disc);
    const double s = denom > 0.0 ? std::clamp(2.0 * target / denom, 0.0, 1.0) : 0.0;
    return d.h * (static_cast<double>(j) + s);
  }

 private:
  const SignedMeasure& mu_;
  std::vector<double> atom_cdf_;
  std::vector<double> cell_cdf_;
  double total_ = 0.0;
};

}  // namespace detail

// Simulates `count` independent paths on [0, t] started from a probability
// measure. The rate is only required to satisfy beta <= beta_max.
inline PathEnsemble simulate(const SignedMeasure& initial, const HazardRate& rate, double t, std::size_t count,
                             std::uint64_t seed) {
  detail::require_probability(initial);
  if (count == 0) throw ContractError("ensemble size must be at least one");
  if (!(t >= 0.0)) throw ContractError("simulation time must be nonnegative");
  const double beta_max = rate.bounds().beta_max;
  const detail::MeasureSampler sample(initial);

  PathEnsemble out{count, seed, std::vector<double>(count), std::vector<std::uint32_t>(count, 0)};
  for (std::size_t path = 0; path < count; ++path) {
    std::mt19937_64 gen(detail::splitmix64(seed ^ detail::splitmix64(path)));
    const double start = sample(gen);
    double clock = 0.0;
    double last_reset = -1.0;
    std::uint32_t resets = 0;
    if (beta_max > 0.0) {
      for (;;) {
        clock += -std::log1p(-detail::uniform01(gen)) / beta_max;
        if (clock >= t) break;
        const double age = last_reset < 0.0 ? start + clock : clock - last_reset;
        const double beta = rate(age);
        if (beta > beta_max * (1.0 + 1e-12)) {
          throw ContractError("rate exceeds beta_max at age " + std::to_string(age));
        }
        if (detail::uniform01(gen) * beta_max < beta) {
          last_reset = clock;
          ++resets;
        }
      }
    }
    out.final_ages[path] = last_reset < 0.0 ? start + t : t - last_reset;
    out.resets[path] = resets;
  }
  return out;
}

// Cumulative distribution x -> mu([0, x]) with precomputed partial sums.
class MeasureCdf {
 public:
  explicit MeasureCdf(const SignedMeasure& mu) : density_(mu.density()) {
    double acc = 0.0;
    for (const auto& atom : mu.atoms()) {
      acc += atom.weight;
      atom_locations_.push_back(atom.location);
      atom_cdf_.push_back(acc);
    }
    if (mu.has_density()) {
      node_cdf_.push_back(0.0);
      for (std::size_t j = 0; j + 1 < density_.size(); ++j) {
        node_cdf_.push_back(node_cdf_.back() + 0.5 * density_.h * (density_.values[j] + density_.values[j + 1]));
      }
    }
  }

  // mu([0, x]), or mu([0, x)) when `left` is set.
  [[nodiscard]] double operator()(double x, bool left = false) const {
    const auto it = left ? std::lower_bound(atom_locations_.begin(), atom_locations_.end(), x)
                         : std::upper_bound(atom_locations_.begin(), atom_locations_.end(), x);
    double acc = it == atom_locations_.begin() ? 0.0 : atom_cdf_[static_cast<std::size_t>(it - atom_locations_.begin()) - 1];
    if (node_cdf_.empty() || x <= 0.0) return acc;
    const double clipped = std::min(x, density_.extent());
    const auto cell = std::min(static_cast<std::size_t>(clipped / density_.h), density_.size() - 1);
    acc += node_cdf_[cell];
    if (cell + 1 < density_.size()) {
      const double s = clipped / density_.h - static_cast<double>(cell);
      const double lo = density_.values[cell];
      const double hi = density_.values[cell + 1];
      acc += density_.h * s * (lo + 0.5 * s * (hi - lo));
    }
    return acc;
  }

 private:
  GridFunction density_;
  std::vector<double> atom_locations_;
  std::vector<double> atom_cdf_;
  std::vector<double> node_cdf_;
};

// Kolmogorov distance sup_x |F_N(x) - mu([0, x])| between an ensemble and a
// probability measure. Sample ages within the atom merge tolerance of an
// atom are counted at the atom.
inline double compare_cdf(const PathEnsemble& ensemble, const SignedMeasure& mu) {
  detail::require_probability(mu);
  std::vector<double> ages = ensemble.final_ages;
  for (auto& a : ages) {
    for (const auto& atom : mu.atoms()) {
      if (std::abs(a - atom.location) <= kAtomMergeTolerance) a = atom.location;
    }
  }
  std::sort(ages.begin(), ages.end());
  std::vector<double> points = ages;
  for (const auto& atom : mu.atoms()) points.push_back(atom.location);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  const MeasureCdf cdf(mu);
  const double n = static_cast<double>(ages.size());
  double stat = 0.0;
  for (double x : points) {
    const auto below = static_cast<double>(std::lower_bound(ages.begin(), ages.end(), x) - ages.begin());
    const auto upto = static_cast<double>(std::upper_bound(ages.begin(), ages.end(), x) - ages.begin());
    stat = std::max(stat, std::abs(upto / n - cdf(x)));
    stat = std::max(stat, std::abs(below / n - cdf(x, true)));
  }
  return stat;
}

}  // namespace renewal
