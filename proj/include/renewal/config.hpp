#pragma once

// Scenario files: JSON documents describing a division rate, initial
// measures and numerical parameters. See configs/annotated.json for a
// complete example.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "renewal/ergodicity.hpp"
#include "renewal/errors.hpp"
#include "renewal/expression.hpp"
#include "renewal/hazard.hpp"
#include "renewal/measure.hpp"

namespace renewal {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct Numerics {
  double h = 1e-3;
  double a_max = 40.0;
  double tol_picard = 1e-12;
  int max_iter = 200;
  double tol_mass = 1e-8;
  double eps_minor = 1e-6;
  double eps_tv = 1e-4;
  double tol_duality = 1e-4;
  double tol_semigroup = 1e-4;
  double tol_meassol = 1e-4;
  double snapshot_step = 0.01;
  std::uint64_t seed = 1;

  [[nodiscard]] DualOptions dual_options() const { return {tol_picard, max_iter}; }

  [[nodiscard]] nlohmann::ordered_json to_json() const {
    return {{"h", h},
            {"a_max", a_max},
            {"tol_picard", tol_picard},
            {"max_iter", max_iter},
            {"tol_mass", tol_mass},
            {"eps_minor", eps_minor},
            {"eps_tv", eps_tv},
            {"tol_duality", tol_duality},
            {"tol_semigroup", tol_semigroup},
            {"tol_meassol", tol_meassol},
            {"snapshot_step", snapshot_step},
            {"seed", seed}};
  }
};

// Rate description; materialised into a HazardRate once the grid extent is known.
struct RateSpec {
  std::function<double(double)> evaluator;
  HazardBounds bounds;
  std::string description;

  [[nodiscard]] HazardRate build(const Numerics& numerics, double extent) const {
    return {evaluator, bounds, numerics.h, extent};
  }
};

struct ScenarioConfig {
  Numerics numerics;
  std::optional<RateSpec> rate;
  std::optional<nlohmann::json> init;
  std::optional<nlohmann::json> mu1;
  std::optional<nlohmann::json> mu2;
  std::vector<std::string> test_functions;
  std::vector<double> times;
  std::optional<double> t;
  std::optional<double> eta;
};

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline double required_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) throw ConfigError(std::string("missing numeric field '") + key + "'");
  return j.at(key).get<double>();
}

// Samples fn on the grid over [lo, hi]. At a support endpoint inside the grid
// the node stores half the value: the mean of the one-sided limits.
inline GridFunction sample_on_support(const std::function<double(double)>& fn, double lo, double hi,
                                      const Numerics& numerics) {
  const std::size_t nodes = steps_of(numerics.a_max, numerics.h) + 1;
  GridFunction g{numerics.h, std::vector<double>(nodes, 0.0)};
  const double tol = 1e-9 * numerics.h;
  for (std::size_t j = 0; j < nodes; ++j) {
    const double a = g.node(j);
    if (a < lo - tol || a > hi + tol) continue;
    const bool at_lo = std::abs(a - lo) <= tol && j != 0;
    const bool at_hi = std::abs(a - hi) <= tol && j + 1 != nodes;
    const double v = fn(a);
    if (!std::isfinite(v)) throw ConfigError("density is not finite at age " + std::to_string(a));
    g.values[j] = (at_lo || at_hi) ? 0.5 * v : v;
  }
  return g;
}

}  // namespace detail

inline Numerics parse_numerics(const nlohmann::json& j) {
  Numerics n;
  n.h = detail::get_or(j, "h", n.h);
  n.a_max = detail::get_or(j, "a_max", n.a_max);
  n.tol_picard = detail::get_or(j, "tol_picard", n.tol_picard);
  n.max_iter = detail::get_or(j, "max_iter", n.max_iter);
  n.tol_mass = detail::get_or(j, "tol_mass", n.tol_mass);
  n.eps_minor = detail::get_or(j, "eps_minor", n.eps_minor);
  n.eps_tv = detail::get_or(j, "eps_tv", n.eps_tv);
  n.tol_duality = detail::get_or(j, "tol_duality", n.tol_duality);
  n.tol_semigroup = detail::get_or(j, "tol_semigroup", n.tol_semigroup);
  n.tol_meassol = detail::get_or(j, "tol_meassol", n.tol_meassol);
  n.snapshot_step = detail::get_or(j, "snapshot_step", n.snapshot_step);
  n.seed = detail::get_or(j, "seed", n.seed);
  for (double v : {n.h, n.a_max, n.tol_picard, n.tol_mass, n.eps_minor, n.eps_tv, n.tol_duality, n.tol_semigroup,
                   n.tol_meassol, n.snapshot_step}) {
    if (!(v > 0.0)) throw ConfigError("numerical parameters must be positive");
  }
  if (n.max_iter < 1) throw ConfigError("max_iter must be at least 1");
  try {
    steps_of(n.a_max, n.h);
    steps_of(n.snapshot_step, n.h);
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  return n;
}

// `{kind: constant|table|expr, ..., beta_min, beta_max, a_star}`.
inline RateSpec parse_rate(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("rate must be an object");
  const auto kind = detail::get_or<std::string>(j, "kind", "");
  RateSpec spec;
  if (kind == "constant") {
    const double value = detail::required_number(j, "value");
    spec.evaluator = [value](double) { return value; };
    spec.bounds = {detail::get_or(j, "beta_min", value), detail::get_or(j, "beta_max", value),
                   detail::get_or(j, "a_star", 0.0)};
    spec.description = "constant " + format_number(value);
    return spec;
  }
  if (kind == "table") {
    std::vector<std::pair<double, double>> points;
    try {
      for (const auto& p : j.at("points")) points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("rate table must be a list of [age, value] pairs: ") + e.what());
    }
    if (points.empty()) throw ConfigError("rate table is empty");
    spec.evaluator = table_function(points);
    spec.description = "table";
  } else if (kind == "expr") {
    try {
      auto expr = std::make_shared<Expression>(detail::get_or<std::string>(j, "expr", ""));
      spec.evaluator = [expr](double a) { return (*expr)(a); };
      spec.description = expr->source();
    } catch (const ExpressionError& e) {
      throw ConfigError(e.what());
    }
  } else {
    throw ConfigError("unknown rate kind '" + kind + "' (expected constant, table or expr)");
  }
  spec.bounds = {detail::required_number(j, "beta_min"), detail::required_number(j, "beta_max"),
                 detail::required_number(j, "a_star")};
  return spec;
}

// Measure literal: a list of entries, or `{entries: [...], normalize: bool}`.
// Entries are `{atom, weight}`, `{density: expr, support: [lo, hi]}`,
// `{density: {table: [[a, v], ...]}}`, `{uniform: [lo, hi], weight}` or
// `{stationary: true, weight}`.
inline SignedMeasure parse_measure(const nlohmann::json& j, const Numerics& numerics, const HazardRate* rate) {
  const nlohmann::json* entries = &j;
  bool normalize = false;
  if (j.is_object()) {
    if (!j.contains("entries")) throw ConfigError("measure object needs an 'entries' list");
    entries = &j.at("entries");
    normalize = detail::get_or(j, "normalize", false);
  }
  if (!entries->is_array()) throw ConfigError("measure must be a list of entries");

  SignedMeasure mu;
  for (const auto& e : *entries) {
    if (!e.is_object()) throw ConfigError("measure entries must be objects");
    if (e.contains("grid")) {
      const auto& g = e.at("grid");
      if (std::abs(detail::get_or(g, "a_max", numerics.a_max) - numerics.a_max) > 1e-12 ||
          std::abs(detail::get_or(g, "h_a", numerics.h) - numerics.h) > 1e-15) {
        throw ConfigError("density grid must match the scenario grid (a_max, h)");
      }
    }
    const double weight = detail::get_or(e, "weight", 1.0);
    if (e.contains("atom")) {
      const double a = detail::required_number(e, "atom");
      if (a < 0.0) throw ConfigError("atom locations must be nonnegative");
      mu = mu + SignedMeasure::dirac(a, weight);
    } else if (e.contains("uniform")) {
      const auto& r = e.at("uniform");
      const double lo = r.at(0).get<double>();
      const double hi = r.at(1).get<double>();
      if (!(hi > lo) || lo < 0.0 || hi > numerics.a_max) throw ConfigError("uniform support must satisfy 0 <= lo < hi <= a_max");
      const double level = weight / (hi - lo);
      mu = mu + SignedMeasure::from_density(
                    detail::sample_on_support([level](double) { return level; }, lo, hi, numerics));
    } else if (e.contains("stationary")) {
      if (rate == nullptr) throw ConfigError("stationary measure needs a rate");
      mu = mu + stationary(*rate, numerics.a_max).measure.scaled(weight);
    } else if (e.contains("density")) {
      const auto& d = e.at("density");
      std::function<double(double)> fn;
      double lo = 0.0;
      double hi = numerics.a_max;
      if (d.is_string()) {
        try {
          auto expr = std::make_shared<Expression>(d.get<std::string>());
          fn = [expr](double a) { return (*expr)(a); };
        } catch (const ExpressionError& ex) {
          throw ConfigError(ex.what());
        }
      } else if (d.is_object() && d.contains("table")) {
        std::vector<std::pair<double, double>> points;
        for (const auto& p : d.at("table")) points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        if (points.empty()) throw ConfigError("density table is empty");
        std::sort(points.begin(), points.end());
        lo = points.front().first;
        hi = points.back().first;
        fn = table_function(points);
      } else {
        throw ConfigError("density must be an expression string or {table: [...]}");
      }
      if (e.contains("support")) {
        lo = e.at("support").at(0).get<double>();
        hi = e.at("support").at(1).get<double>();
      }
      auto sampled = detail::sample_on_support(fn, std::max(lo, 0.0), std::min(hi, numerics.a_max), numerics);
      mu = mu + SignedMeasure::from_density(std::move(sampled)).scaled(weight);
    } else {
      throw ConfigError("unknown measure entry: " + e.dump());
    }
  }
  if (normalize) {
    const double m = mu.mass();
    if (m == 0.0) throw ConfigError("cannot normalise a measure of zero mass");
    mu = mu.scaled(1.0 / m);
  }
  return mu;
}

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse '" + path + "': " + e.what());
  }
}

// Parses a whole scenario document. Every key is optional.
inline ScenarioConfig parse_scenario(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  ScenarioConfig cfg;
  if (j.contains("numerics")) cfg.numerics = parse_numerics(j.at("numerics"));
  if (j.contains("rate")) cfg.rate = parse_rate(j.at("rate"));
  if (j.contains("init")) cfg.init = j.at("init");
  if (j.contains("mu1")) cfg.mu1 = j.at("mu1");
  if (j.contains("mu2")) cfg.mu2 = j.at("mu2");
  cfg.test_functions = detail::get_or(j, "test_functions", std::vector<std::string>{});
  cfg.times = detail::get_or(j, "times", std::vector<double>{});
  if (j.contains("t")) cfg.t = detail::required_number(j, "t");
  if (j.contains("eta")) cfg.eta = detail::required_number(j, "eta");
  return cfg;
}

// Test function from an expression, with a numerical derivative.
inline TestFunction expression_function(const std::string& source) {
  std::shared_ptr<Expression> expr;
  try {
    expr = std::make_shared<Expression>(source);
  } catch (const ExpressionError& e) {
    throw ConfigError(e.what());
  }
  return {[expr](double a) { return (*expr)(a); }, [expr](double a) { return expr->derivative(a); },
          std::numeric_limits<double>::infinity()};
}

}  // namespace renewal
