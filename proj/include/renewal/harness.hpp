#pragma once

// Command dispatch behind the `renewal` executable. Each command reads its
// scenario files, runs one computation, writes a CSV artifact and prints a
// single-line JSON summary record.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "renewal/config.hpp"
#include "renewal/dual.hpp"
#include "renewal/ergodicity.hpp"
#include "renewal/errors.hpp"
#include "renewal/forward.hpp"
#include "renewal/hazard.hpp"
#include "renewal/measure.hpp"
#include "renewal/oracle.hpp"

namespace renewal {

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kValidationFailure = 3,
  kSolverError = 4,
  kInvariantViolation = 5,
};

// Environment variable naming the directory for relative output paths.
inline constexpr const char* kOutputDirEnv = "RENEWAL_OUTPUT_DIR";

struct CommandOptions {
  std::string command;
  std::string rate_path;
  std::string init_path;
  std::string mu1_path;
  std::string mu2_path;
  std::string config_path;
  std::string f0;
  std::string out;
  std::optional<double> t;
  std::optional<double> eta;
  std::optional<double> snapshots;
  bool optimize = false;
  std::size_t n = 100000;
  std::optional<std::uint64_t> seed;
  std::vector<double> times;
};

class ValidationFailure : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::filesystem::path resolve_output(const std::string& out) {
  std::filesystem::path path(out);
  if (path.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') path = std::filesystem::path(dir) / path;
  }
  return path;
}

// Writes through a temporary file and renames it into place.
inline void write_atomically(const std::string& out, const std::string& content) {
  if (out.empty()) return;
  const auto path = resolve_output(out);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file) throw ConfigError("cannot write output file '" + path.string() + "'");
    file << content;
  }
  std::filesystem::rename(tmp, path);
}

// A file is either a full scenario holding `key`, or the bare object itself.
inline nlohmann::json section(const nlohmann::json& doc, const char* key) {
  if (doc.is_object() && doc.contains(key)) return doc.at(key);
  return doc;
}

struct Loaded {
  Numerics numerics;
  RateSpec rate;
};

inline Loaded load_rate(const std::string& path) {
  if (path.empty()) throw ConfigError("missing --rate");
  const auto doc = load_json(path);
  Loaded loaded;
  if (doc.is_object() && doc.contains("numerics")) loaded.numerics = parse_numerics(doc.at("numerics"));
  loaded.rate = parse_rate(section(doc, "rate"));
  return loaded;
}

inline HazardRate build_checked(const Loaded& loaded, double max_time) {
  const auto& b = loaded.rate.bounds;
  if (!(loaded.numerics.a_max > b.a_star + max_time)) {
    throw ConfigError("a_max must exceed a_star + the largest requested time");
  }
  HazardRate rate = loaded.rate.build(loaded.numerics, loaded.numerics.a_max + max_time + 1.0);
  const auto report = validate(rate);
  if (!report.passed()) throw ValidationFailure(report.summary());
  return rate;
}

inline SignedMeasure load_measure(const std::string& path, const char* key, const Numerics& numerics,
                                  const HazardRate& rate) {
  if (path.empty()) throw ConfigError(std::string("missing measure file for '") + key + "'");
  return parse_measure(section(load_json(path), key), numerics, &rate);
}

inline double require_time(const std::optional<double>& t, const char* flag) {
  if (!t) throw ConfigError(std::string("missing ") + flag);
  if (!(*t >= 0.0)) throw ConfigError(std::string(flag) + " must be nonnegative");
  return *t;
}

inline std::string summary_line(const std::string& command, const nlohmann::ordered_json& parameters, bool pass,
                                const nlohmann::ordered_json& residuals) {
  nlohmann::ordered_json record;
  record["command"] = command;
  record["parameters"] = parameters;
  record["pass"] = pass;
  record["residuals"] = residuals;
  return record.dump();
}

inline nlohmann::ordered_json rate_json(const RateSpec& rate) {
  return {{"rate", rate.description},
          {"beta_min", rate.bounds.beta_min},
          {"beta_max", rate.bounds.beta_max},
          {"a_star", rate.bounds.a_star}};
}

inline std::vector<TestFunction> default_verify_functions(std::vector<std::string>& names) {
  if (names.empty()) names = {"exp(-a)", "a*exp(-a)", "cos(a)*exp(-a/2)", "1/(1+a)"};
  std::vector<TestFunction> out;
  for (const auto& n : names) out.push_back(expression_function(n));
  return out;
}

inline int run_dual(const CommandOptions& opt, std::ostream& out) {
  const auto loaded = load_rate(opt.rate_path);
  const double t = require_time(opt.t, "--t");
  if (opt.f0.empty()) throw ConfigError("missing --f0");
  const HazardRate rate = build_checked(loaded, t);
  const TestFunction f0 = expression_function(opt.f0);
  const GridFunction evolved = evolve_dual(f0, rate, t, loaded.numerics.a_max, loaded.numerics.dual_options());

  std::ostringstream csv;
  csv << "age,value\n";
  for (std::size_t j = 0; j < evolved.size(); ++j) csv << format_number(evolved.node(j)) << ',' << format_number(evolved.values[j]) << '\n';
  write_atomically(opt.out, csv.str());

  auto params = loaded.numerics.to_json();
  params.update(rate_json(loaded.rate));
  params["f0"] = opt.f0;
  params["t"] = t;
  out << summary_line("dual", params, true, {{"value_at_zero", evolved.values[0]}, {"sup", evolved.sup_norm()}}) << '\n';
  return kSuccess;
}

inline int run_evolve(const CommandOptions& opt, std::ostream& out) {
  const auto loaded = load_rate(opt.rate_path);
  const double t = require_time(opt.t, "--t");
  const HazardRate rate = build_checked(loaded, t);
  const SignedMeasure initial = load_measure(opt.init_path, "init", loaded.numerics, rate);
  const ForwardSolution solution(initial, rate, t);
  const SignedMeasure final_measure = solution.at(t);

  std::ostringstream csv;
  double mass_error = std::abs(final_measure.mass() - initial.mass());
  if (opt.snapshots) {
    csv << "t,kind,age,value\n";
    for (const auto& [s, mu] : solution.snapshots(*opt.snapshots)) {
      mass_error = std::max(mass_error, std::abs(mu.mass() - initial.mass()));
      std::ostringstream block;
      write_csv(block, mu);
      std::istringstream lines(block.str());
      std::string line;
      std::getline(lines, line);  // header
      while (std::getline(lines, line)) csv << format_number(s) << ',' << line << '\n';
    }
  } else {
    write_csv(csv, final_measure);
  }
  write_atomically(opt.out, csv.str());

  const bool pass = mass_error <= loaded.numerics.tol_mass;
  auto params = loaded.numerics.to_json();
  params.update(rate_json(loaded.rate));
  params["t"] = t;
  out << summary_line("evolve", params, pass,
                      {{"mass_in", initial.mass()}, {"mass_out", final_measure.mass()}, {"max_mass_error", mass_error}})
      << '\n';
  return pass ? kSuccess : kInvariantViolation;
}

inline int run_oracle(const CommandOptions& opt, std::ostream& out) {
  const auto loaded = load_rate(opt.rate_path);
  const double t = require_time(opt.t, "--t");
  const HazardRate rate = build_checked(loaded, t);
  const SignedMeasure initial = load_measure(opt.init_path, "init", loaded.numerics, rate);
  const std::uint64_t seed = opt.seed.value_or(loaded.numerics.seed);
  const PathEnsemble ensemble = simulate(initial, rate, t, opt.n, seed);

  std::ostringstream csv;
  csv << "age\n";
  for (double a : ensemble.final_ages) csv << format_number(a) << '\n';
  write_atomically(opt.out, csv.str());

  const double ks = compare_cdf(ensemble, evolve_measure(initial, rate, t));
  auto params = loaded.numerics.to_json();
  params.update(rate_json(loaded.rate));
  params["t"] = t;
  params["n"] = opt.n;
  params["seed"] = seed;
  out << summary_line("oracle", params, true, {{"kolmogorov_vs_solver", ks}}) << '\n';
  return kSuccess;
}

inline nlohmann::ordered_json certificate_json(const DoeblinCertificate& c) {
  return {{"eta", c.eta}, {"t0", c.t0}, {"c", c.c}, {"alpha", c.alpha}};
}

inline int run_doeblin(const CommandOptions& opt, std::ostream& out) {
  const auto loaded = load_rate(opt.rate_path);
  const HazardRate rate = build_checked(loaded, 0.0);
  if (!opt.optimize && !opt.eta) throw ConfigError("doeblin needs --eta <value> or --optimize");
  const DoeblinCertificate cert = opt.optimize ? best_certificate(rate) : certificate(rate, *opt.eta);
  auto record = certificate_json(cert);
  record["optimized"] = opt.optimize;
  out << record.dump() << '\n';
  std::ostringstream csv;
  csv << "eta,t0,c,alpha\n"
      << format_number(cert.eta) << ',' << format_number(cert.t0) << ',' << format_number(cert.c) << ','
      << format_number(cert.alpha) << '\n';
  write_atomically(opt.out, csv.str());
  return kSuccess;
}

inline int run_converge(const CommandOptions& opt, std::ostream& out) {
  const auto loaded = load_rate(opt.rate_path);
  if (opt.times.empty()) throw ConfigError("missing --times");
  double horizon = 0.0;
  for (double t : opt.times) horizon = std::max(horizon, require_time(t, "--times"));
  const HazardRate rate = build_checked(loaded, horizon);
  const SignedMeasure mu1 = load_measure(opt.mu1_path, "mu1", loaded.numerics, rate);
  const SignedMeasure mu2 = load_measure(opt.mu2_path, "mu2", loaded.numerics, rate);
  const DoeblinCertificate cert = opt.eta ? certificate(rate, *opt.eta) : best_certificate(rate);
  const DecayTable table = tv_decay_experiment(mu1, mu2, rate, cert, opt.times, loaded.numerics.tol_mass);

  std::ostringstream csv;
  csv << "t,tv,bound\n";
  for (const auto& r : table.rows) csv << format_number(r.t) << ',' << format_number(r.tv) << ',' << format_number(r.bound) << '\n';
  write_atomically(opt.out, csv.str());

  const bool pass = table.max_excess() <= loaded.numerics.eps_tv;
  auto params = loaded.numerics.to_json();
  params.update(rate_json(loaded.rate));
  params["certificate"] = certificate_json(cert);
  out << summary_line("converge", params, pass,
                      {{"initial_tv", table.initial_tv}, {"max_excess", table.max_excess()}, {"fitted_rate", table.fitted_rate}})
      << '\n';
  return pass ? kSuccess : kInvariantViolation;
}

// Runs the full invariant suite on one scenario.
inline int run_verify(const CommandOptions& opt, std::ostream& out) {
  if (opt.config_path.empty()) throw ConfigError("missing --config");
  const auto doc = load_json(opt.config_path);
  ScenarioConfig cfg = parse_scenario(doc);
  if (!cfg.rate) throw ConfigError("scenario has no rate");
  if (!cfg.init) throw ConfigError("scenario has no init measure");
  const Numerics& num = cfg.numerics;
  const double t = opt.t.value_or(cfg.t.value_or(1.0));
  std::vector<double> times = cfg.times;
  if (times.empty()) times = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  double horizon = 2.0 * t;
  for (double s : times) horizon = std::max(horizon, s);
  const HazardRate rate = build_checked({num, *cfg.rate}, horizon);
  const SignedMeasure initial = parse_measure(*cfg.init, num, &rate);
  const auto functions = default_verify_functions(cfg.test_functions);
  const DualOptions dual = num.dual_options();

  nlohmann::ordered_json residuals;
  std::vector<std::string> failures;
  auto check = [&](const std::string& name, double value, double tolerance) {
    residuals[name] = value;
    if (!(value <= tolerance)) failures.push_back(name);
  };

  // Conservation and positivity along the forward orbit.
  const ForwardSolution solution(initial, rate, horizon);
  double mass_error = 0.0;
  double negativity = 0.0;
  const bool nonnegative = initial.is_nonnegative();
  for (const auto& [s, mu] : solution.snapshots(num.snapshot_step)) {
    mass_error = std::max(mass_error, std::abs(mu.mass() - initial.mass()));
    if (nonnegative) {
      for (const auto& a : mu.atoms()) negativity = std::max(negativity, -a.weight);
      for (double v : mu.density().values) negativity = std::max(negativity, -v);
    }
  }
  check("mass_error", mass_error, num.tol_mass);
  check("negativity", negativity, num.tol_mass);

  // Dual bounds, semigroup law, duality and the weak formulation per test function.
  const GridFunction one = evolve_dual(constant_function(1.0), rate, t, num.a_max, dual);
  double conservativity = 0.0;
  for (double v : one.values) conservativity = std::max(conservativity, std::abs(v - 1.0));
  check("dual_conservativity", conservativity, 1e-10);

  double sup_excess = 0.0;
  double semigroup = 0.0;
  double gap = 0.0;
  double weak = 0.0;
  for (const auto& f : functions) {
    const GridFunction sampled = [&] {
      GridFunction g{num.h, std::vector<double>(steps_of(num.a_max + 2.0 * t, num.h) + 1)};
      for (std::size_t j = 0; j < g.size(); ++j) g.values[j] = f.checked(g.node(j));
      return g;
    }();
    const GridFunction once = evolve_dual(sampled, rate, t, num.a_max + t, dual);
    const GridFunction twice = evolve_dual(once, rate, t, num.a_max, dual);
    const GridFunction direct = evolve_dual(sampled, rate, 2.0 * t, num.a_max, dual);
    sup_excess = std::max(sup_excess, direct.sup_norm() - sampled.sup_norm());
    for (std::size_t j = 0; j < direct.size(); ++j) semigroup = std::max(semigroup, std::abs(direct.values[j] - twice.values[j]));
    gap = std::max(gap, duality_gap(initial, f, rate, t, dual));
    weak = std::max(weak, meassol_residual(solution, f, t, num.snapshot_step));
  }
  check("dual_sup_excess", sup_excess, 1e-12);
  check("semigroup", semigroup, num.tol_semigroup);
  check("duality_gap", gap, num.tol_duality);
  check("meassol_residual", weak, num.tol_meassol);

  // Doeblin minorization and the contraction it implies.
  const DoeblinCertificate cert = cfg.eta ? certificate(rate, *cfg.eta) : best_certificate(rate);
  const auto minor = verify_minorization(rate, cert, minorization_battery(cert.eta), num.a_max - cert.t0, dual);
  check("minorization_deficit", std::max(0.0, -minor.min_margin()), num.eps_minor);

  const SignedMeasure reference = nonnegative && std::abs(initial.mass() - 1.0) <= 1e-6 ? initial : SignedMeasure::dirac(0.0);
  const auto table = tv_decay_experiment(reference, stationary(rate, num.a_max).measure, rate, cert, times, 1e-6);
  check("decay_excess", table.max_excess(), num.eps_tv);

  std::ostringstream csv;
  csv << "check,value\n";
  for (const auto& [name, value] : residuals.items()) csv << name << ',' << format_number(value.get<double>()) << '\n';
  write_atomically(opt.out, csv.str());

  auto params = num.to_json();
  params.update(rate_json(*cfg.rate));
  params["t"] = t;
  params["certificate"] = certificate_json(cert);
  out << summary_line("verify", params, failures.empty(), residuals) << '\n';
  return failures.empty() ? kSuccess : kInvariantViolation;
}

}  // namespace detail

// Runs one command; returns the process exit code. Diagnostics go to `err`
// as a single line.
inline int run(const CommandOptions& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    if (opt.command == "dual") return detail::run_dual(opt, out);
    if (opt.command == "evolve") return detail::run_evolve(opt, out);
    if (opt.command == "oracle") return detail::run_oracle(opt, out);
    if (opt.command == "doeblin") return detail::run_doeblin(opt, out);
    if (opt.command == "converge") return detail::run_converge(opt, out);
    if (opt.command == "verify") return detail::run_verify(opt, out);
    err << "config error: unknown command '" << opt.command << "'\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ExpressionError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ValidationFailure& e) {
    err << "validation failure: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const ContractError& e) {
    err << "contract error: " << e.what() << '\n';
    return kSolverError;
  } catch (const Error& e) {
    err << "solver error: " << e.what() << '\n';
    return kSolverError;
  }
}

}  // namespace renewal
