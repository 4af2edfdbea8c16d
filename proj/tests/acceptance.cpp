// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "renewal/dual.hpp"
#include "renewal/ergodicity.hpp"
#include "renewal/forward.hpp"
#include "renewal/oracle.hpp"
#include "support/closed_form.hpp"

using namespace renewal;

namespace {

constexpr double kH = 1e-3;
constexpr double kAMax = 40.0;
constexpr double kExtent = kAMax + 10.0 + 1.0;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

HazardRate unit(double h = kH) { return constant_rate(1.0, h, kExtent, 0.1); }

HazardRate ramp(double h = kH) {
  return {[](double a) { return std::min(a, 2.0); }, {1.0, 2.0, 1.0}, h, kExtent};
}

HazardRate saturating() {
  return {[](double a) { return 1.5 - 0.5 * std::exp(-a); }, {1.0, 1.5, 0.0}, kH, kExtent};
}

SignedMeasure uniform02(double h = kH) {
  return SignedMeasure::from_density(GridFunction{h, std::vector<double>(steps_of(2.0, h) + 1, 0.5)});
}

std::vector<SignedMeasure> inputs(const HazardRate& rate) {
  return {SignedMeasure::dirac(0.5), uniform02(rate.h()), stationary(rate, kAMax).measure};
}

TestFunction smooth(std::function<double(double)> f, std::function<double(double)> df) {
  return {std::move(f), std::move(df), 1.0};
}

std::vector<TestFunction> functions() {
  return {
      smooth([](double a) { return std::exp(-a); }, [](double a) { return -std::exp(-a); }),
      smooth([](double a) { return a * std::exp(-a); }, [](double a) { return (1.0 - a) * std::exp(-a); }),
      smooth([](double a) { return std::cos(a) * std::exp(-a / 2); },
             [](double a) { return -(std::sin(a) + 0.5 * std::cos(a)) * std::exp(-a / 2); }),
      smooth([](double a) { return 1.0 / (1.0 + a); }, [](double a) { return -1.0 / ((1.0 + a) * (1.0 + a)); }),
  };
}

double sup_diff(const GridFunction& a, const GridFunction& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < std::min(a.size(), b.size()); ++j) d = std::max(d, std::abs(a.values[j] - b.values[j]));
  return d;
}

Outcome conservation() {
  double worst = 0.0;
  for (const auto& rate : {unit(), ramp()}) {
    for (const auto& mu : inputs(rate)) {
      const ForwardSolution sol(mu, rate, 10.0);
      for (std::size_t n = 0; n <= sol.steps(); n += 10) worst = std::max(worst, std::abs(sol.at_step(n).mass() - 1.0));
    }
  }
  return {worst <= 1e-8, fmt("max |mass - 1| = %.3g over 2 rates x 3 inputs x t in [0,10] step 0.01", worst)};
}

Outcome closed_form() {
  const auto rate = unit();
  const auto mu = evolve_measure(SignedMeasure::dirac(0.5), rate, 1.0);
  const double atom_err =
      mu.atoms().size() == 1 && std::abs(mu.atoms()[0].location - 1.5) < 1e-12 ? std::abs(mu.atoms()[0].weight - std::exp(-1.0)) : 1.0;
  double newborn_err = 0.0;
  for (std::size_t k = 0; k < 1000; ++k) {
    newborn_err = std::max(newborn_err, std::abs(mu.density().values[k] - reference::newborn_density(1.0, kH * static_cast<double>(k))));
  }
  const auto dual = evolve_dual(smooth([](double a) { return a; }, [](double) { return 1.0; }), rate, 1.0, 0.0);
  const double dual_err = std::abs(dual.values[0] - reference::dual([](double a) { return a; }, 1.0, 1.0, 0.0));
  const bool pass = atom_err <= 1e-8 && newborn_err <= 1e-6 && dual_err <= 1e-6;
  return {pass, fmt("atom err %.3g, newborn sup err %.3g, M_1 f(0) err %.3g", atom_err, newborn_err, dual_err)};
}

double duality_battery(double h) {
  const auto rate = ramp(h);
  double worst = 0.0;
  for (const auto& mu : inputs(rate)) {
    for (const auto& f : functions()) {
      for (double t : {0.5, 1.0, 2.0}) worst = std::max(worst, duality_gap(mu, f, rate, t));
    }
  }
  return worst;
}

Outcome duality() {
  double unit_worst = 0.0;
  const auto rate = unit();
  for (const auto& mu : inputs(rate)) {
    for (const auto& f : functions()) {
      for (double t : {0.5, 1.0, 2.0}) unit_worst = std::max(unit_worst, duality_gap(mu, f, rate, t));
    }
  }
  const double coarse = duality_battery(kH);
  const double fine = duality_battery(kH / 2);
  const double ratio = coarse / fine;
  const bool pass = unit_worst <= 1e-4 && coarse <= 1e-4 && ratio >= 3.0;
  return {pass, fmt("max gap %.3g (unit), %.3g (ramp); ramp gap at h/2 %.3g", unit_worst, coarse, fine) +
                    fmt(", shrink factor %.2f", ratio)};
}

Outcome semigroup() {
  double worst = 0.0;
  const auto fs = functions();
  for (const auto& rate : {unit(), ramp()}) {
    for (const auto& f : {fs[0], fs[2]}) {
      for (auto [t, s] : {std::pair{0.7, 0.9}, std::pair{1.0, 1.0}}) {
        const auto direct = evolve_dual(f, rate, t + s, 20.0);
        const auto composed = evolve_dual(evolve_dual(f, rate, s, 20.0 + t), rate, t, 20.0);
        worst = std::max(worst, sup_diff(direct, composed));
      }
    }
  }
  return {worst <= 1e-4, fmt("max sup |M_{t+s} f - M_t M_s f| = %.3g", worst)};
}

Outcome theorem_bounds() {
  double negativity = 0.0;
  double sup_excess = -1.0;
  double conservativity = 0.0;
  double forward_negativity = 0.0;
  bool propagation_exact = true;
  const std::vector<TestFunction> nonnegative{
      smooth([](double a) { return std::exp(-a); }, {}), smooth([](double a) { return std::sin(3 * a) * std::sin(3 * a); }, {}),
      smooth([](double a) { return 1.0 / (1.0 + a); }, {}), smooth_bump(1.0, 0.5)};
  for (const auto& rate : {unit(), ramp(), saturating()}) {
    for (const auto& f : nonnegative) {
      GridFunction sampled{kH, std::vector<double>(steps_of(25.0, kH) + 1)};
      for (std::size_t j = 0; j < sampled.size(); ++j) sampled.values[j] = f(sampled.node(j));
      const auto out = evolve_dual(sampled, rate, 3.0, 20.0);
      for (double v : out.values) negativity = std::max(negativity, -v);
      sup_excess = std::max(sup_excess, out.sup_norm() - sampled.sup_norm());
    }
    for (double v : evolve_dual(constant_function(1.0), rate, 3.0, 20.0).values) {
      conservativity = std::max(conservativity, std::abs(v - 1.0));
    }
    for (const auto& mu : inputs(rate)) {
      const ForwardSolution sol(mu, rate, 5.0);
      for (std::size_t n = 0; n <= sol.steps(); n += 50) {
        const auto snap = sol.at_step(n);
        for (const auto& a : snap.atoms()) forward_negativity = std::max(forward_negativity, -a.weight);
        for (double v : snap.density().values) forward_negativity = std::max(forward_negativity, -v);
      }
    }
    // Two data agreeing on [0, A] give identical values on [0, A - T].
    const double A = 6.0;
    const double T = 2.5;
    const TestFunction f = smooth([](double a) { return std::exp(-a); }, {});
    const TestFunction g = smooth([A](double a) { return a <= A ? std::exp(-a) : 1.0; }, {});
    const auto out_f = evolve_dual(f, rate, T, 10.0);
    const auto out_g = evolve_dual(g, rate, T, 10.0);
    for (std::size_t j = 0; j <= steps_of(A - T, kH); ++j) propagation_exact &= out_f.values[j] == out_g.values[j];
  }
  const bool pass = negativity <= 0.0 && sup_excess <= 1e-14 && conservativity <= 1e-12 && forward_negativity <= 0.0 &&
                    propagation_exact;
  return {pass, fmt("dual min %.3g, sup excess %.3g, |M_t 1 - 1| %.3g", -negativity, sup_excess, conservativity) +
                    fmt(", forward min %.3g", -forward_negativity) +
                    (propagation_exact ? ", finite propagation exact" : ", finite propagation NOT exact")};
}

Outcome weak_formulation() {
  double worst = 0.0;
  for (const auto& rate : {unit(), ramp()}) {
    for (const auto& mu : inputs(rate)) {
      const ForwardSolution sol(mu, rate, 1.0);
      for (const auto& f : functions()) worst = std::max(worst, meassol_residual(sol, f, 1.0, 0.01));
    }
  }
  const ForwardSolution sol(SignedMeasure::dirac(0.5), unit(), 1.0);
  const auto f = functions()[0];
  const double coarse = meassol_residual(sol, f, 1.0, 0.1);
  const double fine = meassol_residual(sol, f, 1.0, 0.05);
  const double ratio = coarse / fine;
  const bool pass = worst <= 1e-4 && ratio >= 3.4 && ratio <= 4.6;
  return {pass, fmt("max residual %.3g at snapshot step 0.01; step 0.1 -> 0.05: %.3g -> %.3g", worst, coarse, fine) +
                    fmt(" (factor %.2f)", ratio)};
}

Outcome generator() {
  const auto f = functions()[0];
  const auto coarse = generator_consistency(f, constant_rate(1.0, 1e-3, 20.0), 1e-3, 5.0);
  const auto fine = generator_consistency(f, constant_rate(1.0, 5e-4, 20.0), 5e-4, 5.0);
  const double ratio = coarse.generator_residual / fine.generator_residual;
  const HazardRate ramp_coarse([](double a) { return std::min(a, 2.0); }, {1.0, 2.0, 1.0}, 1e-3, 20.0);
  const HazardRate ramp_fine([](double a) { return std::min(a, 2.0); }, {1.0, 2.0, 1.0}, 5e-4, 20.0);
  const double ramp_ratio = generator_consistency(f, ramp_coarse, 1e-3, 5.0).generator_residual /
                            generator_consistency(f, ramp_fine, 5e-4, 5.0).generator_residual;
  const bool pass = coarse.generator_residual <= 1e-2 && ratio >= 1.7 && ratio <= 2.3 && ramp_ratio >= 1.7 && ramp_ratio <= 2.3;
  return {pass, fmt("residual %.3g at h=1e-3, ratio %.3f (unit), %.3f (ramp)", coarse.generator_residual, ratio, ramp_ratio)};
}

Outcome doeblin() {
  const auto rate = unit();
  const auto cert = certificate(rate, 1.0);
  const double c_formula = 1.0 * 1.0 * std::exp(-1.0 * 1.1);
  const double alpha_formula = -std::log(1.0 - c_formula) / 1.1;
  const auto report = verify_minorization(rate, cert, minorization_battery(1.0), kAMax - cert.t0);
  const bool pass = std::abs(cert.t0 - 1.1) <= 1e-12 && std::abs(cert.c - c_formula) <= 1e-10 &&
                    std::abs(cert.alpha - alpha_formula) <= 1e-10 && report.passed(1e-6);
  return {pass, fmt("t0 %.12g, c %.10f, alpha %.10f", cert.t0, cert.c, cert.alpha) +
                    fmt(", min margin %.3g over %g functions", report.min_margin(), static_cast<double>(report.entries.size()))};
}

Outcome decay() {
  const std::vector<double> times{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto rate = unit();
  const auto best = best_certificate(rate);
  const auto table = tv_decay_experiment(SignedMeasure::dirac(0.0), stationary(rate, kAMax).measure, rate, certificate(rate, 1.0), times);
  const auto table_best = tv_decay_experiment(SignedMeasure::dirac(0.0), stationary(rate, kAMax).measure, rate, best, times);
  const auto sat = saturating();
  const auto zero_star = tv_decay_experiment(SignedMeasure::dirac(0.0), stationary(sat, kAMax).measure, sat, certificate(sat, 1.0), times);
  double zero_star_excess = -1.0;
  for (const auto& row : zero_star.rows) {
    zero_star_excess = std::max(zero_star_excess, row.tv - std::exp(-sat.bounds().beta_min * row.t) * zero_star.initial_tv);
  }
  const double excess = std::max(table.max_excess(), table_best.max_excess());
  const bool pass = excess <= 1e-4 && table.fitted_rate >= best.alpha && zero_star_excess <= 1e-4;
  return {pass, fmt("max excess %.3g, fitted rate %.4f vs best alpha %.4f", excess, table.fitted_rate, best.alpha) +
                    fmt(", a_star = 0 excess %.3g", zero_star_excess)};
}

Outcome monte_carlo() {
  const auto r = ramp();
  const auto u = unit();
  const auto e1 = simulate(SignedMeasure::dirac(0.5), u, 1.0, 100000, 1);
  const auto e2 = simulate(uniform02(), r, 3.0, 100000, 2);
  const double ks1 = compare_cdf(e1, evolve_measure(SignedMeasure::dirac(0.5), u, 1.0));
  const double ks2 = compare_cdf(e2, evolve_measure(uniform02(), r, 3.0));
  const bool deterministic = simulate(uniform02(), r, 3.0, 100000, 2).final_ages == e2.final_ages;
  const bool pass = ks1 <= 0.01 && ks2 <= 0.01 && deterministic;
  return {pass, fmt("KS %.4f (delta_0.5, unit, t=1), %.4f (uniform, ramp, t=3)", ks1, ks2) +
                    (deterministic ? ", seed-deterministic" : ", NOT deterministic")};
}

Outcome invariance() {
  double worst = 0.0;
  for (const auto& rate : {unit(), ramp()}) {
    const auto inf = stationary(rate, kAMax).measure;
    const ForwardSolution sol(inf, rate, 2.0);
    for (double t : {0.5, 1.0, 2.0}) worst = std::max(worst, tv_norm(sol.at(t) - inf));
  }
  return {worst <= 1e-4, fmt("max TV(mu_inf M_t - mu_inf) = %.3g", worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"conservation", conservation},
      {"constant-rate closed form", closed_form},
      {"duality pairing", duality},
      {"semigroup law", semigroup},
      {"positivity, sup bound, conservativity, finite propagation", theorem_bounds},
      {"weak-formulation residual", weak_formulation},
      {"generator consistency", generator},
      {"Doeblin certificate and minorization", doeblin},
      {"total-variation decay", decay},
      {"Monte Carlo cross-validation", monte_carlo},
      {"invariance of the stationary measure", invariance},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome{false, ""};
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2d %s: %s [%.1fs]\n", outcome.pass ? "PASS" : "FAIL", index, name, outcome.detail.c_str(), seconds);
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
