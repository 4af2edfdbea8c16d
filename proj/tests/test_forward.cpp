#include <gtest/gtest.h>

#include <cmath>

#include "renewal/ergodicity.hpp"
#include "renewal/forward.hpp"
#include "support/closed_form.hpp"

using namespace renewal;

namespace {

constexpr double kH = 1e-3;

HazardRate unit(double extent = 60.0) { return constant_rate(1.0, kH, extent, 0.1); }

HazardRate ramp(double extent = 60.0) {
  return {[](double a) { return std::min(a, 2.0); }, {1.0, 2.0, 1.0}, kH, extent};
}

// Probability density 1/2 on [0, 2]. The grid stops at 2, so the last node
// holds the left limit.
SignedMeasure uniform02() { return SignedMeasure::from_density(GridFunction{kH, std::vector<double>(2001, 0.5)}); }

TestFunction exp_decay() {
  return {[](double a) { return std::exp(-a); }, [](double a) { return -std::exp(-a); }, 1.0};
}

}  // namespace

TEST(Flux, DiracAtZeroUnderUnitRate) {
  const auto b = solve_flux(SignedMeasure::dirac(0.0), unit(), 5.0);
  ASSERT_EQ(b.values.size(), 5001u);
  EXPECT_DOUBLE_EQ(b.values[0], 1.0);
  for (double v : b.values) EXPECT_NEAR(v, 1.0, 1e-6);
}

TEST(Flux, StationaryMeasureGivesConstantFlux) {
  for (const auto& rate : {unit(), ramp()}) {
    const auto inf = stationary(rate, 40.0);
    const auto b = solve_flux(inf.measure, rate, 2.0);
    for (double t : {0.0, 0.5, 1.0, 2.0}) EXPECT_NEAR(b.values[steps_of(t, kH)], inf.n0, 1e-6) << t;
  }
}

TEST(Flux, ZeroMeasureGivesZeroFlux) {
  const auto b = solve_flux(SignedMeasure{}, ramp(), 3.0);
  for (double v : b.values) EXPECT_EQ(v, 0.0);
}

// The flux also solves the renewal equation
//   b(t) = int beta(a+t) e^{-(B(a+t)-B(a))} mu_in(da) + int_0^t beta(a) e^{-B(a)} b(t-a) da.
TEST(Flux, SolvesRenewalEquation) {
  const auto rate = ramp();
  const SignedMeasure mu({{0.3, 0.6}}, uniform02().scaled(0.4).density());
  const double horizon = 4.0;
  const auto b = solve_flux(mu, rate, horizon);
  const auto& B = rate.cumulative_nodes();
  const auto& beta = rate.beta_nodes();
  for (std::size_t n = 500; n <= 4000; n += 500) {
    const double t = kH * static_cast<double>(n);
    double source = 0.0;
    for (const auto& atom : mu.atoms()) source += atom.weight * rate(atom.location + t) * rate.survival(atom.location, t);
    const auto& v = mu.density().values;
    for (std::size_t j = 0; j < v.size(); ++j) {
      source += kH * trapezoid_weight(j, v.size()) * v[j] * beta[j + n] * std::exp(B[j] - B[j + n]);
    }
    double renewal = 0.0;
    for (std::size_t k = 0; k <= n; ++k) renewal += kH * trapezoid_weight(k, n + 1) * beta[k] * std::exp(-B[k]) * b.values[n - k];
    EXPECT_NEAR(b.values[n], source + renewal, 2e-5) << t;
  }
}

TEST(Evolve, DiracUnderUnitRateMatchesClosedForm) {
  const auto mu = evolve_measure(SignedMeasure::dirac(0.5), unit(), 1.0);
  ASSERT_EQ(mu.atoms().size(), 1u);
  EXPECT_NEAR(mu.atoms()[0].location, 1.5, 1e-12);
  EXPECT_NEAR(mu.atoms()[0].weight, std::exp(-1.0), 1e-8);
  const auto& d = mu.density();
  for (std::size_t k = 0; k < 1000; ++k) {
    EXPECT_NEAR(d.values[k], reference::newborn_density(1.0, d.node(k)), 1e-6);
  }
  EXPECT_NEAR(mu.mass(), 1.0, 1e-12);
}

TEST(Evolve, TimeZeroIsIdentity) {
  const auto mu = uniform02();
  const auto out = evolve_measure(mu, ramp(), 0.0);
  EXPECT_EQ(out.density().values, mu.density().values);
}

TEST(Evolve, UniformMatchesClosedFormPairings) {
  const auto rate = unit();
  const auto mu = uniform02();
  const auto density = [](double a) { return a <= 2.0 ? 0.5 : 0.0; };
  for (double t : {0.5, 1.7, 4.0}) {
    const auto out = evolve_measure(mu, rate, t);
    for (const auto& f : {exp_decay(), TestFunction{[](double a) { return std::cos(a); }, {}, 1.0}}) {
      EXPECT_NEAR(integrate(out, f), reference::forward({}, density, 2.0, f.value, 1.0, t), 1e-6);
    }
  }
}

TEST(Evolve, StationaryMeasureIsInvariant) {
  for (const auto& rate : {unit(), ramp()}) {
    const auto inf = stationary(rate, 40.0);
    const ForwardSolution sol(inf.measure, rate, 2.0);
    for (double t : {0.5, 1.0, 2.0}) EXPECT_LE(tv_norm(sol.at(t) - inf.measure), 1e-4) << t;
  }
}

TEST(Evolve, MassConservedAndPositive) {
  for (const auto& rate : {unit(), ramp()}) {
    for (const auto& mu : {SignedMeasure::dirac(0.5), uniform02()}) {
      const ForwardSolution sol(mu, rate, 10.0);
      for (const auto& [t, snap] : sol.snapshots(0.5)) {
        EXPECT_NEAR(snap.mass(), 1.0, 1e-8) << t;
        EXPECT_TRUE(snap.is_nonnegative());
        EXPECT_NEAR(tv_norm(snap), snap.mass(), 1e-12);
      }
    }
  }
}

TEST(Evolve, SignedDataContractInTotalVariation) {
  const auto rate = ramp();
  const auto mu = SignedMeasure::dirac(1.0) - SignedMeasure::dirac(2.0) + uniform02().scaled(0.3);
  const ForwardSolution sol(mu, rate, 6.0);
  double previous = tv_norm(mu);
  for (const auto& [t, snap] : sol.snapshots(0.5)) {
    const double tv = tv_norm(snap);
    EXPECT_LE(tv, previous + 1e-8) << t;
    previous = tv;
  }
}

// A rate that rises steeply but continuously, and a smooth stand-in for the
// uniform datum: the scheme must not lose positivity or mass on either.
TEST(Evolve, SteepRateAndSmoothDatum) {
  const HazardRate steep([](double a) { return 0.5 + 1.5 / (1.0 + std::exp(-40.0 * (a - 1.0))); }, {0.5, 2.0, 0.0},
                         kH, 40.0);
  GridFunction d{kH, std::vector<double>(3001)};
  for (std::size_t j = 0; j < d.size(); ++j) {
    const double a = d.node(j);
    d.values[j] = a < 2.0 ? 0.5 * (1.0 - std::cos(std::numbers::pi * a)) / 2.0 : 0.0;
  }
  const auto mu = SignedMeasure::from_density(std::move(d));
  const ForwardSolution sol(mu, steep, 5.0);
  for (const auto& [t, snap] : sol.snapshots(1.0)) {
    EXPECT_NEAR(snap.mass(), mu.mass(), 1e-8);
    EXPECT_TRUE(snap.is_nonnegative());
  }
}

TEST(Evolve, Errors) {
  const auto short_rate = constant_rate(1.0, kH, 5.0);
  EXPECT_THROW(evolve_measure(SignedMeasure::dirac(1.0), short_rate, 4.5), DomainError);
  const auto coarse = SignedMeasure::from_density(GridFunction{0.01, std::vector<double>(11, 1.0)});
  EXPECT_THROW(evolve_measure(coarse, short_rate, 1.0), ContractError);
  EXPECT_THROW(evolve_measure(SignedMeasure::dirac(0.0), short_rate, 0.0005), ContractError);
}

TEST(Duality, ConstantFunctionGap) {
  EXPECT_LE(duality_gap(uniform02(), constant_function(1.0), ramp(), 2.0), 1e-12);
}

TEST(Duality, DiracUnderUnitRate) {
  const double exact = std::exp(-2.5) + (1.0 - std::exp(-2.0)) / 2.0;
  const auto mu = SignedMeasure::dirac(0.5);
  const auto rate = unit();
  EXPECT_NEAR(integrate(evolve_measure(mu, rate, 1.0), exp_decay()), exact, 1e-6);
  EXPECT_NEAR(integrate(mu, evolve_dual(exp_decay(), rate, 1.0, 0.5)), exact, 1e-6);
  EXPECT_LE(duality_gap(mu, exp_decay(), rate, 1.0), 1e-4);
}

TEST(Duality, SignedInputs) {
  const auto mu = SignedMeasure::dirac(1.0) - SignedMeasure::dirac(2.0);
  for (const auto& f : {exp_decay(), TestFunction{[](double a) { return std::sin(a); }, {}, 1.0}}) {
    EXPECT_LE(duality_gap(mu, f, ramp(), 1.5), 1e-4);
  }
}

TEST(MeasSol, ConstantFunctionVanishes) {
  EXPECT_LE(meassol_residual(uniform02(), constant_function(1.0), ramp(), 2.0, 0.1), 1e-14);
}

TEST(MeasSol, DiracUnderUnitRate) {
  const ForwardSolution sol(SignedMeasure::dirac(0.5), unit(), 1.0);
  EXPECT_LE(meassol_residual(sol, exp_decay(), 1.0, 0.01), 1e-4);
  const double coarse = meassol_residual(sol, exp_decay(), 1.0, 0.1);
  const double fine = meassol_residual(sol, exp_decay(), 1.0, 0.05);
  EXPECT_GE(coarse / fine, 3.4);
  EXPECT_LE(coarse / fine, 4.6);
}

TEST(MeasSol, SnapshotStepMustDivideTime) {
  const ForwardSolution sol(SignedMeasure::dirac(0.5), unit(), 1.0);
  EXPECT_THROW(meassol_residual(sol, exp_decay(), 1.0, 0.3), ContractError);
}
