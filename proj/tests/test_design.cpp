#include <gtest/gtest.h>

#include <cmath>

#include "sqzem/design.hpp"

using namespace sqzem;

namespace {

SystemParams fig_params() {
  SystemParams p;
  p.delta1 = 1000.0;
  p.delta2 = 1000.0;
  p.g = 0.001;
  p.kappa = 0.02;
  return p;
}

bool throws_code(const std::function<void()>& f, Errc code) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

}  // namespace

TEST(SqueezeParameter, ClosedFormAtA2p5) {
  const auto sq = squeeze_parameter(1000.0, 1000.0, 800.0);
  EXPECT_DOUBLE_EQ(sq.a, 2.5);
  EXPECT_NEAR(sq.r0, 0.5493061, 1e-7);
  EXPECT_NEAR(std::exp(4.0 * sq.r0), 9.0, 1e-12);
}

TEST(SqueezeParameter, LimitsAndErrors) {
  EXPECT_LT(squeeze_parameter(1000.0, 1000.0, 1e-9).r0, 1e-11);
  EXPECT_TRUE(throws_code([] { squeeze_parameter(1000.0, 1000.0, 1000.0); },
                          Errc::critical_coupling_exceeded));
  EXPECT_TRUE(throws_code([] { squeeze_parameter(1000.0, 1000.0, 1200.0); },
                          Errc::critical_coupling_exceeded));
  EXPECT_TRUE(throws_code([] { squeeze_parameter(1000.0, 1000.0, 0.0); }, Errc::invalid_parameter));
  EXPECT_TRUE(throws_code([] { squeeze_parameter(1000.0, 1000.0, -5.0); }, Errc::invalid_parameter));
}

TEST(BathMoments, Values) {
  const auto zero = bath_moments(0.0);
  EXPECT_EQ(zero.M, 0.0);
  EXPECT_EQ(zero.N, 0.0);
  // cosh 2r0 = 5/3 at a = 2.5: N = (5/3 - 1)/2, M = sqrt((5/3)^2 - 1)/2.
  const auto m = bath_moments(0.25 * std::log(9.0));
  EXPECT_NEAR(m.N, 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(m.M, 2.0 / 3.0, 1e-14);
  for (double r0 : {0.1, 1.0, 3.0, 6.5}) {
    const auto b = bath_moments(r0);
    EXPECT_NEAR(b.M * b.M, b.N * (b.N + 1.0), 1e-12 * b.M * b.M);
  }
  // Direct evaluation; the often-quoted 1.65e5 belongs to r0 = 6.7.
  EXPECT_NEAR(std::pow(std::cosh(6.5), 2), 1.106e5, 0.001e5);
}

TEST(EffectiveCouplings, Values) {
  const auto c0 = effective_couplings(0.001, 0.0);
  EXPECT_EQ(c0.g1, 0.001);
  EXPECT_EQ(c0.g2, 0.0);
  const auto c = effective_couplings(0.001, 0.25 * std::log(9.0));
  EXPECT_NEAR(c.g1, 0.001 * 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(c.g2, 0.001 / 3.0, 1e-15);
  for (double r0 : {0.2, 2.0, 6.5}) {
    const auto e = effective_couplings(0.001, r0);
    EXPECT_NEAR(e.g1 - e.g2, 0.001, 1e-15 * e.g1);
  }
  // cosh^2 r0 = 160 gives G1 = 0.16 = 8 kappa at kappa = 0.02.
  const double r160 = std::acosh(std::sqrt(160.0));
  EXPECT_NEAR(effective_couplings(0.001, r160).g1, 0.16, 1e-12);
}

TEST(BogoliubovFrequencies, SymmetricAndClosedForm) {
  const double r0 = 0.25 * std::log(9.0);
  const auto f = bogoliubov_frequencies(1000.0, 1000.0, 800.0, r0);
  EXPECT_NEAR(f.omega1, 600.0, 1e-9);
  EXPECT_NEAR(f.omega2, 600.0, 1e-9);
  const auto asym = bogoliubov_frequencies(1200.0, 800.0, 500.0, squeeze_parameter(1200, 800, 500).r0);
  EXPECT_NEAR(asym.omega1 - asym.omega2, 400.0, 1e-9);
  EXPECT_TRUE(throws_code([&] { bogoliubov_frequencies(1000.0, 1000.0, 800.0, r0 + 1e-6); },
                          Errc::invalid_parameter));
}

TEST(BogoliubovFrequencies, NearCriticalProductLaw) {
  // cosh^2 r0 = 160: tanh 2r0 = 2/a fixes xi; Omega1 G1 should be close to
  // (delta1 + delta2) g / 4 = 0.5.
  const double r0 = std::acosh(std::sqrt(160.0));
  const double xi = 1000.0 * std::tanh(2.0 * r0);
  auto p = fig_params();
  p.xi = xi;
  const auto d = derive(p);
  EXPECT_NEAR(d.r0, r0, 1e-9);
  EXPECT_NEAR(d.g1, 0.16, 1e-9);
  EXPECT_NEAR(d.omega1, 2000.0 / std::cosh(2.0 * r0) / 2.0, 1e-6);
  EXPECT_NEAR(d.omega1, 3.13, 0.01);
  EXPECT_NEAR(d.g1 * d.omega1 / 0.5, 1.0, 1.0 / std::cosh(2.0 * r0) + 1e-9);
}

TEST(ValidityCheck, Ratios) {
  auto p = fig_params();
  p.xi = 800.0;
  const auto d = derive(p);
  const auto v = validity_check(d, p.g, p.omega_m);
  EXPECT_NEAR(v.rwa_ratio, 1200.0, 1e-6);
  EXPECT_TRUE(v.rwa_ok);
  EXPECT_NEAR(d.M * p.g, 6.67e-4, 1e-6);

  DerivedParams near;
  near.omega1 = 3.135;
  near.omega2 = 3.135;
  near.M = 160.0;
  const auto w = validity_check(near, 0.001, 1.0);
  EXPECT_NEAR(w.rwa_ratio, 6.27, 1e-9);
  EXPECT_FALSE(w.rwa_ok);

  // r0 = 0 reduces to the bare detuning comparison.
  DerivedParams bare;
  bare.omega1 = 30.0;
  bare.omega2 = 10.0;
  EXPECT_DOUBLE_EQ(validity_check(bare, 0.001, 1.0).rwa_ratio, 40.0);
}

TEST(SystemParams, Validation) {
  auto p = fig_params();
  p.kappa = 0.0;
  EXPECT_THROW(p.validate(), Error);
  p = fig_params();
  p.gamma_m = -1.0;
  EXPECT_THROW(p.validate(), Error);
  p = fig_params();
  p.delta1 = -2000.0;
  EXPECT_THROW(p.validate(), Error);
  // omega_d is carried but never enters the derived quantities.
  p = fig_params();
  p.xi = 800.0;
  const auto a = derive(p);
  p.omega_d = 12345.0;
  const auto b = derive(p);
  EXPECT_EQ(a.omega1, b.omega1);
  EXPECT_EQ(a.g1, b.g1);
}

TEST(SweepXi, SpotRowsAndMonotonicity) {
  const auto p = fig_params();
  const auto rows = sweep_xi(p, {1e-6, 800.0});
  ASSERT_TRUE(rows[1].derived);
  EXPECT_NEAR(rows[1].derived->g1 / (0.001 * 4.0 / 3.0), 1.0, 1e-9);
  EXPECT_NEAR(rows[1].derived->omega1 / 600.0, 1.0, 1e-9);
  EXPECT_NEAR(rows[0].derived->g1, 0.001, 1e-12);
  EXPECT_NEAR(rows[0].derived->omega1, 1000.0 - 1e-6, 1e-6);

  const auto grid = xi_grid(p, 1.0, std::nullopt, 300);
  const auto sweep = sweep_xi(p, grid);
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    ASSERT_TRUE(sweep[i].derived);
    EXPECT_GT(sweep[i].xi, sweep[i - 1].xi);
    EXPECT_GT(sweep[i].derived->g1, sweep[i - 1].derived->g1);
    EXPECT_GT(sweep[i].derived->r0, sweep[i - 1].derived->r0);
  }
  // G1 Omega1 = g (delta1 + delta2) / 4 (1 + 1/cosh 2r0) sits above 0.5 omega_m^2,
  // so a point with G1 = 5 kappa and Omega1 = 5 omega_m is always reachable.
  for (const auto& r : sweep) {
    const double c = std::cosh(2.0 * r.derived->r0);
    EXPECT_NEAR(r.derived->g1 * r.derived->omega1, 0.5 * (1.0 + 1.0 / c), 1e-9);
  }
}

TEST(SweepXi, RowsBeyondCriticalCarryErrors) {
  const auto p = fig_params();
  const auto grid = xi_grid(p, 1.0, 1100.0, 50, 1e-7, 10);
  ASSERT_EQ(grid.size(), 60u);
  const auto rows = sweep_xi(p, grid);
  int errors = 0;
  for (const auto& r : rows) {
    if (r.xi >= 1000.0) {
      EXPECT_FALSE(r.derived);
      EXPECT_NE(r.error.find("critical-coupling-exceeded"), std::string::npos);
      ++errors;
    } else {
      EXPECT_TRUE(r.derived);
    }
  }
  EXPECT_EQ(errors, 10);
}

TEST(XiGrid, SinglePointAndEmpty) {
  const auto p = fig_params();
  const auto one = xi_grid(p, 800.0, std::nullopt, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], 800.0);
  EXPECT_THROW(xi_grid(p, 800.0, std::nullopt, 0), Error);
}

TEST(SweepR0, Values) {
  const auto rows = sweep_r0(0.001, {0.0, 1.0, 3.25, 6.5});
  EXPECT_EQ(rows[0].g1, 0.001);
  EXPECT_NEAR(rows[3].g1, 110.60, 0.01);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(rows[i].g1, rows[i - 1].g1);
  // Doubling r0 at large r0 squares the enhancement up to the e^{2r}/4 asymptote.
  const double e1 = rows[2].g1 / 0.001;
  const double e2 = rows[3].g1 / 0.001;
  EXPECT_NEAR(e2 / (4.0 * e1 * e1), 1.0, 1e-2);
}

TEST(OperatingPoint, BalancedNearFive) {
  auto p = fig_params();
  const auto op = find_operating_point(p);
  EXPECT_GE(op.g1_over_kappa, 5.0);
  EXPECT_GE(op.omega1_over_omega_m, 5.0);
  EXPECT_NEAR(op.g1_over_kappa, op.omega1_over_omega_m, 1e-6);
  EXPECT_NEAR(op.objective, 5.0, 0.05);

  // Dense scan cross-check of the maximum.
  double best = 0.0;
  for (int k = 0; k <= 20000; ++k) {
    p.xi = 1000.0 - std::exp(std::log(1000.0) + (std::log(1e-12) * k) / 20000.0);
    if (p.xi <= 0.0) continue;
    const auto d = derive(p);
    best = std::max(best, std::min(d.g1 / p.kappa, d.omega1 / p.omega_m));
  }
  EXPECT_NEAR(op.objective, best, 1e-3);
}

TEST(OperatingPoint, WeightAndDegenerateCases) {
  auto p = fig_params();
  // A larger weight asks for more G1 per unit of Omega1, which moves the
  // balance toward xi0; a smaller one moves it toward xi = 0.
  const auto w1 = find_operating_point(p, 1.0);
  const auto w10 = find_operating_point(p, 10.0);
  const auto w01 = find_operating_point(p, 0.1);
  EXPECT_GT(w10.xi, w1.xi);
  EXPECT_LT(w10.omega1_over_omega_m, w1.omega1_over_omega_m);
  EXPECT_LT(w01.xi, w1.xi);
  EXPECT_GT(w01.omega1_over_omega_m, w1.omega1_over_omega_m);
  p.g = 0.0;
  EXPECT_TRUE(throws_code([&] { find_operating_point(p); }, Errc::not_found));
}

TEST(ParamsForSqueezing, InvertsDerive) {
  SystemParams base;
  const auto p = params_for_squeezing(0.4, 3.0, base);
  const auto d = derive(p);
  EXPECT_NEAR(d.r0, 0.4, 1e-12);
  EXPECT_NEAR(d.omega1 + d.omega2, 3.0, 1e-12);
}
