#pragma once

// Closed-form design relations for the squeezed-bath driven two-cavity setup:
// squeezing parameter, Bogoliubov frequencies, enhanced couplings, bath
// moments and the rotating-wave validity ratio. Frequencies are in units of
// the mechanical frequency.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sqzem/error.hpp"

namespace sqzem {

struct SystemParams {
  double delta1 = 1000.0;
  double delta2 = 1000.0;
  double xi = 800.0;
  double omega_m = 1.0;
  double g = 0.001;
  double kappa = 0.02;
  double gamma_m = 1e-3;
  double n_th = 0.0;
  /// Lab-frame flux drive frequency. Carried for provenance only.
  std::optional<double> omega_d;

  double detuning_sum() const { return delta1 + delta2; }
  /// Critical parametric coupling, (delta1 + delta2) / 2.
  double xi_critical() const { return 0.5 * detuning_sum(); }

  void validate() const {
    if (!(kappa > 0.0)) throw Error(Errc::invalid_parameter, "kappa must be > 0");
    if (gamma_m < 0.0) throw Error(Errc::invalid_parameter, "gamma_m must be >= 0");
    if (n_th < 0.0) throw Error(Errc::invalid_parameter, "n_th must be >= 0");
    if (g < 0.0) throw Error(Errc::invalid_parameter, "g must be >= 0");
    if (!(omega_m > 0.0)) throw Error(Errc::invalid_parameter, "omega_m must be > 0");
    if (!(detuning_sum() > 0.0)) {
      throw Error(Errc::invalid_parameter, "delta1 + delta2 must be > 0");
    }
  }
};

struct DerivedParams {
  double a = 0.0;
  double r0 = 0.0;
  double M = 0.0;
  double N = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
  double rwa_ratio = 0.0;
};

struct SqueezeParameter {
  double a;
  double r0;
};

/// r0 = ln((a + 2) / (a - 2)) / 4 with a = (delta1 + delta2) / xi.
inline SqueezeParameter squeeze_parameter(double delta1, double delta2, double xi) {
  if (!(xi > 0.0)) throw Error(Errc::invalid_parameter, "xi must be > 0");
  const double a = (delta1 + delta2) / xi;
  if (!(a > 2.0)) {
    throw Error(Errc::critical_coupling_exceeded,
                "xi = " + format_number(xi) + " is at or beyond xi0 = " +
                    format_number(0.5 * (delta1 + delta2)) + " (a = " + format_number(a) + ")");
  }
  // log1p keeps precision when a is large (r0 -> 0).
  return {a, 0.25 * std::log1p(4.0 / (a - 2.0))};
}

struct BathMoments {
  double M;
  double N;
};

/// Perfect two-mode squeezed vacuum: M = sinh r0 cosh r0, N = sinh^2 r0.
inline BathMoments bath_moments(double r0) {
  if (r0 < 0.0) throw Error(Errc::invalid_parameter, "r0 must be >= 0");
  const double s = std::sinh(r0);
  const double c = std::cosh(r0);
  return {s * c, s * s};
}

struct EffectiveCouplings {
  double g1;
  double g2;
};

inline EffectiveCouplings effective_couplings(double g, double r0) {
  if (g < 0.0) throw Error(Errc::invalid_parameter, "g must be >= 0");
  if (r0 < 0.0) throw Error(Errc::invalid_parameter, "r0 must be >= 0");
  const double s = std::sinh(r0);
  // g1 - g2 = g holds exactly because g1 is formed from g2.
  const double g2 = g * s * s;
  return {g + g2, g2};
}

struct BogoliubovFrequencies {
  double omega1;
  double omega2;
};

inline BogoliubovFrequencies bogoliubov_frequencies(double delta1, double delta2, double xi,
                                                    double r0) {
  const auto expected = squeeze_parameter(delta1, delta2, xi);
  if (std::abs(expected.r0 - r0) > 1e-10 * std::max(1.0, std::abs(r0))) {
    throw Error(Errc::invalid_parameter, "r0 = " + format_number(r0) +
                                             " inconsistent with the selection rule value " +
                                             format_number(expected.r0));
  }
  const double common = (delta1 + delta2 - 2.0 * xi) * std::exp(2.0 * r0);
  return {0.5 * (common + delta1 - delta2), 0.5 * (common + delta2 - delta1)};
}

/// (Omega1 + Omega2) / max(g sinh r0 cosh r0, omega_m); the counter-rotating
/// Bogoliubov terms are negligible when this is large.
inline double rwa_ratio(double omega1, double omega2, double g, double M, double omega_m) {
  return (omega1 + omega2) / std::max(g * M, omega_m);
}

inline constexpr double kRwaThreshold = 20.0;

struct ValidityReport {
  double rwa_ratio = 0.0;
  bool rwa_ok = false;
  /// Strong coupling: G1 exceeds kappa and the thermal decoherence rate.
  bool strong_coupling = false;
};

inline ValidityReport validity_check(const DerivedParams& derived, double g, double omega_m,
                                     double kappa = 0.0, double thermal_rate = 0.0) {
  ValidityReport report;
  report.rwa_ratio = rwa_ratio(derived.omega1, derived.omega2, g, derived.M, omega_m);
  report.rwa_ok = report.rwa_ratio >= kRwaThreshold;
  report.strong_coupling = derived.g1 > kappa && derived.g1 > thermal_rate;
  return report;
}

inline DerivedParams derive(const SystemParams& p) {
  p.validate();
  const auto sq = squeeze_parameter(p.delta1, p.delta2, p.xi);
  const auto bath = bath_moments(sq.r0);
  const auto cpl = effective_couplings(p.g, sq.r0);
  const auto freq = bogoliubov_frequencies(p.delta1, p.delta2, p.xi, sq.r0);
  DerivedParams d;
  d.a = sq.a;
  d.r0 = sq.r0;
  d.M = bath.M;
  d.N = bath.N;
  d.omega1 = freq.omega1;
  d.omega2 = freq.omega2;
  d.g1 = cpl.g1;
  d.g2 = cpl.g2;
  d.rwa_ratio = rwa_ratio(d.omega1, d.omega2, p.g, d.M, p.omega_m);
  return d;
}

/// Detunings that realise a target squeezing parameter and Bogoliubov
/// frequency sum with symmetric detunings. Inverse of derive(); used to set up
/// verification models at desk-scale r0.
inline SystemParams params_for_squeezing(double r0, double omega_sum, SystemParams base) {
  if (!(r0 > 0.0)) throw Error(Errc::invalid_parameter, "r0 must be > 0");
  if (!(omega_sum > 0.0)) throw Error(Errc::invalid_parameter, "omega_sum must be > 0");
  // tanh 2r0 = 2 / a and Omega1 + Omega2 = (delta1 + delta2) / cosh 2r0.
  const double sum = omega_sum * std::cosh(2.0 * r0);
  base.delta1 = 0.5 * sum;
  base.delta2 = 0.5 * sum;
  base.xi = 0.5 * sum * std::tanh(2.0 * r0);
  return base;
}

struct XiRow {
  double xi = 0.0;
  std::optional<DerivedParams> derived;
  bool valid = false;
  std::string error;
};

inline XiRow evaluate_xi(SystemParams params, double xi) {
  XiRow row;
  row.xi = xi;
  params.xi = xi;
  try {
    row.derived = derive(params);
    row.valid = row.derived->rwa_ratio >= kRwaThreshold;
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

/// Row-per-point sweep; points at or beyond xi0 carry an error and the sweep continues.
/// `run_parallel` maps an index range onto workers; the default runs sequentially.
inline std::vector<XiRow> sweep_xi(
    const SystemParams& params, const std::vector<double>& xi_grid,
    const std::function<void(std::size_t, const std::function<void(std::size_t)>&)>&
        run_parallel = {}) {
  std::vector<XiRow> rows(xi_grid.size());
  auto body = [&](std::size_t i) { rows[i] = evaluate_xi(params, xi_grid[i]); };
  if (run_parallel) {
    run_parallel(xi_grid.size(), body);
  } else {
    for (std::size_t i = 0; i < xi_grid.size(); ++i) body(i);
  }
  return rows;
}

struct R0Row {
  double r0;
  double g1;
};

inline std::vector<R0Row> sweep_r0(double g, const std::vector<double>& r0_grid) {
  std::vector<R0Row> rows;
  rows.reserve(r0_grid.size());
  for (double r0 : r0_grid) rows.push_back({r0, effective_couplings(g, r0).g1});
  return rows;
}

/// Grid on (xi_min, xi_max) whose spacing shrinks geometrically toward xi0.
/// `closest` is the relative gap (xi0 - xi) / xi0 of the last point when
/// xi_max reaches xi0; points requested at or beyond xi0 are appended on a
/// linear grid of `beyond_points` so they surface as error rows.
inline std::vector<double> xi_grid(const SystemParams& params, double xi_min,
                                   std::optional<double> xi_max, int points,
                                   double closest = 1e-7, int beyond_points = 10) {
  const double xi0 = params.xi_critical();
  if (points < 1) throw Error(Errc::invalid_parameter, "xi grid needs at least one point");
  if (!(xi_min > 0.0)) throw Error(Errc::invalid_parameter, "xi_min must be > 0");
  const double top = xi_max.value_or(xi0 * (1.0 - closest));
  std::vector<double> grid;
  if (points == 1) {
    grid.push_back(xi_min);
    return grid;
  }
  const double near_end = std::min(top, xi0 * (1.0 - closest));
  if (xi_min < xi0 && near_end > xi_min) {
    const double gap_lo = std::log(xi0 - xi_min);
    const double gap_hi = std::log(xi0 - near_end);
    for (int k = 0; k < points; ++k) {
      const double s = double(k) / (points - 1);
      grid.push_back(xi0 - std::exp(gap_lo + s * (gap_hi - gap_lo)));
    }
    grid.front() = xi_min;
    grid.back() = near_end;
  } else {
    grid.push_back(xi_min);
  }
  if (top >= xi0 && beyond_points > 0) {
    for (int k = 0; k < beyond_points; ++k) {
      const double s = beyond_points == 1 ? 1.0 : double(k) / (beyond_points - 1);
      grid.push_back(xi0 + s * (top - xi0));
    }
  }
  return grid;
}

struct OperatingPoint {
  double xi = 0.0;
  DerivedParams derived;
  /// min(G1 / (weight kappa), Omega1 / omega_m) at the optimum.
  double objective = 0.0;
  double g1_over_kappa = 0.0;
  double omega1_over_omega_m = 0.0;
};

/// Maximizes min(G1 / (weight kappa), Omega1 / omega_m) over 0 < xi < xi0.
/// The first argument increases and the second decreases with xi, so the
/// objective is unimodal; the search runs on log(xi0 - xi) where the
/// near-critical structure is resolved.
inline OperatingPoint find_operating_point(SystemParams params, double weight = 1.0) {
  params.validate();
  if (!(weight > 0.0)) throw Error(Errc::invalid_parameter, "weight must be > 0");
  const double xi0 = params.xi_critical();
  auto objective_at = [&](double u) {
    const double xi = xi0 - std::exp(u);
    params.xi = xi;
    const auto d = derive(params);
    return std::min(d.g1 / (weight * params.kappa), d.omega1 / params.omega_m);
  };
  // u = log(xi0 - xi) ranges over (log(xi0 * 1e-14), log(xi0)).
  const double u_min = std::log(xi0) + std::log(1e-14);
  const double u_max = std::log(xi0) + std::log1p(-1e-9);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = u_min;
  double hi = u_max;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = objective_at(x1);
  double f2 = objective_at(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = objective_at(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = objective_at(x1);
    }
  }
  const double u_best = 0.5 * (lo + hi);
  const double best = objective_at(u_best);
  const double span = u_max - u_min;
  if (!(best > 0.0) || u_best - u_min < 1e-6 * span || u_max - u_best < 1e-6 * span) {
    throw Error(Errc::not_found, "no interior maximum of min(G1/(w kappa), Omega1/omega_m)");
  }
  OperatingPoint op;
  op.xi = xi0 - std::exp(u_best);
  params.xi = op.xi;
  op.derived = derive(params);
  op.objective = best;
  op.g1_over_kappa = op.derived.g1 / params.kappa;
  op.omega1_over_omega_m = op.derived.omega1 / params.omega_m;
  return op;
}

}  // namespace sqzem
