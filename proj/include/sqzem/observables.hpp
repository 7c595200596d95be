#pragma once

// Photon statistics and excitation spectra of the first Bogoliubov mode.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqzem/engine.hpp"
#include "sqzem/error.hpp"
#include "sqzem/fock.hpp"
#include "sqzem/model.hpp"

namespace sqzem {

/// Denominators of g2 below this occupation are treated as undefined.
inline constexpr double kOccupationFloor = 1e-12;

/// <A^dag A^dag A A> / <A^dag A>^2.
inline double g2_zero(const QState& state, const QOperator& mode_op) {
  require_same_spec(state.spec(), mode_op.spec(), "g2_zero");
  const auto ad = mode_op.adjoint();
  const double n = expectation(state, ad * mode_op).real();
  if (n < kOccupationFloor) {
    throw Error(Errc::undefined_correlation,
                "occupation " + format_number(n) + " below floor " + format_number(kOccupationFloor));
  }
  const double pairs = expectation(state, ad * ad * mode_op * mode_op).real();
  return pairs / (n * n);
}

struct G2Trajectory {
  std::vector<double> times;
  /// Empty where the occupation is below the floor.
  std::vector<std::optional<double>> g2;
  std::vector<double> n_cav;
  std::vector<double> n_mech;
  std::vector<double> trace_error;
  SolverStats stats;
};

/// g2(0) of `mode_op` along a trajectory. `mech_op` (optional) is the
/// mechanical annihilation operator whose occupation is recorded alongside.
inline G2Trajectory g2_trajectory(const ModelSpec& model, const QState& rho0,
                                  std::span<const double> times, const QOperator& mode_op,
                                  const std::optional<QOperator>& mech_op = std::nullopt,
                                  Tolerance tol = {}) {
  const auto ad = mode_op.adjoint();
  EvolveOptions options;
  options.tol = tol;
  options.observables = {ad * mode_op, ad * ad * mode_op * mode_op};
  if (mech_op) options.observables.push_back(mech_op->adjoint() * *mech_op);
  const auto traj = evolve(model, rho0, times, options);

  G2Trajectory out;
  out.times = traj.times;
  out.trace_error = traj.trace_error;
  out.stats = traj.stats;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double n = traj.observables[0][i].real();
    const double pairs = traj.observables[1][i].real();
    out.n_cav.push_back(n);
    out.n_mech.push_back(mech_op ? traj.observables[2][i].real() : 0.0);
    if (n >= kOccupationFloor) {
      out.g2.emplace_back(pairs / (n * n));
    } else {
      out.g2.emplace_back(std::nullopt);
    }
  }
  return out;
}

/// Reduced single-mode model parameters (first Bogoliubov mode + mechanics).
struct BlockadeParams {
  double g1 = 1.0;
  double omega_m = 1.0;
  double kappa = 0.1;
  double gamma_m = 1e-3;
  double n_th = 0.0;
  TruncationSpec spec{std::vector<int>{6, 14}};
};

struct SpectrumPoint {
  double delta0 = 0.0;
  double s1 = 0.0;
  double n_cav = 0.0;
  double n_mech = 0.0;
  std::string error;

  bool ok() const { return error.empty(); }
};

inline constexpr double kMaxProbeOverKappa = 0.2;

/// Steady-state point of the excitation spectrum, S1 = <A^dag A> / n0 with
/// n0 = epsilon_eff^2 / kappa^2.
inline SpectrumPoint spectrum_point(const BlockadeParams& p, double delta0, double epsilon_eff) {
  SpectrumPoint pt;
  pt.delta0 = delta0;
  try {
    const auto model = build_reduced_blockade_model(p.g1, delta0, p.omega_m, p.kappa, p.gamma_m,
                                                    p.n_th, epsilon_eff, p.spec);
    const auto rho = steady_state(build_liouvillian(model));
    const ModeOperators ops(p.spec);
    pt.n_cav = expectation(rho, ops.n(0)).real();
    pt.n_mech = expectation(rho, ops.n(1)).real();
    const double n0 = epsilon_eff * epsilon_eff / (p.kappa * p.kappa);
    pt.s1 = pt.n_cav / n0;
  } catch (const Error& e) {
    pt.error = e.what();
  }
  return pt;
}

inline std::vector<SpectrumPoint> excitation_spectrum(
    const BlockadeParams& p, const std::vector<double>& delta0_grid, double epsilon_eff,
    const std::function<void(std::size_t, const std::function<void(std::size_t)>&)>&
        run_parallel = {}) {
  if (!(epsilon_eff > 0.0) || epsilon_eff > kMaxProbeOverKappa * p.kappa) {
    throw Error(Errc::invalid_parameter, "epsilon_eff must lie in (0, 0.2 kappa] for the "
                                         "weak-probe spectrum");
  }
  std::vector<SpectrumPoint> points(delta0_grid.size());
  auto body = [&](std::size_t i) { points[i] = spectrum_point(p, delta0_grid[i], epsilon_eff); };
  if (run_parallel) {
    run_parallel(delta0_grid.size(), body);
  } else {
    for (std::size_t i = 0; i < delta0_grid.size(); ++i) body(i);
  }
  return points;
}

/// Poisson (Franck-Condon) weight of the n-th phonon sideband, beta = (G1/omega_m)^2.
inline double franck_condon_weight(double beta, int n) {
  return std::exp(-beta + n * std::log(std::max(beta, 1e-300)) - std::lgamma(n + 1.0)) *
         (n == 0 || beta > 0.0 ? 1.0 : 0.0);
}

/// Weak-drive, zero-temperature polaron spectrum in the same normalization as
/// S1: a bare cavity gives kappa^2 / (delta0^2 + kappa^2 / 4).
inline std::vector<double> franck_condon_oracle(double g1, double omega_m, double kappa,
                                                std::span<const double> delta0_grid) {
  const double beta = (g1 / omega_m) * (g1 / omega_m);
  const double shift = g1 * g1 / omega_m;
  int n_max = 0;
  while (n_max < 400 && (n_max < beta || franck_condon_weight(beta, n_max) > 1e-16)) ++n_max;
  std::vector<double> out;
  out.reserve(delta0_grid.size());
  for (double delta0 : delta0_grid) {
    double s = 0.0;
    for (int n = 0; n <= n_max; ++n) {
      const double det = delta0 + shift - n * omega_m;
      s += franck_condon_weight(beta, n) * kappa * kappa / (det * det + 0.25 * kappa * kappa);
    }
    out.push_back(s);
  }
  return out;
}

struct Peak {
  double delta0 = 0.0;
  double height = 0.0;
};

/// Local maxima of a sampled curve above `min_height`, refined by a parabola
/// through the three grid points around each maximum.
inline std::vector<Peak> find_peaks(std::span<const double> x, std::span<const double> y,
                                    double min_height) {
  std::vector<Peak> peaks;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1]) || y[i] < min_height) continue;
    const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
    const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
    const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    Peak pk{x1, y1};
    if (a < 0.0) {
      const double xv = -b / (2.0 * a);
      if (xv > x0 && xv < x2) {
        const double c = y1 - a * x1 * x1 - b * x1;
        pk = {xv, a * xv * xv + b * xv + c};
      }
    }
    peaks.push_back(pk);
  }
  return peaks;
}

/// Golden-section refinement of a maximum of f bracketed by [lo, hi].
inline Peak refine_peak(const std::function<double(double)>& f, double lo, double hi,
                        double x_tol = 1e-5) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > x_tol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    }
  }
  return f1 > f2 ? Peak{x1, f1} : Peak{x2, f2};
}

}  // namespace sqzem
