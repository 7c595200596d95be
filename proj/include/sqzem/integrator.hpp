#pragma once

// Adaptive Dormand-Prince 5(4) integration with the method's native
// continuous extension for output at arbitrary times.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "sqzem/error.hpp"
#include "sqzem/fock.hpp"

namespace sqzem {

struct Tolerance {
  double relative = 1e-8;
  double absolute = 1e-10;
};

struct SolverStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
};

namespace dopri {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
}  // namespace dopri

/// Integrates y' = f(y) (autonomous) from times.front() and calls
/// observe(index, t, y) at every requested time. `f(y, out)` writes the
/// derivative into `out`. Times must be non-decreasing.
template <class Rhs, class Observer>
SolverStats integrate_dopri5(const Rhs& f, DenseMatrix y, std::span<const double> times,
                             const Tolerance& tol, Observer&& observe) {
  using namespace dopri;
  SolverStats stats;
  if (times.empty()) return stats;
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] < times[i - 1]) throw Error(Errc::invalid_parameter, "times must be sorted");
  }
  double t = times.front();
  const double t_end = times.back();
  std::size_t next_out = 0;
  while (next_out < times.size() && times[next_out] <= t) observe(next_out++, t, y);
  if (next_out == times.size()) return stats;

  const auto rows = y.rows();
  const auto cols = y.cols();
  DenseMatrix k1(rows, cols), k2(rows, cols), k3(rows, cols), k4(rows, cols), k5(rows, cols),
      k6(rows, cols), k7(rows, cols), stage(rows, cols), y_new(rows, cols), err(rows, cols);
  DenseMatrix r1, r2, r3, r4, r5;

  // Root-mean-square scaled error, as in Hairer's DOPRI5 and most production codes.
  auto error_norm = [&](const DenseMatrix& y0, const DenseMatrix& y1, const DenseMatrix& e) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      const double scale =
          tol.absolute + tol.relative * std::max(std::abs(y0.data()[i]), std::abs(y1.data()[i]));
      const double r = std::abs(e.data()[i]) / scale;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(e.size()));
  };

  f(y, k1);
  ++stats.rhs_evals;

  // Initial step from the size of y and y' (Hairer, Norsett & Wanner, II.4).
  double h;
  {
    double d0 = 0.0;
    double d1n = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = tol.absolute + tol.relative * std::abs(y.data()[i]);
      d0 += std::norm(y.data()[i] / sc);
      d1n += std::norm(k1.data()[i] / sc);
    }
    d0 = std::sqrt(d0 / static_cast<double>(y.size()));
    d1n = std::sqrt(d1n / static_cast<double>(y.size()));
    h = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h = std::min(h, t_end - t);
  }

  const double safety = 0.9;
  const double beta = 0.04;
  const double alpha = 0.2 - 0.75 * beta;
  double err_old = 1e-4;
  bool last_rejected = false;

  while (t < t_end) {
    const double h_floor = 1e-13 * std::max(1.0, std::abs(t));
    if (h < h_floor) {
      throw Error(Errc::stiffness, "step size " + format_number(h) + " underflowed at t = " +
                                       format_number(t) + " after " +
                                       std::to_string(stats.steps) + " steps");
    }
    if (t + h > t_end) h = t_end - t;

    stage = y + h * a21 * k1;
    f(stage, k2);
    stage = y + h * (a31 * k1 + a32 * k2);
    f(stage, k3);
    stage = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(stage, k4);
    stage = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(stage, k5);
    stage = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(stage, k6);
    y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    f(y_new, k7);
    stats.rhs_evals += 6;

    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double e = error_norm(y, y_new, err);

    if (!std::isfinite(e)) {
      throw Error(Errc::accuracy, "non-finite state at t = " + format_number(t));
    }

    if (e <= 1.0) {
      ++stats.steps;
      const double t_new = t + h;
      if (next_out < times.size() && times[next_out] <= t_new) {
        r1 = y;
        r2 = y_new - y;
        r3 = h * k1 - r2;
        r4 = r2 - h * k7 - r3;
        r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        while (next_out < times.size() && times[next_out] <= t_new) {
          const double theta = (times[next_out] - t) / h;
          const double theta1 = 1.0 - theta;
          if (times[next_out] == t_new) {
            observe(next_out, times[next_out], y_new);
          } else {
            stage = r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
            observe(next_out, times[next_out], stage);
          }
          ++next_out;
        }
      }
      y.swap(y_new);
      k1.swap(k7);
      t = t_new;
      double fac = safety * std::pow(std::max(e, 1e-10), -alpha) * std::pow(err_old, beta);
      fac = std::clamp(fac, 0.2, 10.0);
      if (last_rejected) fac = std::min(fac, 1.0);
      err_old = std::max(e, 1e-4);
      h *= fac;
      last_rejected = false;
    } else {
      ++stats.rejected;
      h *= std::max(0.2, safety * std::pow(e, -alpha));
      last_rejected = true;
    }
  }
  return stats;
}

}  // namespace sqzem
