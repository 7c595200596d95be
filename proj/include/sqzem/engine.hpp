#pragma once

// Time evolution and steady states of master-equation models.

#include <Eigen/UmfPackSupport>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqzem/error.hpp"
#include "sqzem/fock.hpp"
#include "sqzem/integrator.hpp"
#include "sqzem/liouvillian.hpp"
#include "sqzem/model.hpp"

namespace sqzem {

struct EvolveOptions {
  Tolerance tol;
  /// Operators whose expectation values are recorded at every output time.
  std::vector<QOperator> observables;
  /// Keep full (Hermitized, trace-normalized) states; positivity is checked on each.
  bool record_states = false;
  /// Raw trace drift above this raises an accuracy error.
  double max_trace_drift = 1e-6;
};

struct Trajectory {
  std::vector<double> times;
  /// observables[k][i] is the k-th observable at times[i].
  std::vector<std::vector<cplx>> observables;
  std::vector<QState> states;
  /// |trace(rho) - 1| of the integrated state before renormalization.
  std::vector<double> trace_error;
  SolverStats stats;
};

namespace detail {

inline DenseMatrix normalized_output(const DenseMatrix& rho, double& trace_err) {
  const cplx tr = rho.trace();
  trace_err = std::abs(tr - 1.0);
  DenseMatrix out = 0.5 * (rho + rho.adjoint());
  out /= tr.real();
  return out;
}

template <class Rhs>
Trajectory run_evolution(const Rhs& rhs, const TruncationSpec& spec, const DenseMatrix& y0,
                         std::span<const double> times, const EvolveOptions& options,
                         bool vectorized) {
  for (const auto& op : options.observables) require_same_spec(spec, op.spec(), "observable");
  const auto d = spec.total_dim();
  Trajectory traj;
  traj.times.assign(times.begin(), times.end());
  traj.trace_error.resize(times.size());
  traj.observables.assign(options.observables.size(), std::vector<cplx>(times.size()));

  auto observe = [&](std::size_t i, double t, const DenseMatrix& y) {
    double trace_err = 0.0;
    const DenseMatrix rho =
        normalized_output(vectorized ? unvectorize(y.col(0), d) : y, trace_err);
    if (trace_err > options.max_trace_drift) {
      throw Error(Errc::accuracy, "trace drifted by " + format_number(trace_err) +
                                      " at t = " + format_number(t));
    }
    traj.trace_error[i] = trace_err;
    for (std::size_t k = 0; k < options.observables.size(); ++k) {
      traj.observables[k][i] = expectation(rho, options.observables[k].matrix());
    }
    if (options.record_states) traj.states.emplace_back(spec, rho);
  };
  traj.stats = integrate_dopri5(rhs, y0, times, options.tol, observe);
  return traj;
}

}  // namespace detail

/// Integrates the master equation of `model` from rho0, in matrix form.
inline Trajectory evolve(const ModelSpec& model, const QState& rho0, std::span<const double> times,
                         const EvolveOptions& options = {}) {
  require_same_spec(model.spec, rho0.spec(), "evolve");
  const Generator gen(model);
  auto rhs = [&gen](const DenseMatrix& y, DenseMatrix& out) { gen.apply(y, out); };
  return detail::run_evolution(rhs, model.spec, rho0.matrix(), times, options, false);
}

/// Integrates d vec(rho)/dt = L vec(rho) with the assembled superoperator.
inline Trajectory evolve(const Liouvillian& liouvillian, const QState& rho0,
                         std::span<const double> times, const EvolveOptions& options = {}) {
  require_same_spec(liouvillian.spec, rho0.spec(), "evolve");
  auto rhs = [&liouvillian](const DenseMatrix& y, DenseMatrix& out) {
    out.noalias() = liouvillian.matrix * y;
  };
  DenseMatrix y0 = vectorize(rho0.matrix());
  return detail::run_evolution(rhs, liouvillian.spec, y0, times, options, true);
}

struct SteadyStateResult {
  QState state;
  /// max |L vec(rho)| of the returned state.
  double residual = 0.0;
};

/// Solves L vec(rho) = 0 with the first (redundant) row of L replaced by the
/// trace functional, by sparse LU (UMFPACK).
inline SteadyStateResult steady_state_with_residual(const Liouvillian& liouvillian) {
  const auto d = liouvillian.hilbert_dim();
  const auto n = d * d;
  std::vector<Eigen::Triplet<cplx>> entries;
  entries.reserve(static_cast<std::size_t>(liouvillian.matrix.nonZeros() + d));
  for (int col = 0; col < liouvillian.matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(liouvillian.matrix, col); it; ++it) {
      if (it.row() != 0) entries.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (Eigen::Index i = 0; i < d; ++i) entries.emplace_back(0, i * (d + 1), 1.0);
  SparseMatrix system(n, n);
  system.setFromTriplets(entries.begin(), entries.end());
  system.makeCompressed();

  Eigen::UmfPackLU<SparseMatrix> lu;
  lu.compute(system);
  if (lu.info() != Eigen::Success) {
    throw Error(Errc::non_unique_steady_state, "trace-constrained Liouvillian is singular");
  }
  DenseVector rhs = DenseVector::Zero(n);
  rhs(0) = 1.0;
  DenseVector x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) {
    throw Error(Errc::non_unique_steady_state, "steady-state solve failed");
  }

  DenseMatrix rho = unvectorize(x, d);
  rho = (0.5 * (rho + rho.adjoint())).eval();
  rho /= rho.trace().real();
  const double scale = std::max(
      1.0, Eigen::Map<const DenseVector>(liouvillian.matrix.valuePtr(), liouvillian.matrix.nonZeros())
               .cwiseAbs()
               .maxCoeff());
  const double residual = (liouvillian.matrix * vectorize(rho)).cwiseAbs().maxCoeff();
  if (!(residual < 1e-6 * scale)) {
    throw Error(Errc::non_unique_steady_state,
                "steady-state residual " + format_number(residual) +
                    " indicates a degenerate null space");
  }
  try {
    return {QState(liouvillian.spec, std::move(rho)), residual};
  } catch (const Error& e) {
    if (e.code() == Errc::truncation_too_small) {
      throw Error(Errc::truncation_too_small,
                  std::string("steady state is indefinite; enlarge the Fock cutoffs ") +
                      liouvillian.spec.str() + " (" + e.what() + ")");
    }
    throw;
  }
}

inline QState steady_state(const Liouvillian& liouvillian) {
  return steady_state_with_residual(liouvillian).state;
}

}  // namespace sqzem
