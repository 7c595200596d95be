#pragma once

// Hamiltonians and dissipators of the electromechanical system in the lab
// frame, the exact Bogoliubov frame, the rotating-wave effective frame and the
// reduced single-mode blockade model.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "sqzem/design.hpp"
#include "sqzem/error.hpp"
#include "sqzem/fock.hpp"

namespace sqzem {

/// Contributes rate * (A rho B^dagger - 1/2 B^dagger A rho - 1/2 rho B^dagger A).
/// Cross terms (A != B) must come with their partner (B, A) so the generator
/// stays Hermiticity preserving.
struct DissipatorTerm {
  QOperator left;
  QOperator right;
  double rate = 0.0;
  std::string left_name;
  std::string right_name;

  bool diagonal() const { return left_name == right_name; }
};

enum class Frame { lab, bogoliubov_exact, effective_rwa, reduced_blockade };

inline std::string to_string(Frame f) {
  switch (f) {
    case Frame::lab: return "lab";
    case Frame::bogoliubov_exact: return "bogoliubov-exact";
    case Frame::effective_rwa: return "effective-rwa";
    case Frame::reduced_blockade: return "reduced-blockade";
  }
  return "unknown";
}

struct ModelSpec {
  TruncationSpec spec;
  QOperator hamiltonian;
  std::vector<DissipatorTerm> dissipators;
  Frame frame = Frame::lab;
  /// Parameter record kept for manifests; never used to rebuild operators.
  std::map<std::string, double> parameters;

  static constexpr double kHermitianTol = 1e-12;

  void validate() const {
    require_same_spec(spec, hamiltonian.spec(), "model hamiltonian");
    const double defect = hermiticity_defect(hamiltonian.matrix());
    if (defect > kHermitianTol) {
      throw Error(Errc::model_invalid, "Hamiltonian not Hermitian (defect " +
                                           format_number(defect) + ")");
    }
    for (const auto& term : dissipators) {
      require_same_spec(spec, term.left.spec(), "dissipator left operator");
      require_same_spec(spec, term.right.spec(), "dissipator right operator");
      if (term.diagonal()) {
        if (term.rate < 0.0) {
          throw Error(Errc::model_invalid, "negative rate on " + term.left_name);
        }
        continue;
      }
      bool paired = false;
      for (const auto& other : dissipators) {
        if (other.left_name == term.right_name && other.right_name == term.left_name &&
            other.rate == term.rate) {
          paired = true;
          break;
        }
      }
      if (!paired) {
        throw Error(Errc::model_invalid,
                    "cross term " + term.left_name + "|" + term.right_name + " has no partner");
      }
    }
  }
};

struct ProbeParams {
  double epsilon = 0.0;
  double omega_p_rot = 0.0;
};

namespace detail {

inline void add_term(std::vector<DissipatorTerm>& terms, const QOperator& left,
                     const QOperator& right, double rate, std::string left_name,
                     std::string right_name) {
  if (rate == 0.0) return;
  terms.push_back({left, right, rate, std::move(left_name), std::move(right_name)});
}

inline void add_mechanical_terms(std::vector<DissipatorTerm>& terms, const ModeOperators& ops,
                                 int mode, double gamma_m, double n_th) {
  add_term(terms, ops.lower[mode], ops.lower[mode], gamma_m * (n_th + 1.0), "b", "b");
  add_term(terms, ops.raise[mode], ops.raise[mode], gamma_m * n_th, "b^dag", "b^dag");
}

inline void require_modes(const TruncationSpec& spec, int modes, const char* what) {
  if (spec.modes() != modes) {
    throw Error(Errc::invalid_parameter, std::string(what) + " needs " + std::to_string(modes) +
                                             " modes, got " + spec.str());
  }
}

inline void require_consistent_bath(const DerivedParams& d) {
  const auto expected = bath_moments(d.r0);
  if (std::abs(expected.M - d.M) > 1e-12 * std::max(1.0, expected.M) ||
      std::abs(expected.N - d.N) > 1e-12 * std::max(1.0, expected.N)) {
    throw Error(Errc::invalid_parameter, "bath moments M, N inconsistent with r0");
  }
}

}  // namespace detail

/// Lab-frame model: parametrically coupled cavities in a two-mode squeezed bath
/// plus the radiation-pressure coupled mechanics.
inline ModelSpec build_lab_model(const SystemParams& params, const DerivedParams& derived,
                                 const TruncationSpec& spec) {
  detail::require_modes(spec, 3, "lab model");
  detail::require_consistent_bath(derived);
  const ModeOperators ops(spec);
  const auto& a1 = ops.lower[0];
  const auto& a2 = ops.lower[1];
  const auto& b = ops.lower[2];
  const auto& a1d = ops.raise[0];
  const auto& a2d = ops.raise[1];
  const auto& bd = ops.raise[2];

  ModelSpec model;
  model.spec = spec;
  model.frame = Frame::lab;
  model.hamiltonian = params.delta1 * ops.n(0) + params.delta2 * ops.n(1) +
                      params.xi * (a1d * a2d + a1 * a2) + params.omega_m * ops.n(2) +
                      params.g * (ops.n(0) * (bd + b));

  const double kappa = params.kappa;
  auto& terms = model.dissipators;
  detail::add_term(terms, a1, a1, kappa * (derived.N + 1.0), "a1", "a1");
  detail::add_term(terms, a2, a2, kappa * (derived.N + 1.0), "a2", "a2");
  detail::add_term(terms, a1d, a1d, kappa * derived.N, "a1^dag", "a1^dag");
  detail::add_term(terms, a2d, a2d, kappa * derived.N, "a2^dag", "a2^dag");
  // kappa M (a1 rho a2 + a2 rho a1 - a1 a2 rho - rho a1 a2 + H.c.)
  const double km = kappa * derived.M;
  detail::add_term(terms, a1, a2d, km, "a1", "a2^dag");
  detail::add_term(terms, a2d, a1, km, "a2^dag", "a1");
  detail::add_term(terms, a2, a1d, km, "a2", "a1^dag");
  detail::add_term(terms, a1d, a2, km, "a1^dag", "a2");
  detail::add_mechanical_terms(terms, ops, 2, params.gamma_m, params.n_th);

  model.parameters = {{"delta1", params.delta1}, {"delta2", params.delta2}, {"xi", params.xi},
                      {"omega_m", params.omega_m}, {"g", params.g},         {"kappa", kappa},
                      {"gamma_m", params.gamma_m}, {"n_th", params.n_th},   {"r0", derived.r0},
                      {"M", derived.M},           {"N", derived.N}};
  model.validate();
  return model;
}

struct BogoliubovPair {
  QOperator A1;
  QOperator A2;
};

/// A1 = cosh r0 a1 + sinh r0 a2^dag, A2 = cosh r0 a2 + sinh r0 a1^dag on the lab Fock basis.
inline BogoliubovPair bogoliubov_operators(double r0, const TruncationSpec& spec) {
  if (spec.modes() < 2) {
    throw Error(Errc::spec_mismatch, "Bogoliubov modes need both cavities, got " + spec.str());
  }
  const auto a1 = embed(annihilation(spec.dim(0)), 0, spec);
  const auto a2 = embed(annihilation(spec.dim(1)), 1, spec);
  const double c = std::cosh(r0);
  const double s = std::sinh(r0);
  return {c * a1 + s * a2.adjoint(), c * a2 + s * a1.adjoint()};
}

/// Ket annihilated by A1 and A2 (two-mode squeezed vacuum of the cavities,
/// sum_n (-tanh r0)^n |n, n>), other modes in vacuum. Renormalized after
/// truncation.
inline DenseVector bogoliubov_vacuum_ket(double r0, const TruncationSpec& spec) {
  if (spec.modes() < 2) {
    throw Error(Errc::spec_mismatch, "Bogoliubov vacuum needs both cavities, got " + spec.str());
  }
  DenseVector ket = DenseVector::Zero(spec.total_dim());
  const double lambda = -std::tanh(r0);
  std::vector<int> occ(spec.modes(), 0);
  for (int n = 0; n < std::min(spec.dim(0), spec.dim(1)); ++n) {
    occ[0] = occ[1] = n;
    ket(spec.index(occ)) = std::pow(lambda, n);
  }
  return ket / ket.norm();
}

/// The lab model rewritten in Bogoliubov operators, still on the lab Fock
/// basis. Generates the same dynamics as build_lab_model away from the
/// truncation edge.
inline ModelSpec build_bogoliubov_exact_model(const SystemParams& params,
                                              const DerivedParams& derived,
                                              const TruncationSpec& spec) {
  detail::require_modes(spec, 3, "Bogoliubov model");
  detail::require_consistent_bath(derived);
  const ModeOperators ops(spec);
  const auto [A1, A2] = bogoliubov_operators(derived.r0, spec);
  const auto A1d = A1.adjoint();
  const auto A2d = A2.adjoint();
  const auto x = ops.raise[2] + ops.lower[2];
  const double c = std::cosh(derived.r0);
  const double s = std::sinh(derived.r0);

  ModelSpec model;
  model.spec = spec;
  model.frame = Frame::bogoliubov_exact;
  // A2 A2^dag is kept in this order; it is not normal ordered.
  const auto cavity_force = (c * c) * (A1d * A1) + (s * s) * (A2 * A2d) -
                            (s * c) * (A1d * A2d + A1 * A2);
  model.hamiltonian = derived.omega1 * (A1d * A1) + derived.omega2 * (A2d * A2) +
                      params.omega_m * ops.n(2) + params.g * (x * cavity_force);
  detail::add_term(model.dissipators, A1, A1, params.kappa, "A1", "A1");
  detail::add_term(model.dissipators, A2, A2, params.kappa, "A2", "A2");
  detail::add_mechanical_terms(model.dissipators, ops, 2, params.gamma_m, params.n_th);

  model.parameters = {{"omega1", derived.omega1}, {"omega2", derived.omega2},
                      {"omega_m", params.omega_m}, {"g", params.g},
                      {"kappa", params.kappa},     {"gamma_m", params.gamma_m},
                      {"n_th", params.n_th},       {"r0", derived.r0}};
  model.validate();
  return model;
}

/// Rotating-wave model: the Bogoliubov modes are primitive modes 0 and 1 of
/// `spec` and only the number-conserving radiation-pressure terms remain.
inline ModelSpec build_effective_model(const DerivedParams& derived, double omega_m, double kappa,
                                       double gamma_m, double n_th, const TruncationSpec& spec) {
  detail::require_modes(spec, 3, "effective model");
  const ModeOperators ops(spec);
  const auto x = ops.raise[2] + ops.lower[2];
  ModelSpec model;
  model.spec = spec;
  model.frame = Frame::effective_rwa;
  model.hamiltonian = derived.omega1 * ops.n(0) + derived.omega2 * ops.n(1) +
                      omega_m * ops.n(2) + derived.g1 * (x * ops.n(0)) +
                      derived.g2 * (x * ops.n(1));
  detail::add_term(model.dissipators, ops.lower[0], ops.lower[0], kappa, "A1", "A1");
  detail::add_term(model.dissipators, ops.lower[1], ops.lower[1], kappa, "A2", "A2");
  detail::add_mechanical_terms(model.dissipators, ops, 2, gamma_m, n_th);
  model.parameters = {{"omega1", derived.omega1}, {"omega2", derived.omega2},
                      {"G1", derived.g1},         {"G2", derived.g2},
                      {"omega_m", omega_m},       {"kappa", kappa},
                      {"gamma_m", gamma_m},       {"n_th", n_th},
                      {"rwa_ratio", derived.rwa_ratio}};
  model.validate();
  return model;
}

/// First Bogoliubov mode with the mechanics and a weak probe, in the frame
/// rotating at the probe frequency.
///
/// Detuning axis: delta0 is the probe offset from the mode, so the mode term
/// is -delta0 A^dag A. With this sign the zero-phonon line sits at
/// delta0 = -G1^2 / omega_m and the phonon sidebands at +n omega_m from it.
inline ModelSpec build_reduced_blockade_model(double g1, double delta0, double omega_m,
                                              double kappa, double gamma_m, double n_th,
                                              double epsilon_eff, const TruncationSpec& spec) {
  detail::require_modes(spec, 2, "blockade model");
  if (epsilon_eff < 0.0) throw Error(Errc::invalid_parameter, "epsilon_eff must be >= 0");
  const ModeOperators ops(spec);
  const auto& A = ops.lower[0];
  const auto& Ad = ops.raise[0];
  const auto x = ops.raise[1] + ops.lower[1];
  ModelSpec model;
  model.spec = spec;
  model.frame = Frame::reduced_blockade;
  model.hamiltonian = (-delta0) * ops.n(0) + omega_m * ops.n(1) + g1 * (x * ops.n(0)) +
                      epsilon_eff * (A + Ad);
  detail::add_term(model.dissipators, A, A, kappa, "A1", "A1");
  detail::add_mechanical_terms(model.dissipators, ops, 1, gamma_m, n_th);
  model.parameters = {{"G1", g1},           {"delta0", delta0},   {"omega_m", omega_m},
                      {"kappa", kappa},     {"gamma_m", gamma_m}, {"n_th", n_th},
                      {"epsilon_eff", epsilon_eff}};
  model.validate();
  return model;
}

/// Probe coupling in the Bogoliubov representation, with modes 0 and 1 of
/// `spec` the Bogoliubov modes. Returns the operator P such that the probe
/// Hamiltonian is P e^{i w't} + P^dag e^{-i w't} (w' the probe frequency in
/// the half-drive frame):
///   full:  P = E (cosh r0 A1 - sinh r0 A2^dag)
///   rwa:   P = E cosh r0 A1
/// In the frame rotating with the probe the rwa form becomes the static term
/// P + P^dag.
inline QOperator build_probe_term(const ProbeParams& probe, double r0, const TruncationSpec& spec,
                                  bool rwa) {
  if (probe.epsilon < 0.0) throw Error(Errc::invalid_parameter, "epsilon must be >= 0");
  if (!rwa && spec.modes() < 2) {
    throw Error(Errc::spec_mismatch, "full probe term needs both Bogoliubov modes");
  }
  const auto A1 = embed(annihilation(spec.dim(0)), 0, spec);
  QOperator term = (probe.epsilon * std::cosh(r0)) * A1;
  if (!rwa) {
    const auto A2d = embed(creation(spec.dim(1)), 1, spec);
    term = term - (probe.epsilon * std::sinh(r0)) * A2d;
  }
  return term;
}

}  // namespace sqzem
