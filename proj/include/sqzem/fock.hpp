#pragma once

// Truncated bosonic operators and states on composite Fock spaces.
//
// Mode order is fixed: mode 0 is the first cavity (or first Bogoliubov) mode,
// mode 1 the second, mode 2 the mechanics. Reduced models drop trailing modes.
// Composite basis index follows the Kronecker order, so mode 0 is the most
// significant digit: |n0, n1, n2> -> (n0 * d1 + n1) * d2 + n2.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sqzem/error.hpp"

namespace sqzem {

using cplx = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<cplx>;
using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

class TruncationSpec {
 public:
  TruncationSpec() = default;

  explicit TruncationSpec(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) {
      throw Error(Errc::invalid_truncation, "at least one mode is required");
    }
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      if (dims_[k] < 2) {
        throw Error(Errc::invalid_truncation, "mode " + std::to_string(k) + " has cutoff " +
                                                  std::to_string(dims_[k]) + " (< 2)");
      }
    }
  }

  std::span<const int> dims() const { return dims_; }
  int modes() const { return static_cast<int>(dims_.size()); }
  int dim(int mode) const { return dims_.at(static_cast<std::size_t>(mode)); }

  Eigen::Index total_dim() const {
    return std::accumulate(dims_.begin(), dims_.end(), Eigen::Index{1},
                           [](Eigen::Index acc, int d) { return acc * d; });
  }

  Eigen::Index index(std::span<const int> occupations) const {
    if (occupations.size() != dims_.size()) {
      throw Error(Errc::spec_mismatch, "occupation list length differs from mode count");
    }
    Eigen::Index idx = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      if (occupations[k] < 0 || occupations[k] >= dims_[k]) {
        throw Error(Errc::invalid_truncation,
                    "occupation " + std::to_string(occupations[k]) + " of mode " +
                        std::to_string(k) + " exceeds cutoff " + std::to_string(dims_[k]));
      }
      idx = idx * dims_[k] + occupations[k];
    }
    return idx;
  }

  std::vector<int> occupations(Eigen::Index idx) const {
    std::vector<int> occ(dims_.size());
    for (std::size_t k = dims_.size(); k-- > 0;) {
      occ[k] = static_cast<int>(idx % dims_[k]);
      idx /= dims_[k];
    }
    return occ;
  }

  std::string str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t k = 0; k < dims_.size(); ++k) os << (k ? "," : "") << dims_[k];
    os << ')';
    return os.str();
  }

  friend bool operator==(const TruncationSpec&, const TruncationSpec&) = default;

 private:
  std::vector<int> dims_;
};

inline void require_same_spec(const TruncationSpec& a, const TruncationSpec& b, const char* where) {
  if (!(a == b)) {
    throw Error(Errc::spec_mismatch, std::string(where) + ": " + a.str() + " vs " + b.str());
  }
}

/// Operator on a truncated composite space. Immutable; held sparse.
class QOperator {
 public:
  QOperator() = default;

  QOperator(TruncationSpec spec, SparseMatrix matrix)
      : spec_(std::move(spec)), matrix_(std::move(matrix)) {
    const auto n = spec_.total_dim();
    if (matrix_.rows() != n || matrix_.cols() != n) {
      throw Error(Errc::spec_mismatch, "matrix shape does not match truncation " + spec_.str());
    }
    matrix_.makeCompressed();
  }

  static QOperator identity(const TruncationSpec& spec) {
    SparseMatrix id(spec.total_dim(), spec.total_dim());
    id.setIdentity();
    return {spec, std::move(id)};
  }

  static QOperator zero(const TruncationSpec& spec) {
    return {spec, SparseMatrix(spec.total_dim(), spec.total_dim())};
  }

  const TruncationSpec& spec() const { return spec_; }
  const SparseMatrix& matrix() const { return matrix_; }
  DenseMatrix dense() const { return DenseMatrix(matrix_); }
  Eigen::Index dim() const { return matrix_.rows(); }

  cplx element(Eigen::Index row, Eigen::Index col) const { return matrix_.coeff(row, col); }

  QOperator adjoint() const { return {spec_, SparseMatrix(matrix_.adjoint())}; }

  friend QOperator operator+(const QOperator& x, const QOperator& y) {
    require_same_spec(x.spec_, y.spec_, "operator +");
    return {x.spec_, SparseMatrix(x.matrix_ + y.matrix_)};
  }
  friend QOperator operator-(const QOperator& x, const QOperator& y) {
    require_same_spec(x.spec_, y.spec_, "operator -");
    return {x.spec_, SparseMatrix(x.matrix_ - y.matrix_)};
  }
  friend QOperator operator*(const QOperator& x, const QOperator& y) {
    require_same_spec(x.spec_, y.spec_, "operator *");
    return {x.spec_, SparseMatrix(x.matrix_ * y.matrix_)};
  }
  friend QOperator operator*(cplx s, const QOperator& x) {
    return {x.spec_, SparseMatrix(s * x.matrix_)};
  }
  friend QOperator operator*(double s, const QOperator& x) { return cplx(s) * x; }
  friend QOperator operator-(const QOperator& x) { return -1.0 * x; }

 private:
  TruncationSpec spec_;
  SparseMatrix matrix_;
};

inline QOperator adjoint(const QOperator& x) { return x.adjoint(); }

inline QOperator commutator(const QOperator& x, const QOperator& y) { return x * y - y * x; }

/// Largest elementwise |X - X^dagger|.
inline double hermiticity_defect(const SparseMatrix& m) {
  SparseMatrix diff = m - SparseMatrix(m.adjoint());
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

inline QOperator annihilation(int dim) {
  TruncationSpec spec({dim});
  std::vector<Eigen::Triplet<cplx>> entries;
  for (int n = 1; n < dim; ++n) entries.emplace_back(n - 1, n, std::sqrt(double(n)));
  SparseMatrix a(dim, dim);
  a.setFromTriplets(entries.begin(), entries.end());
  return {spec, std::move(a)};
}

inline QOperator creation(int dim) { return annihilation(dim).adjoint(); }

inline QOperator number(int dim) {
  TruncationSpec spec({dim});
  SparseMatrix n(dim, dim);
  for (int k = 0; k < dim; ++k) n.insert(k, k) = double(k);
  return {spec, std::move(n)};
}

/// Places a single-mode operator at `mode` of `spec`: I x ... x op x ... x I.
inline QOperator embed(const QOperator& single_mode_op, int mode, const TruncationSpec& spec) {
  if (mode < 0 || mode >= spec.modes()) {
    throw Error(Errc::invalid_parameter, "mode index " + std::to_string(mode) +
                                             " out of range for " + spec.str());
  }
  if (single_mode_op.dim() != spec.dim(mode)) {
    throw Error(Errc::spec_mismatch, "single-mode operator of dimension " +
                                         std::to_string(single_mode_op.dim()) +
                                         " does not fit mode " + std::to_string(mode) +
                                         " of " + spec.str());
  }
  Eigen::Index left = 1;
  for (int k = 0; k < mode; ++k) left *= spec.dim(k);
  Eigen::Index right = 1;
  for (int k = mode + 1; k < spec.modes(); ++k) right *= spec.dim(k);

  SparseMatrix id_left(left, left);
  id_left.setIdentity();
  SparseMatrix id_right(right, right);
  id_right.setIdentity();
  SparseMatrix tmp = Eigen::kroneckerProduct(id_left, single_mode_op.matrix());
  SparseMatrix full = Eigen::kroneckerProduct(tmp, id_right);
  return {spec, std::move(full)};
}

/// Ladder operators of every mode of a spec, cached together for model builders.
struct ModeOperators {
  std::vector<QOperator> lower;  // a_k
  std::vector<QOperator> raise;  // a_k^dagger

  explicit ModeOperators(const TruncationSpec& spec) {
    for (int k = 0; k < spec.modes(); ++k) {
      lower.push_back(embed(annihilation(spec.dim(k)), k, spec));
      raise.push_back(lower.back().adjoint());
    }
  }
  QOperator n(int k) const { return raise[k] * lower[k]; }
};

/// Density matrix on a truncated space. Constructor enforces the state invariants.
class QState {
 public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kPositivityFloor = -1e-8;

  QState(TruncationSpec spec, DenseMatrix rho) : spec_(std::move(spec)), rho_(std::move(rho)) {
    const auto n = spec_.total_dim();
    if (rho_.rows() != n || rho_.cols() != n) {
      throw Error(Errc::spec_mismatch, "density matrix shape does not match " + spec_.str());
    }
    const double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > kHermitianTol) {
      throw Error(Errc::invalid_parameter, "density matrix not Hermitian (defect " +
                                               format_number(herm) + ")");
    }
    const double tr_err = std::abs(rho_.trace() - 1.0);
    if (tr_err > kTraceTol) {
      throw Error(Errc::invalid_parameter, "density matrix trace differs from 1 by " +
                                               format_number(tr_err));
    }
    min_eigenvalue_ = Eigen::SelfAdjointEigenSolver<DenseMatrix>(rho_, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
    if (min_eigenvalue_ < kPositivityFloor) {
      throw Error(Errc::truncation_too_small,
                  "density matrix has eigenvalue " + format_number(min_eigenvalue_));
    }
  }

  /// Projector onto a (normalized here) ket.
  static QState pure(const TruncationSpec& spec, const DenseVector& ket) {
    const double norm = ket.norm();
    if (norm == 0.0) throw Error(Errc::invalid_parameter, "zero ket");
    DenseVector psi = ket / norm;
    DenseMatrix rho = psi * psi.adjoint();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return {spec, std::move(rho)};
  }

  const TruncationSpec& spec() const { return spec_; }
  const DenseMatrix& matrix() const { return rho_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  TruncationSpec spec_;
  DenseMatrix rho_;
  double min_eigenvalue_ = 0.0;
};

inline QState fock_state(const TruncationSpec& spec, std::span<const int> occupations) {
  DenseVector ket = DenseVector::Zero(spec.total_dim());
  ket(spec.index(occupations)) = 1.0;
  return QState::pure(spec, ket);
}

inline QState fock_state(const TruncationSpec& spec, std::initializer_list<int> occupations) {
  std::vector<int> occ(occupations);
  return fock_state(spec, std::span<const int>(occ));
}

inline QState vacuum(const TruncationSpec& spec) {
  std::vector<int> occ(static_cast<std::size_t>(spec.modes()), 0);
  return fock_state(spec, std::span<const int>(occ));
}

/// Truncated, renormalized coherent state. Requires |alpha|^2 <= dim / 4 and a
/// discarded Poisson tail below 1e-6.
inline QState coherent_state(int dim, cplx alpha) {
  TruncationSpec spec({dim});
  const double mean = std::norm(alpha);
  DenseVector ket(dim);
  ket(0) = 1.0;
  for (int n = 1; n < dim; ++n) ket(n) = ket(n - 1) * alpha / std::sqrt(double(n));
  const double kept = std::exp(-mean) * ket.squaredNorm();
  if (mean > dim / 4.0 || 1.0 - kept > 1e-6) {
    throw Error(Errc::invalid_parameter, "|alpha|^2 = " + format_number(mean) +
                                             " too large for cutoff " + std::to_string(dim));
  }
  return QState::pure(spec, ket);
}

/// Truncated, renormalized Bose-Einstein state with mean occupation nbar.
inline QState thermal_state(int dim, double nbar) {
  if (nbar < 0.0) throw Error(Errc::invalid_parameter, "negative thermal occupation");
  TruncationSpec spec({dim});
  DenseMatrix rho = DenseMatrix::Zero(dim, dim);
  const double ratio = nbar / (1.0 + nbar);
  double p = 1.0;
  double total = 0.0;
  for (int n = 0; n < dim; ++n) {
    rho(n, n) = p;
    total += p;
    p *= ratio;
  }
  rho /= total;
  return {spec, std::move(rho)};
}

/// trace(rho X), using the sparsity of X.
inline cplx expectation(const DenseMatrix& rho, const SparseMatrix& op) {
  cplx acc = 0.0;
  for (int col = 0; col < op.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(op, col); it; ++it) acc += it.value() * rho(col, it.row());
  }
  return acc;
}

inline cplx expectation(const QState& state, const QOperator& op) {
  require_same_spec(state.spec(), op.spec(), "expectation");
  return expectation(state.matrix(), op.matrix());
}

}  // namespace sqzem
