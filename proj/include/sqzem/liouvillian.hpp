#pragma once

// Superoperator and matrix-form views of the master equation.
//
// Vectorization is column stacking: vec(rho)[j * d + i] = rho(i, j), so that
// vec(A rho B) = (B^T kron A) vec(rho).

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "sqzem/fock.hpp"
#include "sqzem/model.hpp"

namespace sqzem {

struct Liouvillian {
  TruncationSpec spec;
  SparseMatrix matrix;

  Eigen::Index hilbert_dim() const { return spec.total_dim(); }
};

inline DenseVector vectorize(const DenseMatrix& rho) {
  return Eigen::Map<const DenseVector>(rho.data(), rho.size());
}

inline DenseMatrix unvectorize(const DenseVector& v, Eigen::Index d) {
  return Eigen::Map<const DenseMatrix>(v.data(), d, d);
}

inline Liouvillian build_liouvillian(const ModelSpec& model) {
  model.validate();
  const auto d = model.spec.total_dim();
  SparseMatrix id(d, d);
  id.setIdentity();
  const SparseMatrix& h = model.hamiltonian.matrix();
  const SparseMatrix h_t = h.transpose();

  SparseMatrix left = Eigen::kroneckerProduct(id, h);
  SparseMatrix right = Eigen::kroneckerProduct(h_t, id);
  SparseMatrix l = -kI * (left - right);

  for (const auto& term : model.dissipators) {
    const SparseMatrix& a = term.left.matrix();
    const SparseMatrix& b = term.right.matrix();
    const SparseMatrix bda = b.adjoint() * a;
    const SparseMatrix bda_t = bda.transpose();
    const SparseMatrix b_conj = b.conjugate();
    SparseMatrix jump = Eigen::kroneckerProduct(b_conj, a);
    SparseMatrix anti_left = Eigen::kroneckerProduct(id, bda);
    SparseMatrix anti_right = Eigen::kroneckerProduct(bda_t, id);
    l += cplx(term.rate) * (jump - 0.5 * anti_left - 0.5 * anti_right);
  }
  l.prune(cplx(0.0));
  l.makeCompressed();
  return {model.spec, std::move(l)};
}

/// Master equation in matrix form:
///   drho/dt = -i (K rho - rho K^dagger) + sum_k w_k L_k rho L_k^dagger,
///   K = H - i/2 sum_k w_k L_k^dagger L_k.
/// The jumps L_k diagonalize the coefficient matrix C_ij of the terms
/// rate * O_i rho O_j^dagger, one block per set of operators linked by cross
/// terms. For a pure squeezed bath each cavity block has rank one, so the
/// four lab-frame terms per mode collapse into a single jump.
/// apply() keeps no scratch state and may be called concurrently.
class Generator {
 public:
  explicit Generator(const ModelSpec& model) : spec_(model.spec) {
    model.validate();
    std::vector<const QOperator*> ops;
    std::map<std::string, int> slots;
    auto slot = [&](const QOperator& op, const std::string& name) {
      if (!name.empty()) {
        if (auto it = slots.find(name); it != slots.end()) return it->second;
        slots[name] = static_cast<int>(ops.size());
      }
      ops.push_back(&op);
      return static_cast<int>(ops.size()) - 1;
    };
    struct Entry {
      int i, j;
      double rate;
    };
    std::vector<Entry> entries;
    for (const auto& term : model.dissipators) {
      const int i = slot(term.left, term.left_name);
      const int j = slot(term.right, term.right_name);
      entries.push_back({i, j, term.rate});
    }
    const int n = static_cast<int>(ops.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    auto root = [&](int i) {
      while (parent[i] != i) i = parent[i] = parent[parent[i]];
      return i;
    };
    for (const auto& e : entries) {
      c(e.i, e.j) += e.rate;
      parent[root(e.i)] = root(e.j);
    }

    SparseMatrix k = model.hamiltonian.matrix();
    const double scale = c.cwiseAbs().maxCoeff() + 1e-300;
    for (int r = 0; r < n; ++r) {
      if (root(r) != r) continue;
      std::vector<int> block;
      for (int i = 0; i < n; ++i) {
        if (root(i) == r) block.push_back(i);
      }
      const int m = static_cast<int>(block.size());
      Eigen::MatrixXd sub(m, m);
      for (int p = 0; p < m; ++p) {
        for (int q = 0; q < m; ++q) sub(p, q) = c(block[p], block[q]);
      }
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sub);
      for (int e = 0; e < m; ++e) {
        const double w = eig.eigenvalues()(e);
        if (std::abs(w) <= 1e-14 * scale) continue;
        SparseMatrix l(dim(), dim());
        for (int p = 0; p < m; ++p) {
          const double u = eig.eigenvectors()(p, e);
          if (u != 0.0) l += cplx(u) * ops[block[p]]->matrix();
        }
        l.prune(cplx(0.0));
        const SparseMatrix l_dag = l.adjoint();
        k -= (0.5 * w) * kI * SparseMatrix(l_dag * l);
        jumps_.push_back({Csr(l), w});
      }
    }
    k.prune(cplx(0.0));
    k_ = Csr(k);
  }

  const TruncationSpec& spec() const { return spec_; }
  Eigen::Index dim() const { return spec_.total_dim(); }
  std::size_t jump_count() const { return jumps_.size(); }

  void apply(const DenseMatrix& rho, DenseMatrix& out) const {
    const Eigen::Index d = rho.rows();
    out.resize(d, d);
    const Csr& k = k_;
    // One output column at a time: every term reads only a few nearby columns
    // of rho, so the working set stays in cache.
    for (Eigen::Index j = 0; j < d; ++j) {
      cplx* o = out.col(j).data();
      const cplx* rj = rho.col(j).data();
      // -i K rho
      for (Eigen::Index i = 0; i < d; ++i) {
        cplx acc = 0.0;
        for (int p = k.outer[i]; p < k.outer[i + 1]; ++p) acc += k.value[p] * rj[k.inner[p]];
        o[i] = cplx(acc.imag(), -acc.real());
      }
      // +i rho K^dagger: (rho K^dagger)(:, j) = sum_l conj(K(j, l)) rho(:, l)
      for (int p = k.outer[j]; p < k.outer[j + 1]; ++p) {
        const cplx s = kI * std::conj(k.value[p]);
        const cplx* rl = rho.col(k.inner[p]).data();
        for (Eigen::Index i = 0; i < d; ++i) o[i] += s * rl[i];
      }
      // w L rho L^dagger: column j is sum_l w conj(L(j, l)) L rho(:, l)
      for (const auto& jump : jumps_) {
        const Csr& l = jump.op;
        for (int q = l.outer[j]; q < l.outer[j + 1]; ++q) {
          const cplx s = jump.weight * std::conj(l.value[q]);
          const cplx* rl = rho.col(l.inner[q]).data();
          for (Eigen::Index i = 0; i < d; ++i) {
            cplx acc = 0.0;
            for (int p = l.outer[i]; p < l.outer[i + 1]; ++p) acc += l.value[p] * rl[l.inner[p]];
            o[i] += s * acc;
          }
        }
      }
    }
  }

  DenseMatrix operator()(const DenseMatrix& rho) const {
    DenseMatrix out(rho.rows(), rho.cols());
    apply(rho, out);
    return out;
  }

 private:
  // Compressed rows, copied out of Eigen for tight inner loops.
  struct Csr {
    std::vector<int> outer;
    std::vector<int> inner;
    std::vector<cplx> value;

    Csr() = default;
    explicit Csr(const SparseMatrix& m) {
      Eigen::SparseMatrix<cplx, Eigen::RowMajor> r = m;
      r.makeCompressed();
      outer.assign(r.outerIndexPtr(), r.outerIndexPtr() + r.outerSize() + 1);
      inner.assign(r.innerIndexPtr(), r.innerIndexPtr() + r.nonZeros());
      value.assign(r.valuePtr(), r.valuePtr() + r.nonZeros());
    }
  };
  struct Jump {
    Csr op;
    double weight;
  };
  TruncationSpec spec_;
  Csr k_;
  std::vector<Jump> jumps_;
};

/// Largest |sum_i L[(i,i), col]| over columns: how far the generator is from
/// annihilating the trace.
inline double trace_functional_defect(const Liouvillian& l) {
  const auto d = l.hilbert_dim();
  double worst = 0.0;
  for (int col = 0; col < l.matrix.outerSize(); ++col) {
    cplx acc = 0.0;
    for (SparseMatrix::InnerIterator it(l.matrix, col); it; ++it) {
      if (it.row() % (d + 1) == 0) acc += it.value();
    }
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

}  // namespace sqzem
