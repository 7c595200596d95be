#include <gtest/gtest.h>

#include <cmath>

#include "sqzem/fock.hpp"

using namespace sqzem;

namespace {

DenseVector basis_ket(const TruncationSpec& spec, std::initializer_list<int> occ) {
  std::vector<int> o(occ);
  DenseVector k = DenseVector::Zero(spec.total_dim());
  k(spec.index(o)) = 1.0;
  return k;
}

}  // namespace

TEST(TruncationSpec, RejectsSmallCutoffs) {
  EXPECT_THROW(TruncationSpec({1}), Error);
  EXPECT_THROW(TruncationSpec({3, 1, 4}), Error);
  EXPECT_THROW(TruncationSpec(std::vector<int>{}), Error);
  EXPECT_EQ(TruncationSpec({3, 4, 5}).total_dim(), 60);
}

TEST(TruncationSpec, IndexRoundTrip) {
  const TruncationSpec spec({3, 4, 2});
  for (Eigen::Index i = 0; i < spec.total_dim(); ++i) {
    const auto occ = spec.occupations(i);
    EXPECT_EQ(spec.index(occ), i);
  }
  // Kronecker order: last mode fastest.
  EXPECT_EQ(spec.index(std::vector<int>{1, 2, 1}), (1 * 4 + 2) * 2 + 1);
  EXPECT_THROW(spec.index(std::vector<int>{3, 0, 0}), Error);
}

TEST(Annihilation, TwoLevelMatrix) {
  const DenseMatrix a = annihilation(2).dense();
  EXPECT_EQ(a(0, 1), cplx(1.0));
  EXPECT_EQ(a(0, 0), cplx(0.0));
  EXPECT_EQ(a(1, 0), cplx(0.0));
  EXPECT_EQ(a(1, 1), cplx(0.0));
  EXPECT_THROW(annihilation(1), Error);
}

TEST(Annihilation, MatrixElements) {
  const auto a = annihilation(6);
  EXPECT_NEAR(a.element(2, 3).real(), 1.7320508, 1e-7);
  for (int n = 1; n < 6; ++n) EXPECT_DOUBLE_EQ(a.element(n - 1, n).real(), std::sqrt(double(n)));
  EXPECT_EQ(a.matrix().nonZeros(), 5);
  const TruncationSpec spec({3});
  const DenseVector out = annihilation(3).matrix() * basis_ket(spec, {1});
  EXPECT_EQ(out, basis_ket(spec, {0}));
}

TEST(Embed, ActsOnDeclaredMode) {
  const TruncationSpec spec({2, 2});
  const auto a0 = embed(annihilation(2), 0, spec);
  const DenseVector out = a0.matrix() * basis_ket(spec, {1, 0});
  EXPECT_EQ(out, basis_ket(spec, {0, 0}));
  EXPECT_THROW(embed(annihilation(2), 2, spec), Error);
  EXPECT_THROW(embed(annihilation(3), 0, spec), Error);
}

TEST(Embed, IdentityAndDistinctModesCommute) {
  const TruncationSpec spec({3, 4, 2});
  for (int k = 0; k < 3; ++k) {
    const auto id = embed(QOperator::identity(TruncationSpec({spec.dim(k)})), k, spec);
    EXPECT_TRUE(id.dense().isIdentity());
  }
  const auto c = commutator(embed(annihilation(3), 0, spec), embed(creation(4), 1, spec));
  EXPECT_EQ(c.dense().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Algebra, CanonicalCommutatorAwayFromEdge) {
  const auto a = annihilation(7);
  const DenseMatrix c = commutator(a, a.adjoint()).dense();
  EXPECT_TRUE(c.topLeftCorner(6, 6).isIdentity(1e-14));
  // The truncation edge carries -(dim - 1).
  EXPECT_DOUBLE_EQ(c(6, 6).real(), -6.0);
}

TEST(Algebra, NumberOperatorAndAdjoint) {
  const auto a = annihilation(5);
  const DenseMatrix n = (a.adjoint() * a).dense();
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(n(k, k).real(), k, 1e-14);
  EXPECT_TRUE((n - DenseMatrix(n.diagonal().asDiagonal())).isZero());

  const TruncationSpec spec({3, 3});
  const auto x = embed(annihilation(3), 0, spec);
  const auto y = cplx(0.3, 0.7) * embed(creation(3), 1, spec) * x;
  EXPECT_EQ(((x + y).adjoint() - (x.adjoint() + y.adjoint())).dense().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((y.adjoint().adjoint() - y).dense().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Algebra, SpecMismatchIsAnError) {
  const auto x = embed(annihilation(3), 0, TruncationSpec({3, 3}));
  const auto y = embed(annihilation(3), 0, TruncationSpec({3, 4}));
  EXPECT_THROW(x + y, Error);
  EXPECT_THROW(x * y, Error);
}

TEST(QState, InvariantsEnforced) {
  const TruncationSpec spec({2});
  DenseMatrix rho = DenseMatrix::Zero(2, 2);
  rho(0, 0) = 0.5;
  EXPECT_THROW(QState(spec, rho), Error);  // trace
  rho(1, 1) = 0.5;
  rho(0, 1) = cplx(0.0, 0.1);
  EXPECT_THROW(QState(spec, rho), Error);  // Hermiticity
  rho(1, 0) = cplx(0.0, -0.1);
  EXPECT_NO_THROW(QState(spec, rho));
  DenseMatrix bad = DenseMatrix::Zero(2, 2);
  bad(0, 0) = 1.5;
  bad(1, 1) = -0.5;
  try {
    QState(spec, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::truncation_too_small);
  }
}

TEST(FockState, VacuumProjector) {
  const auto s = fock_state(TruncationSpec({3}), {0});
  DenseMatrix expected = DenseMatrix::Zero(3, 3);
  expected(0, 0) = 1.0;
  EXPECT_EQ(s.matrix(), expected);
  EXPECT_THROW(fock_state(TruncationSpec({3}), {3}), Error);
}

TEST(CoherentState, MeanOccupation) {
  const auto s = coherent_state(20, 1.0);
  // Poisson mean of the kept levels, summed directly.
  double mean = 0.0, weight = 0.0, p = std::exp(-1.0);
  for (int n = 0; n < 20; ++n) {
    mean += n * p;
    weight += p;
    p /= (n + 1);
  }
  EXPECT_NEAR(mean / weight, 1.0, 1e-6);
  EXPECT_NEAR(expectation(s, number(20)).real(), 1.0, 1e-6);
  EXPECT_NEAR(expectation(s, number(20)).real(), mean / weight, 1e-12);
  EXPECT_NEAR(expectation(coherent_state(20, 0.0), number(20)).real(), 0.0, 1e-15);
  EXPECT_THROW(coherent_state(8, 2.0), Error);
}

TEST(Expectation, NumberOperator) {
  const TruncationSpec spec({4});
  EXPECT_EQ(expectation(vacuum(spec), number(4)), cplx(0.0));
  EXPECT_NEAR(expectation(fock_state(spec, {2}), number(4)).real(), 2.0, 1e-15);
  const auto s = coherent_state(12, cplx(0.4, 0.3));
  EXPECT_LT(std::abs(expectation(s, number(12)).imag()), 1e-10);
  EXPECT_THROW(expectation(s, number(4)), Error);
}

TEST(ThermalState, MeanOccupation) {
  const auto s = thermal_state(60, 0.5);
  EXPECT_NEAR(expectation(s, number(60)).real(), 0.5, 1e-9);
}
