#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cisim/error.hpp"
#include "cisim/phase_space.hpp"
#include "cisim/quantum_core.hpp"

using namespace cisim;

namespace {

Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

}  // namespace

TEST(Ladder, SmallestSize) {
  Mat a = annihilation(2).matrix();
  Mat expected(2, 2);
  expected << 0, 1, 0, 0;
  EXPECT_LT((a - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Ladder, Dim3Entries) {
  Mat a = annihilation(3).matrix();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double want = 0.0;
      if (i == 0 && j == 1) want = 1.0;
      if (i == 1 && j == 2) want = std::sqrt(2.0);
      EXPECT_NEAR(std::abs(a(i, j) - want), 0.0, 1e-15) << i << "," << j;
    }
}

TEST(Ladder, CanonicalCommutatorUpToTruncationEdge) {
  const int n = 20;
  Mat c = commutator(annihilation(n).matrix(), creation(n).matrix());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const cplx want = (i == j) ? (i == n - 1 ? cplx(1.0 - n) : cplx(1.0)) : cplx(0.0);
      EXPECT_NEAR(std::abs(c(i, j) - want), 0.0, 1e-12);
    }
}

TEST(Ladder, RejectsBadDimension) { EXPECT_THROW(annihilation(0), InvalidDimension); }

TEST(Pauli, XIsDiagonalInElectronicBasis) {
  Mat x = pauli(Axis::X).matrix();
  EXPECT_NEAR(std::abs(x(0, 0) - 1.0), 0, 1e-15);
  EXPECT_NEAR(std::abs(x(1, 1) + 1.0), 0, 1e-15);
  EXPECT_NEAR(std::abs(x(0, 1)), 0, 1e-15);
}

TEST(Pauli, YMapsPlusToMinus) {
  Vec out = pauli(Axis::Y).matrix() * qubit_plus().vector();
  EXPECT_LT((out - qubit_minus().vector()).norm(), 1e-15);
}

TEST(Pauli, CommutatorGivesZ) {
  Mat c = commutator(pauli(Axis::X).matrix(), pauli(Axis::Y).matrix());
  EXPECT_LT((c - cplx(0, 2) * pauli(Axis::Z).matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Embed, QubitOperatorIsBlockDiagonalOverFock) {
  SubsystemLayout l({2, 3});
  Mat m = embed(pauli(Axis::X), 0, l).matrix();
  ASSERT_EQ(m.rows(), 6);
  // index = q * 3 + n: sigma_x only touches equal Fock indices
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (i % 3 != j % 3) EXPECT_EQ(m(i, j), cplx(0));
  EXPECT_EQ(m(0, 0), cplx(1));
  EXPECT_EQ(m(3, 3), cplx(-1));
}

TEST(Embed, DisjointSlotsCommute) {
  SubsystemLayout l({2, 3});
  Mat c = commutator(embed(number(3), 1, l).matrix(), embed(pauli(Axis::Z), 0, l).matrix());
  EXPECT_LT(c.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Embed, NumberTrace) {
  SubsystemLayout l({2, 5});
  EXPECT_NEAR(embed(number(5), 1, l).matrix().trace().real(), 20.0, 1e-12);
}

TEST(Embed, ShapeMismatchThrows) {
  SubsystemLayout l({2, 3});
  EXPECT_THROW(embed(number(4), 1, l), Error);
}

TEST(Coherent, ZeroIsVacuum) {
  Vec v = coherent_state(0.0, 10).vector();
  EXPECT_NEAR(std::abs(v(0)), 1.0, 1e-15);
  EXPECT_NEAR(v.tail(9).norm(), 0.0, 1e-15);
}

TEST(Coherent, MeanPhotonNumber) {
  const double a = 1.26;
  QuantumState s = coherent_state(a, 30);
  EXPECT_NEAR(expectation(s, number(30)).real(), 1.5876, 1e-6);
  // independent series: sum_n n e^{-|a|^2} |a|^{2n}/n!
  double series = 0.0, term = std::exp(-a * a);
  for (int n = 1; n < 60; ++n) {
    term *= a * a / n;
    series += n * term;
  }
  EXPECT_NEAR(series, a * a, 1e-12);
}

TEST(Coherent, OverlapClosedForm) {
  const cplx a(0.7, -0.3), b(-0.4, 0.5);
  const int d = 40;
  const cplx ov = coherent_state(b, d).vector().dot(coherent_state(a, d).vector());
  EXPECT_NEAR(std::norm(ov), std::exp(-std::norm(a - b)), 1e-12);
}

TEST(Coherent, DisplacementAgreesWithSeries) {
  const cplx a(1.1, 0.4);
  const int d = 40;
  EXPECT_LT((coherent_state(a, d).vector() - coherent_state_by_displacement(a, d).vector()).norm(), 1e-9);
}

TEST(Coherent, TruncationRuleEnforced) {
  EXPECT_EQ(min_coherent_dim(0.0), 5);
  EXPECT_THROW(coherent_state(2.0, 6), TruncationError);
}

TEST(PartialTrace, ProductStateKeepsFactor) {
  Vec q(2);
  q << std::sqrt(0.3), cplx(0, std::sqrt(0.7));
  QuantumState qs = QuantumState::pure(SubsystemLayout({2}), q);
  QuantumState s = tensor(qs, coherent_state(0.5, 8));
  Mat r = partial_trace(s, {0}).density();
  EXPECT_LT((r - qs.density()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PartialTrace, BellLikeGivesMaximallyMixed) {
  SubsystemLayout l({2, 2});
  Vec v = Vec::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);  // |+,0> + |-,1>
  Mat r = partial_trace(QuantumState::pure(l, v), {0}).density();
  EXPECT_LT((r - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PartialTrace, KeepAllIsIdentity) {
  QuantumState s = tensor(qubit_minus(), coherent_state(cplx(0.3, 0.2), 8));
  EXPECT_LT((partial_trace(s, {0, 1}).density() - s.density()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Expectation, Basics) {
  EXPECT_NEAR(std::abs(expectation(basis_state(6, 0), number(6))), 0.0, 1e-15);
  const cplx a(0.8, -0.6);
  const int d = 30;
  OperatorMatrix x = annihilation(d) + creation(d);
  EXPECT_NEAR(expectation(coherent_state(a, d), x).real(), 2 * a.real(), 1e-10);
  EXPECT_NEAR(expectation(qubit_minus(), pauli(Axis::X)).real(), -1.0, 1e-15);
}

TEST(Expectation, LayoutMismatchThrows) {
  EXPECT_THROW(expectation(basis_state(4, 0), number(5)), Error);
}

TEST(State, MixedStateValidation) {
  Mat bad = Mat::Identity(2, 2);
  EXPECT_THROW(QuantumState::mixed(SubsystemLayout({2}), bad), Error);
  Mat neg(2, 2);
  neg << 1.2, 0, 0, -0.2;
  EXPECT_THROW(QuantumState::mixed(SubsystemLayout({2}), neg), Error);
}

TEST(State, Purity) {
  EXPECT_NEAR(purity(coherent_state(0.5, 10)), 1.0, 1e-12);
  Mat half = 0.5 * Mat::Identity(2, 2);
  EXPECT_NEAR(purity(QuantumState::mixed(SubsystemLayout({2}), half)), 0.5, 1e-15);
}

TEST(Wigner, VacuumPeak) {
  auto w = wigner(basis_state(10, 0), {cplx(0.0)});
  EXPECT_NEAR(w[0], 2.0 / std::numbers::pi, 1e-12);
}

TEST(Wigner, CoherentClosedForm) {
  const cplx b(0.9, -0.4);
  QuantumState s = coherent_state(b, 40);
  std::vector<cplx> pts{b, b + cplx(0.3, 0.1), cplx(-0.5, 0.2)};
  auto w = wigner(s, pts);
  for (std::size_t i = 0; i < pts.size(); ++i)
    EXPECT_NEAR(w[i], 2.0 / std::numbers::pi * std::exp(-2.0 * std::norm(pts[i] - b)), 1e-8);
}

TEST(Wigner, MixtureIsNonNegative) {
  const int d = 40;
  Mat rho = 0.5 * (coherent_state(1.5, d).density() + coherent_state(-1.5, d).density());
  QuantumState s = QuantumState::mixed(SubsystemLayout({d}), rho);
  WignerGrid g = wigner_grid(s, linspace(-3.5, 3.5, 41), linspace(-2.5, 2.5, 31));
  EXPECT_GE(g.values.minCoeff(), -1e-9);
  EXPECT_NEAR(wigner_integral(g), 1.0, 2e-3);
  // the two lobes sit at +-1.5 on the real axis
  EXPECT_GT(wigner(s, {cplx(1.5)})[0], 0.3);
  EXPECT_GT(wigner(s, {cplx(-1.5)})[0], 0.3);
}

TEST(Wigner, MultiModeStateRejected) {
  EXPECT_THROW(wigner(tensor(qubit_minus(), basis_state(4, 0)), {cplx(0.0)}), Error);
}
