#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "intersub/numerics.hpp"

using namespace intersub;

namespace {

// Taylor series with scaling and squaring, independent of any eigensolver.
CMatrix expm_series(const CMatrix& a) {
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.5) {
    norm /= 2.0;
    ++squarings;
  }
  const CMatrix scaled = a / std::pow(2.0, squarings);
  CMatrix term = CMatrix::Identity(a.rows(), a.cols());
  CMatrix sum = term;
  for (int k = 1; k < 40; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Eigh, Diagonal) {
  CMatrix m = CMatrix::Zero(3, 3);
  m(0, 0) = 3;
  m(1, 1) = 1;
  m(2, 2) = 2;
  const EigenSystem es = eigh(m);
  EXPECT_NEAR(es.eigenvalues(0), 1.0, 1e-15);
  EXPECT_NEAR(es.eigenvalues(1), 2.0, 1e-15);
  EXPECT_NEAR(es.eigenvalues(2), 3.0, 1e-15);
}

TEST(Eigh, PauliX) {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  const EigenSystem es = eigh(m);
  EXPECT_NEAR(es.eigenvalues(0), -1.0, 1e-15);
  EXPECT_NEAR(es.eigenvalues(1), 1.0, 1e-15);
}

TEST(Eigh, RejectsNonHermitian) {
  CMatrix m(2, 2);
  m << 0, 1, 0, 0;
  EXPECT_THROW(eigh(m), ValidationError);
  EXPECT_THROW(eigh(CMatrix::Zero(2, 3)), DimensionError);
}

TEST(Eigh, PhaseFixedAndDeterministic) {
  gen::Rng rng;
  const CMatrix m = rng.hermitian(9);
  const EigenSystem a = eigh(m);
  const EigenSystem b = eigh(m);
  EXPECT_EQ(max_abs(a.eigenvectors - b.eigenvectors), 0.0);
  for (Eigen::Index c = 0; c < 9; ++c) {
    const auto col = a.eigenvectors.col(c);
    Eigen::Index r = 0;
    while (std::abs(col(r)) <= 1e-8 * col.cwiseAbs().maxCoeff()) ++r;
    EXPECT_EQ(col(r).imag(), 0.0);
    EXPECT_GT(col(r).real(), 0.0);
  }
}

TEST(Eigh, ResidualsAndReconstruction) {
  gen::Rng rng;
  for (Eigen::Index n : {1, 2, 5, 17, 65, 128, 257}) {
    const CMatrix m = rng.hermitian(n);
    const EigenSystem es = eigh(m);
    const double scale = max_abs(m);
    for (Eigen::Index k = 0; k < n; ++k) {
      const CVector v = es.eigenvectors.col(k);
      EXPECT_LT((m * v - es.eigenvalues(k) * v).norm(), 1e-10 * std::max(1.0, scale * n));
      if (k > 0) {
        EXPECT_LE(es.eigenvalues(k - 1), es.eigenvalues(k));
      }
    }
    const CMatrix id = es.eigenvectors.adjoint() * es.eigenvectors;
    EXPECT_LT(max_abs(id - CMatrix::Identity(n, n)), 1e-10);
    const CMatrix back =
        es.eigenvectors * es.eigenvalues.cast<cplx>().asDiagonal() * es.eigenvectors.adjoint();
    EXPECT_LT(max_abs(back - m), 1e-10);
  }
}

TEST(Spin, HalfInteger) {
  EXPECT_EQ(Spin::from_j(1.5).twice_j, 3);
  EXPECT_THROW(Spin::from_j(0.3), DomainError);
  EXPECT_THROW(Spin::from_j(-1.0), DomainError);
  EXPECT_THROW(spin_operators(Spin{-1}), DomainError);
}

TEST(SpinOperators, Fundamental) {
  const SpinOperators ops = spin_operators(Spin{1});
  EXPECT_EQ(ops.jz(0, 0), cplx(0.5));
  EXPECT_EQ(ops.jz(1, 1), cplx(-0.5));
  EXPECT_EQ(ops.jy(0, 1), cplx(0.0, -0.5));
  EXPECT_EQ(ops.jy(1, 0), cplx(0.0, 0.5));
  const SpinOperators one = spin_operators(Spin{2});
  EXPECT_EQ(one.jz.diagonal().real(), Eigen::Vector3d(1, 0, -1));
}

TEST(SpinOperators, AlgebraCloses) {
  for (int tj = 0; tj <= 20; ++tj) {
    const SpinOperators ops = spin_operators(Spin{tj});
    const CMatrix jx = cplx(0, -1) * (ops.jy * ops.jz - ops.jz * ops.jy);
    // [J_z, J_x] = i J_y and J² = j(j+1) 𝕀.
    EXPECT_LT(max_abs(ops.jz * jx - jx * ops.jz - cplx(0, 1) * ops.jy), 1e-12);
    EXPECT_LT(max_abs(ops.jz * ops.jy - ops.jy * ops.jz + cplx(0, 1) * jx), 1e-12);
    const double j = 0.5 * tj;
    const CMatrix casimir = jx * jx + ops.jy * ops.jy + ops.jz * ops.jz;
    EXPECT_LT(max_abs(casimir - j * (j + 1) * CMatrix::Identity(tj + 1, tj + 1)), 1e-11);
  }
}

TEST(EulerRotation, Identity) {
  for (int tj = 0; tj <= 6; ++tj) {
    EXPECT_LT(max_abs(euler_rotation(Spin{tj}, 0, 0, 0) - CMatrix::Identity(tj + 1, tj + 1)),
              1e-14);
  }
}

TEST(EulerRotation, FundamentalSmallD) {
  const double b = 0.8;
  const CMatrix r = euler_rotation(Spin{1}, 0, b, 0);
  EXPECT_NEAR(r(0, 0).real(), std::cos(b / 2), 1e-15);
  EXPECT_NEAR(r(0, 1).real(), -std::sin(b / 2), 1e-15);
  EXPECT_NEAR(r(1, 0).real(), std::sin(b / 2), 1e-15);
  EXPECT_NEAR(r(1, 1).real(), std::cos(b / 2), 1e-15);
}

TEST(EulerRotation, SpinOneHalfTurn) {
  const CMatrix r = euler_rotation(Spin{2}, 0, std::numbers::pi, 0);
  EXPECT_NEAR(r(0, 2).real(), 1.0, 1e-14);
  EXPECT_NEAR(r(1, 1).real(), -1.0, 1e-14);
  EXPECT_NEAR(r(2, 0).real(), 1.0, 1e-14);
  const SpinOperators ops = spin_operators(Spin{2});
  EXPECT_LT(max_abs(r - expm_series(cplx(0, -std::numbers::pi) * ops.jy)), 1e-13);
}

TEST(EulerRotation, MatchesSeriesExpansion) {
  gen::Rng rng;
  for (int trial = 0; trial < 200; ++trial) {
    const Spin s{rng.integer(0, 24)};
    const double a = rng.uniform(-4, 4);
    const double b = rng.uniform(-4, 4);
    const double g = rng.uniform(-4, 4);
    const SpinOperators ops = spin_operators(s);
    const CMatrix ref = expm_series(cplx(0, -a) * ops.jz) * expm_series(cplx(0, -b) * ops.jy) *
                        expm_series(cplx(0, -g) * ops.jz);
    EXPECT_LT(max_abs(euler_rotation(s, a, b, g) - ref), 1e-10);
  }
}

TEST(EulerRotation, InverseComposition) {
  gen::Rng rng;
  for (int trial = 0; trial < gen::kTrials; ++trial) {
    const Spin s{rng.integer(0, 16)};
    const double a = rng.uniform(-7, 7);
    const double b = rng.uniform(-7, 7);
    const double g = rng.uniform(-7, 7);
    const CMatrix prod = euler_rotation(s, a, b, g) * euler_rotation(s, -g, -b, -a);
    EXPECT_LT(max_abs(prod - CMatrix::Identity(s.dim(), s.dim())), 1e-10);
  }
}

TEST(EulerRotation, ConjugationPreservesTraceAndHermiticity) {
  gen::Rng rng;
  for (int trial = 0; trial < gen::kTrials; ++trial) {
    const Spin s{rng.integer(0, 12)};
    const CMatrix r = euler_rotation(s, rng.uniform(-7, 7), rng.uniform(-7, 7), rng.uniform(-7, 7));
    const CMatrix h = rng.hermitian(s.dim());
    const CMatrix c = r * h * r.adjoint();
    EXPECT_LT(std::abs(c.trace() - h.trace()), 1e-10);
    EXPECT_LT(max_abs(c - c.adjoint()), 1e-10);
    EXPECT_LT(max_abs(r.adjoint() * r - CMatrix::Identity(s.dim(), s.dim())), 1e-10);
  }
}

TEST(WignerSmallD, LargeSpinStaysOrthogonal) {
  const RMatrix d = wigner_small_d(Spin{128}, 1.3);
  EXPECT_LT((d.transpose() * d - RMatrix::Identity(129, 129)).cwiseAbs().maxCoeff(), 1e-10);
}
