#pragma once

// Dense Hermitian eigendecomposition and spin-j rotation matrices.

#include <Eigen/Dense>

#include <cmath>
#include <complex>

#include "intersub/core.hpp"

namespace intersub {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;

struct EigenSystem {
  Eigen::VectorXd eigenvalues;  // ascending
  CMatrix eigenvectors;         // columns, orthonormal
};

inline constexpr double kHermitianTolerance = 1e-12;

inline bool is_hermitian(const CMatrix& m, double rel_tol = kHermitianTolerance) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// Eigenvalues ascending; each eigenvector's first significant entry is made
/// real and positive so repeated runs give identical projectors.
inline EigenSystem eigh(const CMatrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError(detail::concat("eigh: matrix is ", m.rows(), "x", m.cols()));
  }
  if (m.size() == 0) return {};
  if (!is_hermitian(m)) throw ValidationError("eigh: matrix is not Hermitian");
  const CMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw SingularityError("eigh: eigensolver did not converge");
  }
  EigenSystem es{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index c = 0; c < es.eigenvectors.cols(); ++c) {
    auto col = es.eigenvectors.col(c);
    const double cutoff = 1e-8 * col.cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < col.size(); ++r) {
      if (std::abs(col(r)) > cutoff) {
        col *= std::conj(col(r)) / std::abs(col(r));
        col(r) = cplx(col(r).real(), 0.0);
        break;
      }
    }
  }
  return es;
}

/// f(M) = V f(Λ) V† for Hermitian M.
template <class Fn>
CMatrix hermitian_function(const CMatrix& m, Fn&& f) {
  const EigenSystem es = eigh(m);
  CVector d(es.eigenvalues.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = f(es.eigenvalues(i));
  return es.eigenvectors * d.asDiagonal() * es.eigenvectors.adjoint();
}

/// Spin quantum number stored as 2j so half-integers are exact.
struct Spin {
  int twice_j = 0;

  static Spin from_j(double j) {
    const double tj = 2.0 * j;
    if (!std::isfinite(j) || tj < 0.0 || std::round(tj) != tj) {
      throw DomainError(detail::concat("spin: j must be a non-negative half-integer, got ", j));
    }
    return Spin{static_cast<int>(tj)};
  }

  double j() const noexcept { return 0.5 * twice_j; }
  Eigen::Index dim() const noexcept { return twice_j + 1; }
  // m value at basis index r (m descending from j).
  double m(Eigen::Index r) const noexcept { return j() - static_cast<double>(r); }
};

struct SpinOperators {
  CMatrix jy;
  CMatrix jz;
};

inline void require_valid(Spin s) {
  if (s.twice_j < 0) throw DomainError(detail::concat("spin: 2j = ", s.twice_j, " is negative"));
}

/// J_y and J_z in the |j,m⟩ basis, m = j, j−1, …, −j.
inline SpinOperators spin_operators(Spin s) {
  require_valid(s);
  const Eigen::Index n = s.dim();
  const double j = s.j();
  SpinOperators ops{CMatrix::Zero(n, n), CMatrix::Zero(n, n)};
  for (Eigen::Index r = 0; r < n; ++r) {
    ops.jz(r, r) = s.m(r);
    if (r > 0) {
      const double m = s.m(r);
      const double c = std::sqrt(std::max(0.0, j * (j + 1.0) - m * (m + 1.0)));
      ops.jy(r - 1, r) = cplx(0.0, -0.5 * c);
      ops.jy(r, r - 1) = cplx(0.0, 0.5 * c);
    }
  }
  return ops;
}

/// Wigner small-d matrix e^{−iβJ_y}, real in this basis.
inline RMatrix wigner_small_d(Spin s, double beta) {
  const SpinOperators ops = spin_operators(s);
  const CMatrix d = hermitian_function(ops.jy, [beta](double lam) {
    return std::exp(cplx(0.0, -beta * lam));
  });
  return d.real();
}

/// R(α, β, γ) = e^{−iαJ_z} e^{−iβJ_y} e^{−iγJ_z}.
inline CMatrix euler_rotation(Spin s, double alpha, double beta, double gamma) {
  const RMatrix d = wigner_small_d(s, beta);
  const Eigen::Index n = s.dim();
  CMatrix r(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      r(a, b) = std::exp(cplx(0.0, -alpha * s.m(a) - gamma * s.m(b))) * d(a, b);
    }
  }
  return r;
}

}  // namespace intersub
