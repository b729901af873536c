#pragma once

// Brute-force reference for small systems: the optimal broadcast unitary
// U = V + W is assembled from Kronecker products, the joint state of system
// and pointers is evolved explicitly and all statistics are read off with
// outcome projectors. Every operator involved is a permutation or a product
// of diagonals, so matrices are held in sparse storage; nothing else about
// the computation is specialised.

#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "intersub/bounds.hpp"
#include "intersub/core.hpp"
#include "intersub/numerics.hpp"
#include "intersub/partition.hpp"

namespace intersub {

using SparseC = Eigen::SparseMatrix<cplx>;

// Desk-scale cap on d_S · d_P^{n_p}.
inline constexpr std::size_t kOracleMaxDimension = 16384;

class UnsupportedConfigurationError : public DomainError {
 public:
  using DomainError::DomainError;
};

struct OracleDims {
  int d_s = 2;
  int d_p = 2;
  int n_p = 1;

  std::size_t pointer_block() const {
    std::size_t n = 1;
    for (int k = 0; k < n_p; ++k) n *= static_cast<std::size_t>(d_p);
    return n;
  }
  std::size_t total() const { return static_cast<std::size_t>(d_s) * pointer_block(); }
};

/// Operator on system ⊗ pointer_1 ⊗ … ⊗ pointer_n (system most significant).
struct DenseState {
  SparseC matrix;
  OracleDims dims;
};

struct BroadcastUnitary {
  SparseC matrix;
  OracleDims dims;
  // levels[x] = pointer eigenvector indices spanning D_x.
  std::vector<std::vector<std::size_t>> levels;
};

struct BroadcastStats {
  double agreement = 0.0;
  std::vector<ProbVector> local_probs;  // one per pointer
  std::map<std::vector<int>, double> joint;
  double bias = 0.0;  // largest TV distance to p_S over pointers
  double off_diagonal_mass = 0.0;
};

struct OzawaReport {
  double reproducibility_defect = 0.0;
  double off_diagonal_mass = 0.0;
  double agreement = 0.0;
  double bias = 0.0;
  bool premise_holds = false;     // every marginal equals p_S
  bool conclusion_holds = false;  // joint mass only on equal-outcome tuples
  bool implication_holds() const noexcept { return !premise_holds || conclusion_holds; }
};

namespace detail {

inline void require_oracle_scale(int d_s, int d_p, int n_p) {
  if (d_s < 1 || d_p < 1 || n_p < 1) {
    throw DomainError(concat("oracle: dimensions must be positive (d_s=", d_s, ", d_p=", d_p,
                             ", n_p=", n_p, ")"));
  }
  std::size_t dim = static_cast<std::size_t>(d_s);
  for (int k = 0; k < n_p; ++k) {
    dim *= static_cast<std::size_t>(d_p);
    if (dim > kOracleMaxDimension) {
      throw ResourceError(concat("oracle: dimension d_s*d_p^n_p exceeds ", kOracleMaxDimension,
                                 " (d_s=", d_s, ", d_p=", d_p, ", n_p=", n_p, ")"));
    }
  }
}

inline SparseC kron(const SparseC& a, const SparseC& b) {
  SparseC out = Eigen::kroneckerProduct(a, b);
  out.makeCompressed();
  return out;
}

inline SparseC kron_power(const SparseC& a, int n) {
  SparseC out = a;
  for (int k = 1; k < n; ++k) out = kron(out, a);
  return out;
}

inline SparseC identity(std::size_t n) {
  SparseC id(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  id.setIdentity();
  return id;
}

inline SparseC outer(std::size_t rows, std::size_t row, std::size_t col) {
  SparseC m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
  m.insert(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = 1.0;
  return m;
}

// Outcome label of each pointer level, −1 for levels outside every D_x.
inline std::vector<int> level_labels(const std::vector<std::vector<std::size_t>>& levels,
                                     int d_p) {
  std::vector<int> label(static_cast<std::size_t>(d_p), -1);
  for (std::size_t x = 0; x < levels.size(); ++x) {
    for (std::size_t i : levels[x]) label[i] = static_cast<int>(x);
  }
  return label;
}

inline SparseC kron_list(const std::vector<SparseC>& factors) {
  SparseC out = factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k) out = kron(out, factors[k]);
  return out;
}

}  // namespace detail

/// Σ |y⟩⟨x| ⊗ T_{x,y}^{⊗n_p} on the agreement subspace plus the identity on
/// its complement; T_{x,y} sends the k-th heaviest level of D_y to the k-th
/// heaviest level of D_x.
inline BroadcastUnitary build_optimal_unitary(int d_s, const Partition& partition, int n_p) {
  if (partition.outcomes() != static_cast<std::size_t>(d_s)) {
    throw DimensionError(detail::concat("build_optimal_unitary: partition has ",
                                        partition.outcomes(), " outcomes, system has ", d_s));
  }
  const std::size_t dim_x = partition.assignment.front().size();
  for (const auto& d : partition.assignment) {
    if (d.size() != dim_x || d.empty()) {
      throw UnsupportedConfigurationError(
          "build_optimal_unitary: every outcome subspace must have the same nonzero dimension");
    }
  }
  if (dim_x * static_cast<std::size_t>(d_s) != partition.pointer_levels) {
    throw UnsupportedConfigurationError(
        "build_optimal_unitary: outcome subspaces must cover every pointer level");
  }
  const int d_p = static_cast<int>(partition.pointer_levels);
  detail::require_oracle_scale(d_s, d_p, n_p);
  const OracleDims dims{d_s, d_p, n_p};
  const auto ds = static_cast<std::size_t>(d_s);

  std::vector<SparseC> projector(ds);
  for (std::size_t x = 0; x < ds; ++x) {
    projector[x] = SparseC(d_p, d_p);
    for (std::size_t i : partition.assignment[x]) {
      projector[x].insert(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    }
  }

  SparseC v(static_cast<Eigen::Index>(dims.total()), static_cast<Eigen::Index>(dims.total()));
  SparseC agreement_projector = v;
  for (std::size_t y = 0; y < ds; ++y) {
    agreement_projector += detail::kron(detail::identity(ds), detail::kron_power(projector[y], n_p));
    for (std::size_t x = 0; x < ds; ++x) {
      SparseC t(d_p, d_p);
      for (std::size_t k = 0; k < dim_x; ++k) {
        t.insert(static_cast<Eigen::Index>(partition.assignment[x][k]),
                 static_cast<Eigen::Index>(partition.assignment[y][k])) = 1.0;
      }
      v += detail::kron(detail::outer(ds, y, x), detail::kron_power(t, n_p));
    }
  }
  BroadcastUnitary u;
  u.matrix = v + (detail::identity(dims.total()) - agreement_projector);
  u.matrix.prune(cplx(0.0, 0.0));
  u.matrix.makeCompressed();
  u.dims = dims;
  u.levels = partition.assignment;
  return u;
}

/// Generalised SWAP(system, pointer 1) followed by generalised CNOTs from
/// pointer 1 onto every other pointer; pointer levels are the outcomes.
inline BroadcastUnitary build_broadcast_circuit(int d_s, int n_p) {
  detail::require_oracle_scale(d_s, d_s, n_p);
  const OracleDims dims{d_s, d_s, n_p};
  const auto d = static_cast<std::size_t>(d_s);
  const SparseC id = detail::identity(d);

  SparseC swap(static_cast<Eigen::Index>(d * d), static_cast<Eigen::Index>(d * d));
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      swap += detail::kron(detail::outer(d, b, a), detail::outer(d, a, b));
    }
  }
  std::vector<SparseC> factors{swap};
  for (int k = 1; k < n_p; ++k) factors.push_back(id);
  SparseC u = detail::kron_list(factors);

  SparseC shift(d_s, d_s);
  for (std::size_t b = 0; b < d; ++b) {
    shift.insert(static_cast<Eigen::Index>((b + 1) % d), static_cast<Eigen::Index>(b)) = 1.0;
  }
  for (int target = 2; target <= n_p; ++target) {
    SparseC cnot(static_cast<Eigen::Index>(dims.total()), static_cast<Eigen::Index>(dims.total()));
    SparseC power = id;
    for (std::size_t a = 0; a < d; ++a) {
      std::vector<SparseC> f{id, detail::outer(d, a, a)};
      for (int k = 2; k <= n_p; ++k) f.push_back(k == target ? power : id);
      cnot += detail::kron_list(f);
      power = SparseC(shift * power);
    }
    u = SparseC(cnot * u);
  }
  u.prune(cplx(0.0, 0.0));
  u.makeCompressed();

  BroadcastUnitary out;
  out.matrix = u;
  out.dims = dims;
  out.levels.resize(d);
  for (std::size_t x = 0; x < d; ++x) out.levels[x] = {x};
  return out;
}

/// ρ_S ⊗ τ^{⊗n_p} with τ = diag(pointer_weights) in the energy eigenbasis.
inline DenseState product_state(const CMatrix& rho_s, const ProbVector& pointer_weights,
                                int n_p) {
  if (rho_s.rows() != rho_s.cols() || rho_s.rows() < 1) {
    throw DimensionError("product_state: rho_s must be square and nonempty");
  }
  if (!is_hermitian(rho_s, 1e-10)) throw ValidationError("product_state: rho_s is not Hermitian");
  if (std::abs(rho_s.trace() - cplx(1.0, 0.0)) > kInputTolerance) {
    throw ValidationError("product_state: rho_s must have unit trace");
  }
  const int d_s = static_cast<int>(rho_s.rows());
  const int d_p = static_cast<int>(pointer_weights.size());
  detail::require_oracle_scale(d_s, d_p, n_p);
  SparseC tau(d_p, d_p);
  for (int i = 0; i < d_p; ++i) {
    if (pointer_weights[static_cast<std::size_t>(i)] > 0.0) {
      tau.insert(i, i) = pointer_weights[static_cast<std::size_t>(i)];
    }
  }
  SparseC s = rho_s.sparseView();
  return {detail::kron(s, detail::kron_power(tau, n_p)), OracleDims{d_s, d_p, n_p}};
}

/// U ρ U†.
inline DenseState evolve(const BroadcastUnitary& u, const DenseState& state) {
  if (u.matrix.rows() != state.matrix.rows()) {
    throw DimensionError(detail::concat("evolve: unitary has dimension ", u.matrix.rows(),
                                        ", state has ", state.matrix.rows()));
  }
  SparseC out = u.matrix * state.matrix * SparseC(u.matrix.adjoint());
  out.makeCompressed();
  return {out, state.dims};
}

/// Largest deviation from unit trace, Hermiticity and (for dimension ≤ 512)
/// positivity; zero for a valid density operator.
inline double state_defect(const DenseState& s) {
  double defect = std::abs(SparseC(s.matrix).diagonal().sum() - cplx(1.0, 0.0));
  const SparseC diff = s.matrix - SparseC(s.matrix.adjoint());
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k) {
    for (SparseC::InnerIterator it(diff, k); it; ++it) defect = std::max(defect, std::abs(it.value()));
  }
  if (s.matrix.rows() <= 512) {
    const double lowest = eigh(CMatrix(s.matrix)).eigenvalues(0);
    defect = std::max(defect, -lowest);
  }
  return defect;
}

/// max |U†U − 𝕀|.
inline double unitarity_defect(const BroadcastUnitary& u) {
  const SparseC diff = SparseC(u.matrix.adjoint()) * u.matrix - detail::identity(u.dims.total());
  double m = 0.0;
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k) {
    for (SparseC::InnerIterator it(diff, k); it; ++it) m = std::max(m, std::abs(it.value()));
  }
  return m;
}

/// max |(U − 𝕀)|ψ⟩| over basis states whose pointer outcomes do not all agree.
inline double disagreement_identity_defect(const BroadcastUnitary& u) {
  const auto labels = detail::level_labels(u.levels, u.dims.d_p);
  const std::size_t block = u.dims.pointer_block();
  double m = 0.0;
  for (std::size_t col = 0; col < u.dims.total(); ++col) {
    std::size_t rest = col % block;
    int first = -2;
    bool agree = true;
    for (std::size_t k = 0; k < static_cast<std::size_t>(u.dims.n_p); ++k) {
      const int lab = labels[rest % static_cast<std::size_t>(u.dims.d_p)];
      rest /= static_cast<std::size_t>(u.dims.d_p);
      if (first == -2) first = lab;
      if (lab != first || lab < 0) agree = false;
    }
    if (agree) continue;
    for (SparseC::InnerIterator it(u.matrix, static_cast<Eigen::Index>(col)); it; ++it) {
      const cplx expected = it.row() == static_cast<Eigen::Index>(col) ? cplx(1.0) : cplx(0.0);
      m = std::max(m, std::abs(it.value() - expected));
    }
    if (std::abs(u.matrix.coeff(static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(col)) -
                 cplx(1.0)) > m) {
      m = std::abs(u.matrix.coeff(static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(col)) -
                   cplx(1.0));
    }
  }
  return m;
}

/// Joint outcome distribution tr[ρ Π_{x_1} ⊗ … ⊗ Π_{x_n}], its per-pointer
/// marginals, the agreement mass and the bias against p_S.
inline BroadcastStats measure(const DenseState& state,
                              const std::vector<std::vector<std::size_t>>& levels,
                              const ProbVector& p_s) {
  const auto labels = detail::level_labels(levels, state.dims.d_p);
  const std::size_t n_out = levels.size();
  if (p_s.size() != n_out) {
    throw DimensionError(detail::concat("measure: ", n_out, " outcomes but p_s has ", p_s.size()));
  }
  const auto n = static_cast<std::size_t>(state.dims.n_p);
  const std::size_t block = state.dims.pointer_block();
  const Eigen::VectorXcd diag = SparseC(state.matrix).diagonal();

  BroadcastStats st;
  std::vector<std::vector<double>> marg(n, std::vector<double>(n_out, 0.0));
  std::vector<int> tuple(n);
  for (std::size_t idx = 0; idx < state.dims.total(); ++idx) {
    const double w = diag(static_cast<Eigen::Index>(idx)).real();
    if (w == 0.0) continue;
    std::size_t rest = idx % block;
    bool measured = true;
    for (std::size_t k = n; k-- > 0;) {
      tuple[k] = labels[rest % static_cast<std::size_t>(state.dims.d_p)];
      rest /= static_cast<std::size_t>(state.dims.d_p);
      if (tuple[k] < 0) measured = false;
    }
    if (!measured) continue;
    st.joint[tuple] += w;
    for (std::size_t k = 0; k < n; ++k) marg[k][static_cast<std::size_t>(tuple[k])] += w;
  }
  for (const auto& [t, w] : st.joint) {
    if (std::all_of(t.begin(), t.end(), [&](int v) { return v == t.front(); })) {
      st.agreement += w;
    } else {
      st.off_diagonal_mass += w;
    }
  }
  for (auto& m : marg) {
    st.local_probs.push_back(ProbVector::validate(std::move(m), 1e-8));
    st.bias = std::max(st.bias, total_variation(st.local_probs.back(), p_s));
  }
  return st;
}

/// Runs an arbitrary broadcast unitary on ρ_S ⊗ τ^{⊗n_p}.
inline BroadcastStats run_broadcast(const BroadcastUnitary& u, const CMatrix& rho_s,
                                    const ProbVector& pointer_weights) {
  std::vector<double> diag(static_cast<std::size_t>(rho_s.rows()));
  for (Eigen::Index i = 0; i < rho_s.rows(); ++i) diag[static_cast<std::size_t>(i)] = rho_s(i, i).real();
  const ProbVector p_s = ProbVector::validate(std::move(diag));
  const DenseState out = evolve(u, product_state(rho_s, pointer_weights, u.dims.n_p));
  return measure(out, u.levels, p_s);
}

inline CMatrix diagonal_state(const ProbVector& p_s) {
  CMatrix rho = CMatrix::Zero(static_cast<Eigen::Index>(p_s.size()),
                              static_cast<Eigen::Index>(p_s.size()));
  for (std::size_t x = 0; x < p_s.size(); ++x) {
    rho(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)) = p_s[x];
  }
  return rho;
}

inline BroadcastStats broadcast_statistics(const ProbVector& rho_s_diag,
                                           const ProbVector& pointer_weights,
                                           const Partition& partition, int n_p) {
  const auto u = build_optimal_unitary(static_cast<int>(rho_s_diag.size()), partition, n_p);
  return run_broadcast(u, diagonal_state(rho_s_diag), pointer_weights);
}

/// As broadcast_statistics, with system coherences kept.
inline BroadcastStats broadcast_statistics(const CMatrix& rho_s,
                                           const ProbVector& pointer_weights,
                                           const Partition& partition, int n_p) {
  const auto u = build_optimal_unitary(static_cast<int>(rho_s.rows()), partition, n_p);
  return run_broadcast(u, rho_s, pointer_weights);
}

inline OzawaReport ozawa_check(const ProbVector& rho_s_diag, const ProbVector& pointer_weights,
                               const Partition& partition, int n_p) {
  const BroadcastStats st = broadcast_statistics(rho_s_diag, pointer_weights, partition, n_p);
  OzawaReport r;
  for (const auto& lp : st.local_probs) {
    r.reproducibility_defect = std::max(r.reproducibility_defect, total_variation(lp, rho_s_diag));
  }
  r.off_diagonal_mass = st.off_diagonal_mass;
  r.agreement = st.agreement;
  r.bias = st.bias;
  r.premise_holds = r.reproducibility_defect <= kIdentityTolerance;
  r.conclusion_holds = r.off_diagonal_mass <= kIdentityTolerance;
  return r;
}

}  // namespace intersub
