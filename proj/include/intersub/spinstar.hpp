#pragma once

// Central spin coupled to N thermal qubit pointers by pure dephasing.
// Macrofractions of l_cg pointers are handled in the total-spin basis, where
// each branch state ρ̃_x(t)^{⊗l} is a direct sum of (2j+1)-dimensional blocks
// repeated B_j times; the optimal measurement is Helstrom's, block by block.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "intersub/bounds.hpp"
#include "intersub/coarsegrain.hpp"
#include "intersub/core.hpp"
#include "intersub/numerics.hpp"

namespace intersub {

inline constexpr int kMaxMacrofraction = 128;
inline constexpr int kDenseCheckMaxL = 6;
// M_j entries below this are flushed to zero and counted.
inline constexpr double kUnderflowFloor = 1e-300;

/// Pointer Hamiltonian: σ_x/2 (half) or σ_x (unit).
enum class PointerHamiltonian { Half, Unit };

struct PointerThermal {
  double beta = 0.0;
  double lambda_plus = 0.5;
  double lambda_minus = 0.5;
  double rho00 = 0.5;
  double rho01 = 0.0;
  double beta_e = 0.0;
};

struct SpinBlock {
  int twice_j = 0;
  double degeneracy = 1.0;
  CMatrix n0;
  CMatrix n1;
};

struct SpinBlockSet {
  int l_cg = 1;
  std::vector<SpinBlock> blocks;  // j = l/2, l/2 − 1, …
};

struct HelstromBlock {
  EigenSystem eig;
  std::vector<int> outcome;  // per eigenvector
};

struct ScanRecord {
  double t = 0.0;
  int l_cg = 1;
  double p_correct_0 = 1.0;
  double p_correct_1 = 0.0;
  ProbVector p_out;
  double agreement = 1.0;
  double bias = 0.0;
};

struct ScanSummary {
  double max_agreement = 0.0;
  double min_disagreement = 1.0;
  double min_bias = 1.0;
  double t_max_agreement = 0.0;
  double t_min_bias = 0.0;
};

struct SweepRow {
  int l_cg = 1;
  ScanSummary model;
  double bound_gamma = 1.0;
  double bound_dis = 0.0;
  double bound_bias = 0.0;
};

/// ρ_P = e^{−βH_P}/Z in the σ_z basis: ρ00 = ½, ρ01 = −tanh(βh)/2 with
/// h = ½ or 1; beta_e from the half-angle relations of the Euler decomposition.
inline PointerThermal thermal_pointer(double beta,
                                      PointerHamiltonian h = PointerHamiltonian::Half) {
  if (!std::isfinite(beta) || beta < 0.0) {
    throw DomainError(detail::concat("thermal_pointer: beta must be finite and >= 0, got ", beta));
  }
  const double scale = h == PointerHamiltonian::Half ? 1.0 : 2.0;
  PointerThermal p;
  p.beta = beta;
  p.lambda_plus = 1.0 / (1.0 + std::exp(-scale * beta));
  p.lambda_minus = 1.0 / (1.0 + std::exp(scale * beta));
  p.rho00 = 0.5;
  p.rho01 = -0.5 * std::tanh(0.5 * scale * beta);
  const double s = -(p.rho00 - p.lambda_plus);
  const double c = p.rho01;
  const double r = std::hypot(s, c);
  // ρ_P ∝ 𝕀 at β = 0, where any angle diagonalises it.
  p.beta_e = r > 0.0 ? 2.0 * std::atan2(s / r, c / r) : 0.0;
  return p;
}

namespace detail {

inline void require_ladder(int l_cg, int twice_j) {
  if (l_cg < 1) throw DomainError(concat("spinstar: l_cg must be >= 1, got ", l_cg));
  if (twice_j < 0 || twice_j > l_cg || (l_cg - twice_j) % 2 != 0) {
    throw DomainError(concat("degeneracy: j = ", 0.5 * twice_j, " is not on the ladder for l_cg = ",
                             l_cg));
  }
}

inline unsigned __int128 binomial_u128(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (int i = 1; i <= k; ++i) c = c * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
  return c;
}

}  // namespace detail

/// B_j = C(l, l/2 − j) − C(l, l/2 − j − 1), exact for l ≤ 64.
inline std::uint64_t degeneracy_exact(int l_cg, int twice_j) {
  detail::require_ladder(l_cg, twice_j);
  if (l_cg > 64) {
    throw ResourceError(detail::concat("degeneracy_exact: l_cg = ", l_cg, " exceeds 64"));
  }
  const int k = (l_cg - twice_j) / 2;
  return static_cast<std::uint64_t>(detail::binomial_u128(l_cg, k) -
                                    detail::binomial_u128(l_cg, k - 1));
}

/// B_j as a double; beyond l = 64 via C(l,k)·(l − 2k + 1)/(l − k + 1) in log space.
inline double degeneracy(int l_cg, int twice_j) {
  if (l_cg <= 64) return static_cast<double>(degeneracy_exact(l_cg, twice_j));
  detail::require_ladder(l_cg, twice_j);
  const int k = (l_cg - twice_j) / 2;
  const double log_c = std::lgamma(l_cg + 1.0) - std::lgamma(k + 1.0) - std::lgamma(l_cg - k + 1.0);
  return std::exp(log_c) * (l_cg - 2.0 * k + 1.0) / (l_cg - k + 1.0);
}

namespace detail {

// Diagonal of M_j: λ_a^{l/2+m} λ_b^{l/2−m}, m = j … −j, formed in log space.
inline Eigen::VectorXd block_diagonal(double lambda_a, double lambda_b, int l_cg, Spin s,
                                      std::size_t* underflows) {
  const double la = std::log(lambda_a);
  const double lb = std::log(lambda_b);
  Eigen::VectorXd d(s.dim());
  for (Eigen::Index r = 0; r < s.dim(); ++r) {
    const double m = s.m(r);
    const double ea = 0.5 * l_cg + m;
    const double eb = 0.5 * l_cg - m;
    const double lv = (ea > 0.0 ? ea * la : 0.0) + (eb > 0.0 ? eb * lb : 0.0);
    const double v = std::exp(lv);
    if (!(v >= kUnderflowFloor)) {
      d(r) = 0.0;
      if (underflows != nullptr) ++*underflows;
    } else {
      d(r) = v;
    }
  }
  return d;
}

inline void require_macrofraction(int l_cg) {
  if (l_cg < 1) throw DomainError(concat("spinstar: l_cg must be >= 1, got ", l_cg));
  if (l_cg > kMaxMacrofraction) {
    throw ResourceError(concat("spinstar: l_cg = ", l_cg, " exceeds ", kMaxMacrofraction));
  }
}

}  // namespace detail

/// Branch blocks at time t built directly from Euler rotations:
/// N_j^(0) = R(α, β_e, γ) M_j^(0) R(α, β_e, γ)†, N_j^(1) = R(−α, −β_e, −γ) M_j^(1) R(−α, −β_e, −γ)†,
/// α = γ = g t.
inline SpinBlockSet branch_blocks(const PointerThermal& pt, int l_cg, double g, double t,
                                  std::size_t* underflows = nullptr) {
  detail::require_macrofraction(l_cg);
  const double angle = g * t;
  SpinBlockSet set;
  set.l_cg = l_cg;
  for (int tj = l_cg; tj >= 0; tj -= 2) {
    const Spin s{tj};
    const CMatrix r0 = euler_rotation(s, angle, pt.beta_e, angle);
    const CMatrix r1 = euler_rotation(s, -angle, -pt.beta_e, -angle);
    const Eigen::VectorXd m0 =
        detail::block_diagonal(pt.lambda_plus, pt.lambda_minus, l_cg, s, underflows);
    const Eigen::VectorXd m1 =
        detail::block_diagonal(pt.lambda_minus, pt.lambda_plus, l_cg, s, underflows);
    SpinBlock b;
    b.twice_j = tj;
    b.degeneracy = degeneracy(l_cg, tj);
    b.n0 = r0 * m0.cast<cplx>().asDiagonal() * r0.adjoint();
    b.n1 = r1 * m1.cast<cplx>().asDiagonal() * r1.adjoint();
    set.blocks.push_back(std::move(b));
  }
  return set;
}

/// Per block, eigenvectors of Λ = ½(N^(0) − N^(1)) with λ ≥ 0 go to outcome 0.
/// Λ is purely imaginary here, so odd blocks carry exact zero eigenvalues;
/// "≥ 0" is read with a tolerance relative to the block's weight.
inline std::vector<HelstromBlock> helstrom_blocks(const SpinBlockSet& set) {
  std::vector<HelstromBlock> out;
  out.reserve(set.blocks.size());
  for (const SpinBlock& b : set.blocks) {
    HelstromBlock h;
    h.eig = eigh(0.5 * (b.n0 - b.n1));
    const double tol = 1e-12 * std::max(b.n0.trace().real(), b.n1.trace().real());
    h.outcome.resize(static_cast<std::size_t>(h.eig.eigenvalues.size()));
    for (Eigen::Index k = 0; k < h.eig.eigenvalues.size(); ++k) {
      h.outcome[static_cast<std::size_t>(k)] = h.eig.eigenvalues(k) >= -tol ? 0 : 1;
    }
    out.push_back(std::move(h));
  }
  return out;
}

/// p[x][y] = p_t(x | ρ_y^{⊗l}).
using OutcomeTable = std::array<std::array<double, 2>, 2>;

namespace detail {

// Divides out the branch trace, which differs from 1 only by rounding.
inline void normalize_columns(OutcomeTable& p) {
  for (int y = 0; y < 2; ++y) {
    const double tr = p[0][y] + p[1][y];
    if (tr > 0.0) {
      p[0][y] /= tr;
      p[1][y] /= tr;
    }
  }
}

}  // namespace detail

inline OutcomeTable outcome_table(const SpinBlockSet& set, const std::vector<HelstromBlock>& h) {
  OutcomeTable p{};
  detail::CompensatedSum acc[2][2];
  for (std::size_t bi = 0; bi < set.blocks.size(); ++bi) {
    const SpinBlock& b = set.blocks[bi];
    const CMatrix& v = h[bi].eig.eigenvectors;
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
      const int x = h[bi].outcome[static_cast<std::size_t>(k)];
      const auto col = v.col(k);
      acc[x][0].add(b.degeneracy * (col.adjoint() * b.n0 * col)(0, 0).real());
      acc[x][1].add(b.degeneracy * (col.adjoint() * b.n1 * col)(0, 0).real());
    }
  }
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) p[x][y] = acc[x][y].value();
  }
  detail::normalize_columns(p);
  return p;
}

/// Σ_j B_j tr N_j^(x) for each branch.
inline std::array<double, 2> branch_traces(const SpinBlockSet& set) {
  detail::CompensatedSum t0;
  detail::CompensatedSum t1;
  for (const SpinBlock& b : set.blocks) {
    t0.add(b.degeneracy * b.n0.trace().real());
    t1.add(b.degeneracy * b.n1.trace().real());
  }
  return {t0.value(), t1.value()};
}

/// The time-independent part d(β_e) M d(β_e)† of every block is computed once;
/// only the J_z phases depend on t.
class SpinStarModel {
 public:
  SpinStarModel(const PointerThermal& pt, int l_cg, double g) : pt_(pt), l_cg_(l_cg), g_(g) {
    detail::require_macrofraction(l_cg);
    if (!std::isfinite(g)) throw DomainError("spinstar: coupling g must be finite");
    for (int tj = l_cg; tj >= 0; tj -= 2) {
      const Spin s{tj};
      const RMatrix d0 = wigner_small_d(s, pt.beta_e);
      const RMatrix d1 = wigner_small_d(s, -pt.beta_e);
      const Eigen::VectorXd m0 =
          detail::block_diagonal(pt.lambda_plus, pt.lambda_minus, l_cg, s, &underflows_);
      const Eigen::VectorXd m1 =
          detail::block_diagonal(pt.lambda_minus, pt.lambda_plus, l_cg, s, &underflows_);
      Cached c;
      c.spin = s;
      c.degeneracy = degeneracy(l_cg, tj);
      c.a0 = d0 * m0.asDiagonal() * d0.transpose();
      c.a1 = d1 * m1.asDiagonal() * d1.transpose();
      cache_.push_back(std::move(c));
    }
  }

  int l_cg() const noexcept { return l_cg_; }
  const PointerThermal& pointer() const noexcept { return pt_; }
  std::size_t underflow_count() const noexcept { return underflows_; }

  SpinBlockSet blocks_at(double t) const {
    const double angle = g_ * t;
    SpinBlockSet set;
    set.l_cg = l_cg_;
    for (const Cached& c : cache_) {
      const Eigen::Index n = c.spin.dim();
      SpinBlock b;
      b.twice_j = c.spin.twice_j;
      b.degeneracy = c.degeneracy;
      b.n0.resize(n, n);
      b.n1.resize(n, n);
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index q = 0; q < n; ++q) {
          const cplx phase = std::exp(cplx(0.0, -angle * (c.spin.m(r) - c.spin.m(q))));
          b.n0(r, q) = phase * c.a0(r, q);
          b.n1(r, q) = std::conj(phase) * c.a1(r, q);
        }
      }
      set.blocks.push_back(std::move(b));
    }
    return set;
  }

  OutcomeTable outcomes_at(double t) const {
    const SpinBlockSet set = blocks_at(t);
    return outcome_table(set, helstrom_blocks(set));
  }

 private:
  struct Cached {
    Spin spin;
    double degeneracy = 1.0;
    RMatrix a0;
    RMatrix a1;
  };

  PointerThermal pt_;
  int l_cg_;
  double g_;
  std::size_t underflows_ = 0;
  std::vector<Cached> cache_;
};

namespace detail {

inline int observer_count(int l_cg, int n_total) {
  if (n_total < 1 || l_cg < 1 || n_total % l_cg != 0) {
    throw ConfigError(concat("spinstar: l_cg = ", l_cg, " must divide n_total = ", n_total));
  }
  return n_total / l_cg;
}

inline void require_prior(double p0) {
  if (!(p0 >= 0.0 && p0 <= 1.0)) {
    throw DomainError(concat("spinstar: p0 must lie in [0, 1], got ", p0));
  }
}

// Agreement Σ_y p_y Σ_x p(x|ρ_y)^K: every macrofraction sees the same branch.
inline ScanRecord record_from(const OutcomeTable& p, double t, int l_cg, int observers,
                              double p0) {
  ScanRecord r;
  r.t = t;
  r.l_cg = l_cg;
  r.p_correct_0 = p[0][0];
  r.p_correct_1 = p[1][1];
  const double p1 = 1.0 - p0;
  const double out0 = p0 * p[0][0] + p1 * p[0][1];
  const double out1 = p0 * p[1][0] + p1 * p[1][1];
  r.p_out = ProbVector::validate({out0, out1});
  r.agreement = p0 * (std::pow(p[0][0], observers) + std::pow(p[1][0], observers)) +
                p1 * (std::pow(p[0][1], observers) + std::pow(p[1][1], observers));
  r.bias = 0.5 * (std::abs(out0 - p0) + std::abs(out1 - p1));
  return r;
}

}  // namespace detail

inline ScanRecord observables_at(const SpinStarModel& model, int n_total, double p0, double t) {
  detail::require_prior(p0);
  const int observers = detail::observer_count(model.l_cg(), n_total);
  return detail::record_from(model.outcomes_at(t), t, model.l_cg(), observers, p0);
}

inline ScanRecord observables_at(const PointerThermal& pt, int l_cg, int n_total, double p0,
                                 double g, double t) {
  return observables_at(SpinStarModel(pt, l_cg, g), n_total, p0, t);
}

/// t_k = k·t_max/steps for k = 1 … steps.
inline std::vector<double> default_time_grid(double t_max, int steps) {
  if (steps < 1 || !(t_max > 0.0) || !std::isfinite(t_max)) {
    throw ConfigError(detail::concat("time grid: need t_max > 0 and steps >= 1 (got ", t_max,
                                     ", ", steps, ")"));
  }
  std::vector<double> ts(static_cast<std::size_t>(steps));
  for (int k = 1; k <= steps; ++k) ts[static_cast<std::size_t>(k - 1)] = k * t_max / steps;
  return ts;
}

inline std::vector<ScanRecord> time_scan(const SpinStarModel& model, int n_total, double p0,
                                         const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw ConfigError("time_scan: empty time grid");
  detail::require_prior(p0);
  const int observers = detail::observer_count(model.l_cg(), n_total);
  std::vector<ScanRecord> out(t_grid.size());
  parallel_for(t_grid.size(), [&](std::size_t i) {
    out[i] = detail::record_from(model.outcomes_at(t_grid[i]), t_grid[i], model.l_cg(), observers,
                                 p0);
  });
  return out;
}

inline std::vector<ScanRecord> time_scan(const PointerThermal& pt, int l_cg, int n_total,
                                         double p0, double g, const std::vector<double>& t_grid) {
  return time_scan(SpinStarModel(pt, l_cg, g), n_total, p0, t_grid);
}

inline ScanSummary summarize(const std::vector<ScanRecord>& records) {
  if (records.empty()) throw ConfigError("summarize: no records");
  ScanSummary s;
  s.max_agreement = -1.0;
  s.min_bias = std::numeric_limits<double>::infinity();
  for (const ScanRecord& r : records) {
    if (r.agreement > s.max_agreement) {
      s.max_agreement = r.agreement;
      s.t_max_agreement = r.t;
    }
    if (r.bias < s.min_bias) {
      s.min_bias = r.bias;
      s.t_min_bias = r.t;
    }
  }
  s.min_disagreement = 1.0 - s.max_agreement;
  return s;
}

/// Per-l_cg extrema over the time grid next to the coarse-grained bounds
/// for a = {λ+, λ−}.
inline std::vector<SweepRow> lcg_sweep(const PointerThermal& pt, int n_total, double p0, double g,
                                       const std::vector<double>& t_grid,
                                       const std::vector<int>& lcg_list) {
  detail::require_prior(p0);
  for (int l : lcg_list) detail::observer_count(l, n_total);
  const AVector a = AVector::validate({pt.lambda_plus, pt.lambda_minus});
  const ProbVector p_s = ProbVector::validate({p0, 1.0 - p0});
  std::vector<SweepRow> rows;
  rows.reserve(lcg_list.size());
  for (int l : lcg_list) {
    SweepRow row;
    row.l_cg = l;
    row.model = summarize(time_scan(pt, l, n_total, p0, g, t_grid));
    const CoarseGrainResult cg = cg_metrics(a, l, n_total / l, p_s);
    row.bound_gamma = cg.gamma_cg;
    row.bound_dis = cg.delta_cg;
    row.bound_bias = cg.bias_cg;
    rows.push_back(row);
  }
  return rows;
}

/// Dense 2^l route: builds ρ̃_x(t)^{⊗l} = (V_x ρ_P V_x†)^{⊗l} with
/// V_0 = e^{−igtσ_z/2} = V_1†, solves Helstrom on the full space and returns
/// the largest deviation of p_t(x|ρ_y) from the block method.
inline double dense_check(const PointerThermal& pt, int l_cg, double g, double t) {
  if (l_cg < 1) throw DomainError(detail::concat("dense_check: l_cg must be >= 1, got ", l_cg));
  if (l_cg > kDenseCheckMaxL) {
    throw ResourceError(detail::concat("dense_check: l_cg = ", l_cg, " exceeds ", kDenseCheckMaxL));
  }
  CMatrix rho(2, 2);
  rho << pt.rho00, pt.rho01, pt.rho01, 1.0 - pt.rho00;
  const double angle = g * t;
  CMatrix v0 = CMatrix::Zero(2, 2);
  v0(0, 0) = std::exp(cplx(0.0, -0.5 * angle));
  v0(1, 1) = std::exp(cplx(0.0, 0.5 * angle));
  const CMatrix b0 = v0 * rho * v0.adjoint();
  const CMatrix b1 = v0.adjoint() * rho * v0;
  CMatrix r0 = b0;
  CMatrix r1 = b1;
  for (int k = 1; k < l_cg; ++k) {
    CMatrix n0(r0.rows() * 2, r0.cols() * 2);
    CMatrix n1(r1.rows() * 2, r1.cols() * 2);
    for (Eigen::Index a = 0; a < 2; ++a) {
      for (Eigen::Index b = 0; b < 2; ++b) {
        n0.block(a * r0.rows(), b * r0.cols(), r0.rows(), r0.cols()) = b0(a, b) * r0;
        n1.block(a * r1.rows(), b * r1.cols(), r1.rows(), r1.cols()) = b1(a, b) * r1;
      }
    }
    r0 = std::move(n0);
    r1 = std::move(n1);
  }
  const EigenSystem es = eigh(0.5 * (r0 - r1));
  OutcomeTable dense{};
  for (Eigen::Index k = 0; k < es.eigenvalues.size(); ++k) {
    const int x = es.eigenvalues(k) >= -1e-13 ? 0 : 1;
    const auto col = es.eigenvectors.col(k);
    dense[x][0] += (col.adjoint() * r0 * col)(0, 0).real();
    dense[x][1] += (col.adjoint() * r1 * col)(0, 0).real();
  }
  detail::normalize_columns(dense);
  const OutcomeTable block = SpinStarModel(pt, l_cg, g).outcomes_at(t);
  double dev = 0.0;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) dev = std::max(dev, std::abs(dense[x][y] - block[x][y]));
  }
  return dev;
}

}  // namespace intersub
