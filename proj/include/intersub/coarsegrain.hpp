#pragma once

// Coarse-graining l_cg pointers into one macrofraction: the multinomial
// remapping a → a^(l), the terminating hypergeometric form for two outcomes
// and the large-l asymptote.

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "intersub/bounds.hpp"
#include "intersub/core.hpp"

namespace intersub {

struct CoarseGrainResult {
  int l_cg = 1;
  AVector avector_cg;
  double gamma_cg = 1.0;
  double delta_cg = 0.0;
  double bias_cg = 0.0;
  // Σ_{x≥1} a_x^(l), summed directly so it keeps precision when a_0^(l) → 1.
  double one_minus_a0 = 0.0;
};

struct AsymptoticParams {
  double d_rate = 0.0;
  double c_const = 0.0;
  double f_const = 0.0;
};

namespace detail {

inline void require_sorted(const AVector& a, const char* what) {
  for (std::size_t x = 1; x < a.size(); ++x) {
    if (a[x] > a[x - 1]) {
      throw DomainError(concat(what, ": a must be sorted non-increasing (a_", x,
                               " = ", a[x], " > a_", x - 1, " = ", a[x - 1], ")"));
    }
  }
}

// Walks every composition (k_0..k_{d−1}) of l, carrying the partial log of
// the multinomial term and the running argmax so each leaf costs O(1).
// Logs are carried in long double: lgamma(l+1) reaches ~500 at l = 128 and
// its rounding would otherwise dominate a_0^(l) near 1.
class CompositionWalker {
 public:
  CompositionWalker(const AVector& a, int l) : l_(l), d_(a.size()), sums_(a.size()) {
    log_fact_.resize(static_cast<std::size_t>(l) + 1);
    for (int k = 0; k <= l; ++k) log_fact_[k] = std::lgamma(static_cast<long double>(k) + 1.0L);
    log_a_.resize(d_);
    for (std::size_t x = 0; x < d_; ++x) {
      log_a_[x] = a[x] > 0.0 ? std::log(static_cast<long double>(a[x]))
                           : -std::numeric_limits<long double>::infinity();
    }
  }

  std::vector<double> run() {
    walk(0, l_, log_fact_[l_], 0, -1);
    std::vector<double> out(d_);
    for (std::size_t x = 0; x < d_; ++x) out[x] = sums_[x].value();
    return out;
  }

 private:
  void walk(std::size_t x, int remaining, long double log_term, std::size_t best, int best_k) {
    if (x + 1 == d_) {
      add_leaf(x, remaining, log_term, best, best_k);
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      if (k > 0 && log_a_[x] == -std::numeric_limits<long double>::infinity()) break;
      const long double lt = log_term - log_fact_[k] + (k > 0 ? k * log_a_[x] : 0.0);
      if (k > best_k) {
        walk(x + 1, remaining - k, lt, x, k);
      } else {
        walk(x + 1, remaining - k, lt, best, best_k);
      }
    }
  }

  void add_leaf(std::size_t x, int k, long double log_term, std::size_t best, int best_k) {
    if (k > 0 && log_a_[x] == -std::numeric_limits<long double>::infinity()) return;
    const long double lt = log_term - log_fact_[k] + (k > 0 ? k * log_a_[x] : 0.0);
    if (k > best_k) best = x;
    sums_[best].add(static_cast<double>(std::exp(lt)));
  }

  int l_;
  std::size_t d_;
  std::vector<long double> log_fact_;
  std::vector<long double> log_a_;
  std::vector<CompensatedSum> sums_;
};

inline void require_two_outcomes(const AVector& a, const char* what) {
  if (a.size() != 2) {
    throw DomainError(concat(what, ": needs exactly two outcomes, got ", a.size()));
  }
}

}  // namespace detail

/// a_x^(l) = Σ over compositions k of l whose argmax (smallest index on
/// ties) is x, of C(l; k) Π_y a_y^{k_y}.
inline AVector cg_avector(const AVector& a, int l_cg) {
  if (l_cg < 1) {
    throw DomainError(detail::concat("cg_avector: l_cg must be >= 1, got ", l_cg));
  }
  detail::require_sorted(a, "cg_avector");
  if (l_cg == 1) return a;
  return AVector::validate(detail::CompositionWalker(a, l_cg).run());
}

/// ₂F₁(a, b; c; z) for b a non-positive integer, summed to termination.
inline double hypergeometric_2f1_terminating(double a, double b, double c, double z) {
  if (!(b <= 0.0) || std::floor(b) != b) {
    throw DomainError(detail::concat(
        "hypergeometric_2f1_terminating: b must be a non-positive integer, got ", b));
  }
  const int terms = static_cast<int>(-b);
  double term = 1.0;
  detail::CompensatedSum sum;
  sum.add(term);
  for (int n = 0; n < terms; ++n) {
    term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z;
    sum.add(term);
  }
  return sum.value();
}

/// a_0^(l) = 1 − a_0^{(l−1)/2} a_1^{(l+1)/2} C(l, (l+1)/2) ₂F₁(1, (1−l)/2; (l+3)/2; −a_1/a_0).
inline double cg_a0_hypergeometric(const AVector& a, int l_cg) {
  detail::require_two_outcomes(a, "cg_a0_hypergeometric");
  if (l_cg < 1 || l_cg % 2 == 0) {
    throw DomainError(detail::concat(
        "cg_a0_hypergeometric: l_cg must be odd and positive, got ", l_cg));
  }
  const double a0 = a[0];
  const double a1 = a[1];
  if (a1 == 0.0) return 1.0;
  if (a0 == 0.0) return 0.0;
  const int h = (l_cg + 1) / 2;
  const double log_prefactor = (h - 1) * std::log(a0) + h * std::log(a1) +
                               std::lgamma(l_cg + 1.0) - std::lgamma(h + 1.0) -
                               std::lgamma(l_cg - h + 1.0);
  const double f = hypergeometric_2f1_terminating(1.0, (1.0 - l_cg) / 2.0,
                                                  (l_cg + 3.0) / 2.0, -a1 / a0);
  return 1.0 - std::exp(log_prefactor) * f;
}

/// D = −log(2√(a_0 a_1)), C = a_0/(a_0 − a_1), F = √(2/π) a_1 C.
inline AsymptoticParams asymptotic_params(const AVector& a) {
  detail::require_two_outcomes(a, "asymptotic_params");
  const double a0 = a[0];
  const double a1 = a[1];
  if (!(a0 > a1)) {
    throw SingularityError(detail::concat(
        "asymptotic_params: needs a_0 > a_1, got a = {", a0, ", ", a1, "}"));
  }
  if (a1 == 0.0) {
    throw SingularityError("asymptotic_params: D diverges for a_1 = 0");
  }
  AsymptoticParams p;
  p.d_rate = -std::log(2.0 * std::sqrt(a0 * a1));
  p.c_const = a0 / (a0 - a1);
  p.f_const = std::sqrt(2.0 / std::numbers::pi) * a1 * p.c_const;
  return p;
}

/// 1 − e^{−D(l−1)} F / √l.
inline double asymptotic_a0(const AVector& a, int l_cg) {
  detail::require_two_outcomes(a, "asymptotic_a0");
  if (l_cg < 3) {
    throw DomainError(detail::concat("asymptotic_a0: l_cg must be >= 3, got ", l_cg));
  }
  if (a[1] == 0.0 && a[0] > 0.0) return 1.0;
  const AsymptoticParams p = asymptotic_params(a);
  return 1.0 - std::exp(-p.d_rate * (l_cg - 1)) / std::sqrt(static_cast<double>(l_cg)) *
                   p.f_const;
}

inline CoarseGrainResult cg_metrics(const AVector& a, int l_cg, int n_observers,
                                    const ProbVector& p_s) {
  CoarseGrainResult r;
  r.l_cg = l_cg;
  r.avector_cg = cg_avector(a, l_cg);
  const Agreement agr = max_agreement(r.avector_cg, n_observers);
  r.gamma_cg = agr.gamma;
  r.delta_cg = agr.delta;
  r.bias_cg = optimal_bias(r.avector_cg, n_observers, p_s);
  detail::CompensatedSum rest;
  for (std::size_t x = 1; x < r.avector_cg.size(); ++x) rest.add(r.avector_cg[x]);
  r.one_minus_a0 = rest.value();
  return r;
}

/// cg_metrics for each l in `ls`, evaluated in parallel; output order follows `ls`.
inline std::vector<CoarseGrainResult> cg_sweep(const AVector& a, const std::vector<int>& ls,
                                               int n_observers, const ProbVector& p_s) {
  std::vector<CoarseGrainResult> out(ls.size());
  parallel_for(ls.size(), [&](std::size_t i) { out[i] = cg_metrics(a, ls[i], n_observers, p_s); });
  return out;
}

}  // namespace intersub
