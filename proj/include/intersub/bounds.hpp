#pragma once

// Closed-form finite-resource bounds for biased joint information
// broadcasting: maximal agreement γ = Σ a_x^N, the noise distribution m*,
// the optimal bias and the local outcome probabilities of every observer.

#include <cmath>
#include <optional>
#include <vector>

#include "intersub/core.hpp"

namespace intersub {

// m* is only exposed when δ exceeds this; below it the 0/0 is unresolvable.
inline constexpr double kSingularDelta = 1e-14;

struct Agreement {
  double gamma = 1.0;
  double delta = 0.0;
};

struct BoundReport {
  double gamma = 1.0;
  double delta = 0.0;
  std::optional<ProbVector> mstar;  // absent in the ideal (δ = 0) case
  double bias = 0.0;
  ProbVector local_probs;
};

namespace detail {

inline void require_observers(int n_p, int minimum, const char* what) {
  if (n_p < minimum) {
    throw DomainError(concat(what, ": observer count must be >= ", minimum,
                             ", got ", n_p));
  }
}

template <class TagA, class TagB>
void require_same_length(const Distribution<TagA>& a,
                         const Distribution<TagB>& b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(concat(what, ": a has ", a.size(),
                                " outcomes but p_s has ", b.size()));
  }
}

}  // namespace detail

/// γ = Σ_x a_x^{n_p}, δ = 1 − γ.
inline Agreement max_agreement(const AVector& a, int n_p) {
  detail::require_observers(n_p, 1, "max_agreement");
  double gamma = 0.0;
  for (double ax : a) gamma += std::pow(ax, n_p);
  return {gamma, 1.0 - gamma};
}

/// S_q(p) = (1 − Σ p_i^q) / (q − 1) for q > 1.
template <class Tag>
double tsallis_entropy(const Distribution<Tag>& p, double q) {
  if (!(q > 1.0)) {
    throw DomainError(detail::concat("tsallis_entropy: q must exceed 1, got ", q));
  }
  double s = 0.0;
  for (double pi : p) s += std::pow(pi, q);
  return (1.0 - s) / (q - 1.0);
}

/// m*_x = a_x (1 − a_x^{n_p−1}) / (1 − γ).
inline ProbVector noise_distribution(const AVector& a, int n_p) {
  detail::require_observers(n_p, 2, "noise_distribution");
  const Agreement agr = max_agreement(a, n_p);
  if (!(agr.delta > kSingularDelta)) {
    throw SingularityError(
        "noise_distribution: m* is undefined for an ideal pointer (delta = 0)");
  }
  std::vector<double> m(a.size());
  for (std::size_t x = 0; x < a.size(); ++x) {
    m[x] = (a[x] - std::pow(a[x], n_p)) / agr.delta;
  }
  return ProbVector::validate(std::move(m));
}

/// p̃_x = γ p_S(x) + a_x − a_x^{n_p}; identical for every observer.
inline ProbVector local_probabilities(const AVector& a, int n_p,
                                      const ProbVector& p_s) {
  detail::require_observers(n_p, 1, "local_probabilities");
  detail::require_same_length(a, p_s, "local_probabilities");
  const double gamma = max_agreement(a, n_p).gamma;
  std::vector<double> p(a.size());
  for (std::size_t x = 0; x < a.size(); ++x) {
    p[x] = gamma * p_s[x] + (a[x] - std::pow(a[x], n_p));
  }
  return ProbVector::validate(std::move(p));
}

/// β = δ · D_T(p_S, m*), evaluated as ½ Σ_x |a_x − a_x^{n_p} − δ p_S(x)| so
/// the ideal limit is exactly zero.
inline double optimal_bias(const AVector& a, int n_p, const ProbVector& p_s) {
  detail::require_observers(n_p, 1, "optimal_bias");
  detail::require_same_length(a, p_s, "optimal_bias");
  const double delta = max_agreement(a, n_p).delta;
  double acc = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x) {
    acc += std::abs(a[x] - std::pow(a[x], n_p) - delta * p_s[x]);
  }
  return 0.5 * acc;
}

inline BoundReport bound_report(const AVector& a, int n_p,
                                const ProbVector& p_s) {
  BoundReport r;
  const Agreement agr = max_agreement(a, n_p);
  r.gamma = agr.gamma;
  r.delta = agr.delta;
  if (n_p >= 2 && agr.delta > kSingularDelta) r.mstar = noise_distribution(a, n_p);
  r.bias = optimal_bias(a, n_p, p_s);
  r.local_probs = local_probabilities(a, n_p, p_s);
  return r;
}

}  // namespace intersub
