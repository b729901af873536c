#pragma once

// Thermal pointer weights and the greedy assignment of pointer eigenvectors
// to outcome subspaces D_x that maximises the subspace traces a_x.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "intersub/core.hpp"

namespace intersub {

struct PointerSpec {
  std::vector<double> energies;
  double beta = 1.0;
  std::vector<int> subspace_dims;
};

struct Partition {
  // assignment[x] lists the eigenvector indices in D_x, heaviest first.
  std::vector<std::vector<std::size_t>> assignment;
  // Raw traces Σ_{i∈D_x} w_i (renormalized only on request).
  std::vector<double> traces;
  // Weight left outside every D_x when Σ dim D_x < pointer dimension.
  double residual = 0.0;
  bool renormalized = false;
  // Number of pointer levels, including any left outside every D_x.
  std::size_t pointer_levels = 0;

  std::size_t outcomes() const noexcept { return assignment.size(); }

  /// The traces as an AVector. Throws when leftover weight was neither
  /// covered nor renormalized away.
  AVector avector() const {
    if (residual > kInputTolerance && !renormalized) {
      throw ValidationError(detail::concat(
          "partition leaves residual weight ", residual,
          " outside every subspace; request renormalization"));
    }
    return AVector::validate(traces);
  }
};

/// w_i = e^{−β(E_i − E_min)} / Σ_j e^{−β(E_j − E_min)}.
inline ProbVector boltzmann_weights(std::span<const double> energies,
                                    double beta) {
  if (energies.empty()) throw DomainError("boltzmann_weights: no energies");
  if (!std::isfinite(beta) || beta < 0.0) {
    throw DomainError(detail::concat(
        "boltzmann_weights: beta must be finite and >= 0, got ", beta));
  }
  for (double e : energies) {
    if (!std::isfinite(e)) throw DomainError("boltzmann_weights: non-finite energy");
  }
  const double e_min = *std::min_element(energies.begin(), energies.end());
  std::vector<double> w(energies.size());
  double z = 0.0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    w[i] = std::exp(-beta * (energies[i] - e_min));
    z += w[i];
  }
  for (double& v : w) v /= z;
  return ProbVector::validate(std::move(w));
}

/// Fills the subspaces, largest dimension first (ties by outcome index),
/// with the largest remaining weights (ties by eigenvector index).
inline Partition greedy_partition(const ProbVector& weights,
                                  std::span<const int> subspace_dims,
                                  bool renormalize = false) {
  if (subspace_dims.empty()) {
    throw DimensionError("greedy_partition: no outcome subspaces");
  }
  std::size_t total = 0;
  for (std::size_t x = 0; x < subspace_dims.size(); ++x) {
    if (subspace_dims[x] < 1) {
      throw DimensionError(detail::concat("greedy_partition: subspace ", x,
                                          " has dimension ", subspace_dims[x]));
    }
    total += static_cast<std::size_t>(subspace_dims[x]);
  }
  if (total > weights.size()) {
    throw DimensionError(detail::concat("greedy_partition: subspace dimensions sum to ",
                                        total, " but the pointer has ",
                                        weights.size(), " levels"));
  }

  std::vector<std::size_t> by_weight(weights.size());
  std::iota(by_weight.begin(), by_weight.end(), std::size_t{0});
  std::stable_sort(by_weight.begin(), by_weight.end(),
                   [&](std::size_t i, std::size_t j) { return weights[i] > weights[j]; });

  std::vector<std::size_t> fill_order(subspace_dims.size());
  std::iota(fill_order.begin(), fill_order.end(), std::size_t{0});
  std::stable_sort(fill_order.begin(), fill_order.end(), [&](std::size_t x, std::size_t y) {
    return subspace_dims[x] > subspace_dims[y];
  });

  Partition p;
  p.pointer_levels = weights.size();
  p.assignment.resize(subspace_dims.size());
  p.traces.assign(subspace_dims.size(), 0.0);
  std::size_t next = 0;
  for (std::size_t x : fill_order) {
    for (int k = 0; k < subspace_dims[x]; ++k) {
      const std::size_t idx = by_weight[next++];
      p.assignment[x].push_back(idx);
      p.traces[x] += weights[idx];
    }
  }
  for (; next < by_weight.size(); ++next) p.residual += weights[by_weight[next]];

  if (renormalize && p.residual > 0.0) {
    const double covered = std::accumulate(p.traces.begin(), p.traces.end(), 0.0);
    if (!(covered > 0.0)) {
      throw SingularityError("greedy_partition: subspaces carry no weight to renormalize");
    }
    for (double& t : p.traces) t /= covered;
    p.renormalized = true;
  }
  return p;
}

inline Partition partition_pointer(const PointerSpec& spec, bool renormalize = false) {
  return greedy_partition(boltzmann_weights(spec.energies, spec.beta),
                          spec.subspace_dims, renormalize);
}

}  // namespace intersub
