#pragma once

// Exponential-decay fits y ≈ c0·e^{c1 x} by least squares on log y.

#include <cmath>
#include <span>
#include <vector>

#include "intersub/core.hpp"

namespace intersub {

struct FitResult {
  double c0 = 0.0;
  double c1 = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

class InsufficientDataError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// 1 − Σ(obs − fit)² / Σ(obs − mean)².
inline double r_squared(std::span<const double> observed, std::span<const double> fitted) {
  if (observed.size() != fitted.size()) {
    throw DimensionError(detail::concat("r_squared: ", observed.size(), " observations but ",
                                        fitted.size(), " fitted values"));
  }
  if (observed.size() < 2) throw InsufficientDataError("r_squared: needs at least two points");
  double mean = 0.0;
  for (double o : observed) mean += o;
  mean /= static_cast<double>(observed.size());
  double s_res = 0.0;
  double s_tot = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    s_res += (observed[i] - fitted[i]) * (observed[i] - fitted[i]);
    s_tot += (observed[i] - mean) * (observed[i] - mean);
  }
  if (s_tot == 0.0) throw SingularityError("r_squared: observed values have zero variance");
  return 1.0 - s_res / s_tot;
}

inline FitResult fit_exponential(std::span<const double> xs, std::span<const double> ys,
                                 std::size_t skip_first = 0) {
  if (xs.size() != ys.size()) {
    throw DimensionError(detail::concat("fit_exponential: ", xs.size(), " x values but ",
                                        ys.size(), " y values"));
  }
  if (xs.size() < skip_first + 3) {
    throw InsufficientDataError(detail::concat(
        "fit_exponential: needs at least 3 points after skipping ", skip_first, ", got ",
        xs.size() > skip_first ? xs.size() - skip_first : 0));
  }
  const auto x = xs.subspan(skip_first);
  const auto y = ys.subspan(skip_first);
  std::vector<double> log_y(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i]) || !std::isfinite(x[i])) {
      throw DomainError(detail::concat("fit_exponential: point ", i + skip_first,
                                       " has y = ", y[i], "; need finite y > 0"));
    }
    log_y[i] = std::log(y[i]);
  }

  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += log_y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (log_y[i] - my);
  }
  if (sxx == 0.0) throw SingularityError("fit_exponential: all x values coincide");

  FitResult r;
  r.c1 = sxy / sxx;
  const double intercept = my - r.c1 * mx;
  r.c0 = std::exp(intercept);
  r.n_points = x.size();
  std::vector<double> fitted(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) fitted[i] = intercept + r.c1 * x[i];
  r.r_squared = r_squared(log_y, fitted);
  return r;
}

}  // namespace intersub
