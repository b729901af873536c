#pragma once

// Probability-vector primitives, error types and a small deterministic
// parallel-for shared by every other header in the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <initializer_list>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace intersub {

// Input validation tolerance on Σp = 1.
inline constexpr double kInputTolerance = 1e-9;
// Tolerance used when checking exact identities after floating-point work.
inline constexpr double kIdentityTolerance = 1e-12;

// ---------------------------------------------------------------------------
// Errors. Every error carries the process exit code the CLI maps it to.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 3; }
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 5; }
};

namespace detail {

template <class... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  os.precision(17);
  (os << ... << std::forward<Args>(args));
  return os.str();
}

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Distribution<Tag>: a validated probability vector. The tag separates the
// system distribution p_S (and local outcome statistics) from the pointer
// subspace traces a_x, which share the same invariants but not the same role.

template <class Tag>
class Distribution {
 public:
  Distribution() = default;

  /// Validates `values`: every entry in [0, 1] and |Σ − 1| ≤ tolerance.
  static Distribution validate(std::vector<double> values,
                               double tolerance = kInputTolerance) {
    if (values.empty()) throw ValidationError("probability vector is empty");
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double v = values[i];
      if (!std::isfinite(v)) {
        throw ValidationError(detail::concat("entry ", i, " is not finite"));
      }
      if (v < 0.0) {
        throw ValidationError(
            detail::concat("entry ", i, " is negative (", v, ")"));
      }
      if (v > 1.0 + tolerance) {
        throw ValidationError(
            detail::concat("entry ", i, " exceeds 1 (", v, ")"));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw ValidationError(
          detail::concat("entries sum to ", sum, ", expected 1"));
    }
    for (double& v : values) v = std::min(v, 1.0);
    Distribution d;
    d.values_ = std::move(values);
    return d;
  }

  static Distribution validate(std::initializer_list<double> values) {
    return validate(std::vector<double>(values));
  }

  template <class OtherTag>
  static Distribution from(const Distribution<OtherTag>& other) {
    Distribution d;
    d.values_ = other.values();
    return d;
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  std::vector<double> values_;
};

struct ProbTag;
struct TraceTag;

/// System distribution p_S(x) and local outcome statistics.
using ProbVector = Distribution<ProbTag>;
/// Pointer subspace traces a_x = tr A_x.
using AVector = Distribution<TraceTag>;

inline ProbVector validate_prob(std::vector<double> raw) {
  return ProbVector::validate(std::move(raw));
}

inline AVector validate_avector(std::vector<double> raw) {
  return AVector::validate(std::move(raw));
}

/// ½ Σ_x |p_x − q_x|.
template <class TagP, class TagQ>
double total_variation(const Distribution<TagP>& p,
                       const Distribution<TagQ>& q) {
  if (p.size() != q.size()) {
    throw DimensionError(detail::concat("total_variation: lengths ", p.size(),
                                        " and ", q.size(), " differ"));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

// ---------------------------------------------------------------------------
// Worker pool sizing and a deterministic parallel-for. Each index writes only
// its own output slot, so results do not depend on the worker count.

/// INTERSUB_THREADS caps the worker count; default is hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("INTERSUB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return hw;
}

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned workers = worker_count()) {
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace intersub
