#pragma once

// Shared error taxonomy, numeric tolerances, and small vector helpers used
// across the matchlab headers.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace matchlab {

// Absolute/relative tolerance used for feasibility, duality and equality
// checks throughout the library. Violation magnitudes are measured relative
// to max(1, problem scale) so the same constant works from unit-sized
// pedagogical problems up to tau-scaled sampled states.
inline constexpr double kTol = 1e-9;

// Threshold for a simplex pivot to be considered improving. Kept well below
// kTol so that reported solutions satisfy the public tolerance with margin.
inline constexpr double kPivotTol = 1e-11;

// Relative input perturbation used when evaluating one-sided (directional)
// dual solutions along a parametric path.
inline constexpr double kSideEps = 1e-7;

// Scale-free threshold for treating left and right directional slopes (or
// duals) as different, i.e. for declaring a kink of a piecewise-linear value
// function: |left - right| > kKinkTol * (1 + magnitude).
inline constexpr double kKinkTol = 1e-6;

// Invalid user-supplied configuration: bad field values, unknown JSON keys,
// rho outside the open unit interval for estimators, and similar.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally invalid inputs to library operations (dimension mismatches,
// negative rates, non-positive match values, ...).
struct InputError : std::runtime_error {
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Input outside the supported scope of an exact oracle (e.g. the enumeration
// solver only accepts small integer instances).
struct ScopeError : std::runtime_error {
  explicit ScopeError(const std::string& what) : std::runtime_error(what) {}
};

// A mathematical precondition of an operation was violated by the supplied
// data (e.g. dual discounting applied to a non-optimal dual).
struct PreconditionError : std::runtime_error {
  explicit PreconditionError(const std::string& what)
      : std::runtime_error(what) {}
};

// Invariant failure inside the library itself; indicates a bug, not bad input.
struct InternalError : std::runtime_error {
  explicit InternalError(const std::string& what) : std::runtime_error(what) {}
};

using Vec = std::vector<double>;

inline double sum(const Vec& x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc;
}

inline double dot(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw InternalError("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

inline Vec add(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw InternalError("add: size mismatch");
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i];
  return r;
}

inline Vec scale(const Vec& x, double c) {
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = c * x[i];
  return r;
}

inline Vec constant_vec(std::size_t n, double c) { return Vec(n, c); }

// True when |a - b| <= tol * max(1, |a|, |b|).
inline bool close(double a, double b, double tol = kTol) {
  double scale = std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
  return std::fabs(a - b) <= tol * scale;
}

inline double max_abs(const Vec& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace matchlab
