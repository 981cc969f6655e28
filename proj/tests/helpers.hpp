#pragma once

// Shared helpers for the test suites: deterministic random problem
// generation and readable failure text for optimality certificates.

#include <string>
#include <vector>

#include "matchlab/lp.hpp"
#include "matchlab/model.hpp"
#include "matchlab/rng.hpp"

namespace testutil {

inline matchlab::MatchingInstance make_instance(int n_d, int n_s,
                                                matchlab::Vec v) {
  matchlab::MatchingInstance m;
  m.n_d = n_d;
  m.n_s = n_s;
  m.v = std::move(v);
  m.validate();
  return m;
}

inline double uniform(matchlab::RngStream& r, double lo, double hi) {
  return lo + (hi - lo) * r.next_double();
}

// Values in [0.2, 3]: strictly positive with a known floor, so fixed-cost
// models with kappa < 0.2 are always admissible.
inline matchlab::MatchingInstance random_instance(matchlab::RngStream& r,
                                                  int n_d, int n_s) {
  matchlab::Vec v(static_cast<std::size_t>(n_d) * n_s);
  for (double& x : v) x = uniform(r, 0.2, 3.0);
  return make_instance(n_d, n_s, std::move(v));
}

inline matchlab::Vec random_caps(matchlab::RngStream& r, int n, double lo,
                                 double hi) {
  matchlab::Vec c(n);
  for (double& x : c) x = uniform(r, lo, hi);
  return c;
}

// Rescales `caps` so its total equals `target_total`.
inline matchlab::Vec with_total(matchlab::Vec caps, double target_total) {
  const double t = matchlab::sum(caps);
  for (double& x : caps) x *= target_total / t;
  return caps;
}

inline std::string kkt_text(const std::vector<matchlab::KktViolation>& v) {
  std::string s;
  for (const auto& k : v)
    s += k.what + " (magnitude " + std::to_string(k.magnitude) + "); ";
  return s.empty() ? "certified optimal" : s;
}

}  // namespace testutil
