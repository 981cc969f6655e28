#pragma once

// Instance constructors: seeded geometric markets on the unit square, the
// three-supply teaching example used throughout the test suite, and the
// standard rate profiles attached to them.

#include <cmath>
#include <cstdint>
#include <vector>

#include "matchlab/core.hpp"
#include "matchlab/market.hpp"
#include "matchlab/model.hpp"
#include "matchlab/rng.hpp"

namespace matchlab {

struct GeometricSpec {
  int n_d = 10;
  int n_s = 10;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_d < 1 || n_s < 1)
      throw InputError("GeometricSpec: n_d and n_s must be >= 1");
  }
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct GeometricInstance {
  MatchingInstance instance;
  std::uint64_t seed = 0;
  std::vector<Point> demand_points;
  std::vector<Point> supply_points;
};

// Match value between two unit-square locations: exp(-Euclidean distance),
// so values lie in (exp(-sqrt(2)), 1].
inline double geometric_value(const Point& a, const Point& b) {
  return std::exp(-std::hypot(a.x - b.x, a.y - b.y));
}

// Samples n_d demand and n_s supply locations uniformly in the unit square
// (one counter stream per point, so the layout is seed-stable) and scores
// every pair by proximity.
inline GeometricInstance gen_geometric(const GeometricSpec& spec) {
  spec.validate();
  GeometricInstance out;
  out.seed = spec.seed;
  out.demand_points.resize(spec.n_d);
  out.supply_points.resize(spec.n_s);
  for (int i = 0; i < spec.n_d; ++i) {
    auto r = detail::component_stream(spec.seed, 0, 0, StreamRole::Geometry,
                                      static_cast<std::uint64_t>(i));
    out.demand_points[i].x = r.next_double();
    out.demand_points[i].y = r.next_double();
  }
  for (int j = 0; j < spec.n_s; ++j) {
    auto r = detail::component_stream(
        spec.seed, 0, 0, StreamRole::Geometry,
        static_cast<std::uint64_t>(spec.n_d + j));
    out.supply_points[j].x = r.next_double();
    out.supply_points[j].y = r.next_double();
  }
  out.instance.n_d = spec.n_d;
  out.instance.n_s = spec.n_s;
  out.instance.v.resize(static_cast<std::size_t>(spec.n_d) * spec.n_s);
  for (int i = 0; i < spec.n_d; ++i)
    for (int j = 0; j < spec.n_s; ++j)
      out.instance.value(i, j) =
          geometric_value(out.demand_points[i], out.supply_points[j]);
  out.instance.validate();
  return out;
}

// Standard study rates: every demand type arrives at 13 (uplift 3), every
// supply type at gamma_ratio * 13, so gamma_ratio is the supply-to-baseline-
// demand ratio.
inline Rates default_rates(const MatchingInstance& inst, double gamma_ratio) {
  if (!(gamma_ratio > 0.0))
    throw InputError("default_rates: gamma_ratio must be > 0");
  Rates r;
  r.lambda = constant_vec(inst.n_d, 13.0);
  r.beta = constant_vec(inst.n_d, 3.0);
  r.gamma = constant_vec(inst.n_s, gamma_ratio * 13.0);
  r.validate(inst);
  return r;
}

// One demand type, three supply types with values 2, 1, 0.25 and capacities
// 1.5, 2, 2: small enough to solve by hand, rich enough to show every
// regime. Two rate presets (low and high baseline demand) share the
// instance; the default cost model takes 15% of treated match value.
struct PedagogicalCase {
  MatchingInstance instance;
  Rates low_demand;   // lambda = 1, uplift 3
  Rates high_demand;  // lambda = 3, uplift 2
  CostModel cost;
};

inline PedagogicalCase pedagogical_case() {
  PedagogicalCase pc;
  pc.instance.n_d = 1;
  pc.instance.n_s = 3;
  pc.instance.v = {2.0, 1.0, 0.25};
  pc.low_demand.lambda = {1.0};
  pc.low_demand.beta = {3.0};
  pc.low_demand.gamma = {1.5, 2.0, 2.0};
  pc.high_demand.lambda = {3.0};
  pc.high_demand.beta = {2.0};
  pc.high_demand.gamma = {1.5, 2.0, 2.0};
  pc.cost = CostModel::proportional(0.15);
  return pc;
}

// Flat-cost levels at 10%, 30% and 50% of the smallest match value; all
// strictly inside the admissible range kappa < min v.
inline std::vector<double> fixed_kappa_levels(const MatchingInstance& inst) {
  const double m = inst.min_value();
  return {0.1 * m, 0.3 * m, 0.5 * m};
}

}  // namespace matchlab
