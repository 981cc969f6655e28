#pragma once

// Market data model: a bipartite matching instance (demand types x supply
// types with strictly positive match values) and the treatment-cost models
// applied to treated demand, together with the weight/dual discounting
// transforms they induce.

#include <algorithm>
#include <cstdio>
#include <limits>
#include <string>

#include "matchlab/core.hpp"

namespace matchlab {

// A bipartite matching market: n_d demand types, n_s supply types, and a
// strictly positive match value v(i, j) for every pair.
struct MatchingInstance {
  int n_d = 0;
  int n_s = 0;
  Vec v;  // row-major, size n_d * n_s

  double value(int i, int j) const {
    return v[static_cast<std::size_t>(i) * n_s + j];
  }
  double& value(int i, int j) {
    return v[static_cast<std::size_t>(i) * n_s + j];
  }

  double min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (double x : v) m = std::min(m, x);
    return m;
  }

  void validate() const {
    if (n_d < 1 || n_s < 1)
      throw InputError("MatchingInstance: need at least one demand and one "
                       "supply type");
    if (v.size() != static_cast<std::size_t>(n_d) * n_s)
      throw InputError("MatchingInstance: value matrix has wrong size");
    for (double x : v)
      if (!(x > 0.0))
        throw InputError("MatchingInstance: match values must be strictly "
                         "positive");
  }
};

enum class CostKind { Proportional, Fixed };

inline const char* to_string(CostKind k) {
  return k == CostKind::Proportional ? "proportional" : "fixed";
}

// Treatment cost model. Proportional: a treated match at value v costs
// alpha * v (platform keeps (1 - alpha) * v). Fixed: a treated match costs a
// flat kappa, with 0 < kappa < min v so treated matches remain worthwhile.
struct CostModel {
  CostKind kind = CostKind::Proportional;
  double alpha = 0.0;  // used when kind == Proportional, in [0, 1)
  double kappa = 0.0;  // used when kind == Fixed, in (0, min v)

  static CostModel proportional(double alpha) {
    CostModel m;
    m.kind = CostKind::Proportional;
    m.alpha = alpha;
    return m;
  }
  static CostModel fixed(double kappa) {
    CostModel m;
    m.kind = CostKind::Fixed;
    m.kappa = kappa;
    return m;
  }

  // The parameter relevant for the active kind.
  double param() const {
    return kind == CostKind::Proportional ? alpha : kappa;
  }

  void validate() const {
    if (kind == CostKind::Proportional) {
      if (!(alpha >= 0.0 && alpha < 1.0))
        throw InputError("CostModel: alpha must lie in [0, 1)");
    } else {
      if (!(kappa > 0.0))
        throw InputError("CostModel: kappa must be strictly positive");
    }
  }

  void validate_for(const MatchingInstance& inst) const {
    validate();
    if (kind == CostKind::Fixed && !(kappa < inst.min_value()))
      throw InputError("CostModel: kappa must be smaller than the smallest "
                       "match value");
  }
};

// Match weights earned on treated demand: (1 - alpha) * v under the
// proportional model, v - kappa under the fixed model. Row-major like v.
inline Vec discounted_weights(const MatchingInstance& inst,
                              const CostModel& cm) {
  cm.validate_for(inst);
  Vec w(inst.v.size());
  if (cm.kind == CostKind::Proportional) {
    for (std::size_t k = 0; k < w.size(); ++k)
      w[k] = (1.0 - cm.alpha) * inst.v[k];
  } else {
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = inst.v[k] - cm.kappa;
  }
  return w;
}

struct DiscountedDuals {
  Vec demand;
  Vec supply;
};

// Transforms optimal duals of the undiscounted matching LP into optimal duals
// of the discounted one. Proportional costs scale both vectors by
// (1 - alpha). Fixed costs shift one side by kappa: the demand duals when
// total demand is strictly below total supply, otherwise the supply duals
// (the tie goes to the supply side). A resulting entry below -tolerance means
// the supplied duals were not optimal for the undiscounted problem.
inline DiscountedDuals discounted_duals(const CostModel& cm,
                                        const Vec& demand_dual,
                                        const Vec& supply_dual,
                                        double total_demand,
                                        double total_supply) {
  cm.validate();
  DiscountedDuals out;
  if (cm.kind == CostKind::Proportional) {
    out.demand = scale(demand_dual, 1.0 - cm.alpha);
    out.supply = scale(supply_dual, 1.0 - cm.alpha);
    return out;
  }

  auto shifted = [&](const Vec& x) {
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - cm.kappa;
    return r;
  };
  auto min_entry = [](const Vec& x) {
    double m = std::numeric_limits<double>::infinity();
    for (double v : x) m = std::min(m, v);
    return x.empty() ? 0.0 : m;
  };
  const bool demand_side = total_demand < total_supply;
  Vec primary = shifted(demand_side ? demand_dual : supply_dual);
  if (min_entry(primary) >= -kTol) {
    // Clamp the roundoff range [-tol, 0) so downstream feasibility checks
    // see a genuinely nonnegative dual.
    for (double& v : primary) v = std::max(v, 0.0);
    if (demand_side) {
      out.demand = std::move(primary);
      out.supply = supply_dual;
    } else {
      out.demand = demand_dual;
      out.supply = std::move(primary);
    }
    return out;
  }
  // An exact tie admits optimal duals concentrated on either side; if the
  // preferred supply shift fails on a tie, the demand shift may still be
  // valid for the same dual vector.
  if (!demand_side && total_demand == total_supply) {
    Vec alt = shifted(demand_dual);
    if (min_entry(alt) >= -kTol) {
      for (double& v : alt) v = std::max(v, 0.0);
      out.demand = std::move(alt);
      out.supply = supply_dual;
      return out;
    }
  }
  throw PreconditionError(
      "discounted_duals: fixed-cost shift produced a negative dual entry; "
      "the supplied duals are not optimal for the undiscounted problem");
}

}  // namespace matchlab
