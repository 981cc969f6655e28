#pragma once

// Parametric analysis along the experiment path eta -> Phi((1-eta)*lambda,
// eta*(lambda+beta), gamma): value profiles with one-sided slopes, supply
// scaling constructions (low-supply and near-saturation regimes), and
// executable checkers for the bias-comparison results. Each checker returns
// a TheoremReport carrying the evaluated inequalities as witnesses instead
// of asserting, so callers (tests, the verify subcommand) decide how to
// fail.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "matchlab/core.hpp"
#include "matchlab/estimators.hpp"
#include "matchlab/lp.hpp"
#include "matchlab/market.hpp"
#include "matchlab/model.hpp"

namespace matchlab {

enum class Side { Left, Right };

// Group duals of the experiment-path problem adjacent to a point. The
// underlying value function is piecewise linear in eta, so duals are
// piecewise constant and a one-sided perturbation returns the neighboring
// segment's exact duals.
using PathDuals = detail::DirectionalCiDuals;

inline PathDuals duals_at(const MatchingInstance& inst, const Rates& rates,
                          const CostModel& cm, double eta, Side side) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw InputError("duals_at: eta must lie in [0, 1]");
  const double offset = side == Side::Left ? -kSideEps : kSideEps;
  return detail::ci_duals_near(inst, rates, cm, eta, offset);
}

// Directional derivative of the path value implied by a set of group duals.
inline double path_slope(const Rates& rates, const PathDuals& d) {
  return dot(d.demand_tre, rates.treated_rate()) -
         dot(d.demand_con, rates.lambda);
}

// Pooled (single-group, gross-value) solve along the demand path
// lambda + eta*beta, perturbed toward the interior of the requested side.
inline CeSolution ce_duals_at(const MatchingInstance& inst, const Rates& rates,
                              double eta, Side side) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw InputError("ce_duals_at: eta must lie in [0, 1]");
  double e = eta + (side == Side::Left ? -kSideEps : kSideEps);
  e = std::min(1.0, std::max(0.0, e));
  CeProblem p;
  p.instance = inst;
  p.d = add(rates.lambda, scale(rates.beta, e));
  p.s = rates.gamma;
  return solve_ce(p);
}

// Per-demand-type average gross value and match rate of a pooled solve.
struct CeAverages {
  Vec vbar;  // average matched value per demand unit, by type
  Vec xbar;  // matched fraction per demand unit, by type
  bool degenerate = false;
};

inline CeAverages ce_averages(const MatchingInstance& inst, const Vec& demand,
                              const Vec& supply) {
  CeProblem p;
  p.instance = inst;
  p.d = demand;
  p.s = supply;
  const CeSolution sol = solve_ce(p);
  CeAverages out;
  out.vbar.assign(inst.n_d, 0.0);
  out.xbar.assign(inst.n_d, 0.0);
  out.degenerate = sol.degenerate;
  for (int i = 0; i < inst.n_d; ++i) {
    if (demand[i] <= 0.0) continue;
    double vx = 0.0, xm = 0.0;
    for (int j = 0; j < inst.n_s; ++j) {
      const double f = sol.flow[static_cast<std::size_t>(i) * inst.n_s + j];
      vx += inst.value(i, j) * f;
      xm += f;
    }
    out.vbar[i] = vx / demand[i];
    out.xbar[i] = xm / demand[i];
  }
  return out;
}

// Value profile of the experiment path on a uniform grid, with one-sided
// slopes from adjacent-segment duals, detected kink locations, and the
// integral of the slopes over [0, 1]. Cells whose endpoint slopes disagree
// contain a kink; the integral splits such cells at the intersection of the
// two segment lines, which is exact for a piecewise-linear profile.
struct PathProfile {
  Vec etas;
  Vec values;
  Vec left_slopes;
  Vec right_slopes;
  std::vector<double> breakpoints;
  double slope_integral = 0.0;
};

inline PathProfile path_profile(const MatchingInstance& inst,
                                const Rates& rates, const CostModel& cm,
                                int grid_size) {
  if (grid_size < 3) throw InputError("path_profile: grid_size must be >= 3");
  rates.validate(inst);
  cm.validate_for(inst);
  PathProfile pp;
  pp.etas.resize(grid_size);
  pp.values.resize(grid_size);
  pp.left_slopes.resize(grid_size);
  pp.right_slopes.resize(grid_size);
  for (int k = 0; k < grid_size; ++k) {
    const double eta = static_cast<double>(k) / (grid_size - 1);
    pp.etas[k] = eta;
    const PathState ps = ci_path_state(rates, eta);
    pp.values[k] =
        detail::solve_experiment_ci(inst, cm, ps.d_con, ps.d_tre, rates.gamma)
            .objective;
    pp.left_slopes[k] =
        path_slope(rates, duals_at(inst, rates, cm, eta, Side::Left));
    pp.right_slopes[k] =
        path_slope(rates, duals_at(inst, rates, cm, eta, Side::Right));
  }

  const double vscale = 1.0 + max_abs(pp.values);
  for (int k = 1; k + 1 < grid_size; ++k) {
    const double second =
        pp.values[k + 1] - 2.0 * pp.values[k] + pp.values[k - 1];
    if (second > kTol * vscale)
      throw InternalError("path_profile: value sequence is not concave");
  }
  for (int k = 0; k < grid_size; ++k) {
    const double sscale =
        1.0 + std::max(std::fabs(pp.left_slopes[k]),
                       std::fabs(pp.right_slopes[k]));
    if (pp.left_slopes[k] < pp.right_slopes[k] - kTol * sscale)
      throw InternalError("path_profile: left slope below right slope");
    if (std::fabs(pp.left_slopes[k] - pp.right_slopes[k]) > kKinkTol * sscale)
      pp.breakpoints.push_back(pp.etas[k]);
  }

  double integral = 0.0;
  for (int k = 0; k + 1 < grid_size; ++k) {
    const double e0 = pp.etas[k], e1 = pp.etas[k + 1];
    const double s0 = pp.right_slopes[k], s1 = pp.left_slopes[k + 1];
    const double sscale = 1.0 + std::max(std::fabs(s0), std::fabs(s1));
    if (std::fabs(s0 - s1) <= kKinkTol * sscale) {
      integral += 0.5 * (s0 + s1) * (e1 - e0);
      continue;
    }
    // Lines through (e0, value0) with slope s0 and (e1, value1) with slope
    // s1 meet at the kink.
    double c = (pp.values[k + 1] - pp.values[k] + s0 * e0 - s1 * e1) /
               (s0 - s1);
    c = std::min(e1, std::max(e0, c));
    integral += s0 * (c - e0) + s1 * (e1 - c);
    pp.breakpoints.push_back(c);
  }
  std::sort(pp.breakpoints.begin(), pp.breakpoints.end());
  pp.slope_integral = integral;
  return pp;
}

// One evaluated inequality or equality: lhs/rhs are the two compared sides.
struct Witness {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

struct TheoremReport {
  std::string id;
  bool applicable = true;
  bool holds = true;
  std::vector<Witness> witnesses;
  std::string note;

  void add(const std::string& name, double lhs, double rhs, bool ok) {
    witnesses.push_back(Witness{name, lhs, rhs, ok});
    if (!ok) holds = false;
  }
};

namespace detail {

inline Rates with_scaled_supply(const Rates& rates, double factor) {
  Rates r = rates;
  r.gamma = scale(rates.gamma, factor);
  return r;
}

inline double min_of(const Vec& x) {
  return *std::min_element(x.begin(), x.end());
}

}  // namespace detail

// Unique highest-value supply type per demand type; exact value ties make
// the saturation constructions ill-posed and are rejected.
inline std::vector<int> top_choice_map(const MatchingInstance& inst) {
  std::vector<int> top(inst.n_d, 0);
  for (int i = 0; i < inst.n_d; ++i) {
    int arg = 0;
    double best = inst.value(i, 0);
    int ties = 1;
    for (int j = 1; j < inst.n_s; ++j) {
      const double v = inst.value(i, j);
      if (v > best) {
        best = v;
        arg = j;
        ties = 1;
      } else if (v == best) {
        ++ties;
      }
    }
    if (ties > 1)
      throw PreconditionError(
          "top_choice_map: highest-value supply type is not unique for some "
          "demand type");
    top[i] = arg;
  }
  return top;
}

// Supply-scaling landmarks for a fixed gamma profile:
//  - gamma_low_threshold: total supply below which every supply unit is
//    absorbed by control demand alone (the deep-undersupply regime);
//  - gamma_m / scale_m: smallest total supply (profile scale) at which the
//    all-treated market matches every demand unit to its top supply choice;
//  - gamma_0 / scale_0: (1 - epsilon) * gamma_m with epsilon shrunk until
//    exactly one demand type falls short of its top choice in the
//    all-treated market while the experiment state at the given rho still
//    matches every type at its top choice with slack supply everywhere.
struct GammaRegimes {
  double gamma_low_threshold = 0.0;
  double scale_low = 0.0;
  double gamma_m = 0.0;
  double scale_m = 0.0;
  double gamma_0 = 0.0;
  double scale_0 = 0.0;
  double epsilon = 0.0;
  int short_type = -1;
  std::vector<int> top_choice;
};

namespace detail {

inline bool all_top_saturated(const MatchingInstance& inst,
                              const CostModel& cm, const Vec& demand,
                              const Vec& supply, const std::vector<int>& top) {
  const CeSolution sol = solve_all_treated(inst, cm, demand, supply);
  const double tol = kTol * std::max(1.0, sum(demand));
  for (int i = 0; i < inst.n_d; ++i) {
    const double f =
        sol.flow[static_cast<std::size_t>(i) * inst.n_s + top[i]];
    if (f < demand[i] - tol) return false;
  }
  return true;
}

// True when both experiment groups are fully matched at their top choices
// and every supply type keeps strictly slack capacity.
inline bool experiment_top_saturated_with_slack(const MatchingInstance& inst,
                                                const CostModel& cm,
                                                const Rates& rates, double rho,
                                                double supply_factor,
                                                const std::vector<int>& top) {
  const PathState ps = ci_path_state(rates, rho);
  const Vec supply = scale(rates.gamma, supply_factor);
  const CiSolution sol =
      solve_experiment_ci(inst, cm, ps.d_con, ps.d_tre, supply);
  const double dtol =
      kTol * std::max(1.0, sum(ps.d_con) + sum(ps.d_tre));
  Vec used(inst.n_s, 0.0);
  for (int i = 0; i < inst.n_d; ++i) {
    double con_top = 0.0, tre_top = 0.0;
    for (int j = 0; j < inst.n_s; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * inst.n_s + j;
      used[j] += sol.flow_con[k] + sol.flow_tre[k];
      if (j == top[i]) {
        con_top = sol.flow_con[k];
        tre_top = sol.flow_tre[k];
      }
    }
    if (con_top < ps.d_con[i] - dtol) return false;
    if (tre_top < ps.d_tre[i] - dtol) return false;
  }
  const double stol = kTol * std::max(1.0, sum(supply));
  for (int j = 0; j < inst.n_s; ++j)
    if (used[j] > supply[j] - stol) return false;
  return true;
}

}  // namespace detail

inline GammaRegimes find_gamma_regimes(const MatchingInstance& inst,
                                       const Rates& rates, const CostModel& cm,
                                       double rho) {
  rates.validate(inst);
  cm.validate_for(inst);
  detail::check_rho_interior(rho);
  GammaRegimes out;
  out.top_choice = top_choice_map(inst);
  const Vec treated = rates.treated_rate();
  if (sum(treated) <= 0.0)
    throw PreconditionError(
        "find_gamma_regimes: saturation threshold undefined without treated "
        "demand");

  out.gamma_low_threshold = (1.0 - rho) * detail::min_of(rates.lambda);
  out.scale_low = out.gamma_low_threshold > 0.0
                      ? 0.5 * out.gamma_low_threshold / sum(rates.gamma)
                      : 0.0;

  // Closed-form saturation scale: each supply type must cover the treated
  // demand of the types whose top choice it is.
  double tstar = 0.0;
  for (int j = 0; j < inst.n_s; ++j) {
    double claim = 0.0;
    for (int i = 0; i < inst.n_d; ++i)
      if (out.top_choice[i] == j) claim += treated[i];
    if (claim > 0.0) tstar = std::max(tstar, claim / rates.gamma[j]);
  }

  const auto saturated = [&](double t) {
    return detail::all_top_saturated(inst, cm, treated,
                                     scale(rates.gamma, t), out.top_choice);
  };
  double hi = 1.0;
  int guard = 0;
  while (!saturated(hi)) {
    hi *= 2.0;
    if (++guard > 80)
      throw PreconditionError(
          "find_gamma_regimes: saturation never reached while doubling the "
          "supply scale up to " + std::to_string(hi));
  }
  double lo = hi / 2.0;
  guard = 0;
  while (saturated(lo)) {
    hi = lo;
    lo /= 2.0;
    if (++guard > 1100)
      throw PreconditionError(
          "find_gamma_regimes: saturation persists down to scale " +
          std::to_string(lo));
  }
  while (hi - lo > 1e-9 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (saturated(mid))
      hi = mid;
    else
      lo = mid;
  }
  out.scale_m = hi;
  out.gamma_m = hi * sum(rates.gamma);
  if (!close(out.scale_m, tstar, 1e-6))
    throw InternalError(
        "find_gamma_regimes: bisected saturation scale disagrees with the "
        "per-supply claim bound");

  double eps = 1e-3;
  bool found = false;
  for (int iter = 0; iter < 60 && !found; ++iter, eps /= 2.0) {
    const double t0 = (1.0 - eps) * out.scale_m;
    const CeSolution sol = detail::solve_all_treated(
        inst, cm, treated, scale(rates.gamma, t0));
    const double tol = kTol * std::max(1.0, sum(treated));
    int short_count = 0;
    int short_i = -1;
    for (int i = 0; i < inst.n_d; ++i) {
      const double f =
          sol.flow[static_cast<std::size_t>(i) * inst.n_s +
                   out.top_choice[i]];
      if (treated[i] > 0.0 && f < treated[i] - tol) {
        ++short_count;
        short_i = i;
      }
    }
    if (short_count != 1) continue;
    if (!detail::experiment_top_saturated_with_slack(inst, cm, rates, rho, t0,
                                                     out.top_choice))
      continue;
    out.epsilon = eps;
    out.scale_0 = t0;
    out.gamma_0 = t0 * sum(rates.gamma);
    out.short_type = short_i;
    found = true;
  }
  if (!found)
    throw PreconditionError(
        "find_gamma_regimes: could not isolate a single short demand type "
        "below the saturation scale");
  return out;
}

// Low-supply and near-saturation behavior of the cost-included RCT
// estimator: negative bias plus an exact closed form for the relative bias
// below the deep-undersupply threshold, positive bias just below supply
// saturation.
inline TheoremReport check_thm_rct_ci_regimes(const MatchingInstance& inst,
                                              const Rates& rates,
                                              const CostModel& cm,
                                              double rho) {
  TheoremReport rep;
  rep.id = "rct-ci-supply-regimes";
  rates.validate(inst);
  cm.validate_for(inst);
  detail::check_rho_interior(rho);

  const double min_lambda = detail::min_of(rates.lambda);
  if (min_lambda <= 0.0) {
    rep.applicable = false;
    rep.note = "deep-undersupply regime requires min lambda > 0";
    return rep;
  }

  const double t_low =
      0.5 * (1.0 - rho) * min_lambda / sum(rates.gamma);
  const Rates low = detail::with_scaled_supply(rates, t_low);
  const double gte = gte_fluid(inst, low, cm);
  const double rct =
      estimate_fluid(EstimatorKind::RctCi, inst, low, cm, rho).value;
  const double bias = rct - gte;
  rep.add("low_supply_bias_negative", bias, 0.0, bias < 0.0);

  if (std::fabs(gte) > 0.0) {
    const double rel = bias / std::fabs(gte);
    double closed = 0.0;
    if (cm.kind == CostKind::Proportional) {
      closed = 1.0 - 1.0 / (cm.alpha * (1.0 - rho));
    } else {
      double value_rate = 0.0;  // sum over supply of rate times top value
      for (int j = 0; j < inst.n_s; ++j) {
        double best = 0.0;
        for (int i = 0; i < inst.n_d; ++i)
          best = std::max(best, inst.value(i, j));
        value_rate += low.gamma[j] * best;
      }
      closed = 1.0 - value_rate / ((1.0 - rho) * cm.kappa * sum(low.gamma));
    }
    rep.add("low_supply_relative_bias_matches", rel, closed,
            close(rel, closed, 1e-9));
  }

  try {
    const GammaRegimes gr = find_gamma_regimes(inst, rates, cm, rho);
    const Rates near = detail::with_scaled_supply(rates, gr.scale_0);
    const double gte0 = gte_fluid(inst, near, cm);
    const double rct0 =
        estimate_fluid(EstimatorKind::RctCi, inst, near, cm, rho).value;
    rep.add("near_saturation_bias_positive", rct0 - gte0, 0.0,
            rct0 - gte0 > 0.0);
  } catch (const PreconditionError& e) {
    rep.note = std::string("near-saturation construction unavailable: ") +
               e.what();
  }
  return rep;
}

// Treatment-cost intensity relative to the smallest match value; determines
// the treated-fraction threshold under which the shadow-price estimator
// provably reduces bias.
inline double cost_intensity(const MatchingInstance& inst,
                             const CostModel& cm) {
  return cm.kind == CostKind::Proportional ? cm.alpha
                                           : cm.kappa / inst.min_value();
}

inline double sp_ce_rho_threshold(const MatchingInstance& inst,
                                  const CostModel& cm) {
  const double zeta = cost_intensity(inst, cm);
  return (1.0 - zeta) / (2.0 - zeta);
}

inline TheoremReport check_thm_sp_ce_reduction(const MatchingInstance& inst,
                                               const Rates& rates,
                                               const CostModel& cm,
                                               double rho) {
  TheoremReport rep;
  rep.id = "sp-ce-reduces-bias";
  rates.validate(inst);
  cm.validate_for(inst);
  detail::check_rho_interior(rho);
  const double threshold = sp_ce_rho_threshold(inst, cm);
  if (rho > threshold) {
    rep.applicable = false;
    rep.note = "no claim: rho " + std::to_string(rho) +
               " exceeds the bias-reduction threshold " +
               std::to_string(threshold);
    return rep;
  }
  const double gte = gte_fluid(inst, rates, cm);
  const double rct =
      estimate_fluid(EstimatorKind::RctCe, inst, rates, cm, rho).value;
  const double sp =
      estimate_fluid(EstimatorKind::SpCe, inst, rates, cm, rho).value;
  rep.add("abs_sp_bias_le_rct_bias", std::fabs(sp - gte), rct - gte,
          std::fabs(sp - gte) <= (rct - gte) + 1e-9);
  return rep;
}

// Ratio bound: the shadow-price bias is at most the endpoint-dual gap over
// the average-minus-marginal value gap, times the RCT bias. Evaluated in
// multiplied form (|SP bias| <= bound * |RCT bias| + slack) so near-zero
// biases cannot blow up the quotient numerically; the realized ratio is
// still reported for tightness studies.
inline TheoremReport check_thm_bias_ratio_bound(const MatchingInstance& inst,
                                                const Rates& rates,
                                                const CostModel& cm,
                                                double rho) {
  TheoremReport rep;
  rep.id = "sp-rct-bias-ratio-bound";
  rates.validate(inst);
  cm.validate_for(inst);
  detail::check_rho_interior(rho);

  const CeSolution at0 = ce_duals_at(inst, rates, 0.0, Side::Right);
  const CeSolution at1 = ce_duals_at(inst, rates, 1.0, Side::Left);
  const Vec d_exp = add(rates.lambda, scale(rates.beta, rho));
  const CeAverages avg = ce_averages(inst, d_exp, rates.gamma);

  double numerator = 0.0;
  double denominator = 0.0;
  for (int i = 0; i < inst.n_d; ++i) {
    numerator += (at0.demand_dual[i] - at1.demand_dual[i]) * rates.beta[i];
    denominator += (avg.vbar[i] - at0.demand_dual[i]) * rates.beta[i];
  }
  if (cm.kind == CostKind::Fixed)
    denominator -= (1.0 - rho) * cm.kappa * sum(rates.beta);

  bool side_ok = true;
  if (cm.kind == CostKind::Fixed) {
    const double td = sum(rates.lambda) + sum(rates.beta);
    side_ok = td <= sum(rates.gamma) || sum(rates.gamma) <= sum(rates.lambda);
  }
  if (!(denominator > 0.0) || !side_ok) {
    rep.applicable = false;
    rep.note = !side_ok ? "no claim: total-mass side condition fails"
                        : "no claim: denominator " +
                              std::to_string(denominator) +
                              " is not positive";
    return rep;
  }

  const double bound = numerator / denominator;
  const double gte = gte_fluid(inst, rates, cm);
  const double sp_bias =
      estimate_fluid(EstimatorKind::SpCe, inst, rates, cm, rho).value - gte;
  const double rct_bias =
      estimate_fluid(EstimatorKind::RctCe, inst, rates, cm, rho).value - gte;
  const double realized = std::fabs(rct_bias) > 0.0
                              ? std::fabs(sp_bias) / std::fabs(rct_bias)
                              : 0.0;
  rep.add("sp_bias_within_bound_times_rct_bias", std::fabs(sp_bias),
          bound * std::fabs(rct_bias),
          std::fabs(sp_bias) <=
              bound * std::fabs(rct_bias) + 1e-9 * (1.0 + std::fabs(gte)));
  rep.add("realized_ratio_vs_bound", realized, bound, true);
  return rep;
}

// Cost-included shadow-price vs RCT comparison: in deep undersupply the SP
// estimator's bias is no larger (with an exact closed-form ratio); just
// below saturation the two estimators coincide.
inline TheoremReport check_thm_sp_ci(const MatchingInstance& inst,
                                     const Rates& rates, const CostModel& cm,
                                     double rho) {
  TheoremReport rep;
  rep.id = "sp-ci-vs-rct-ci";
  rates.validate(inst);
  cm.validate_for(inst);
  detail::check_rho_interior(rho);

  const double min_lambda = detail::min_of(rates.lambda);
  if (min_lambda > 0.0) {
    const double t_low =
        0.5 * (1.0 - rho) * min_lambda / sum(rates.gamma);
    const Rates low = detail::with_scaled_supply(rates, t_low);
    const double gte = gte_fluid(inst, low, cm);
    const double sp_bias =
        estimate_fluid(EstimatorKind::SpCi, inst, low, cm, rho).value - gte;
    const double rct_bias =
        estimate_fluid(EstimatorKind::RctCi, inst, low, cm, rho).value - gte;

    double minmax = 0.0;  // smallest top value across supply types
    {
      bool first = true;
      for (int j = 0; j < inst.n_s; ++j) {
        double best = 0.0;
        for (int i = 0; i < inst.n_d; ++i)
          best = std::max(best, inst.value(i, j));
        minmax = first ? best : std::min(minmax, best);
        first = false;
      }
    }
    const bool cost_small = cm.kind == CostKind::Proportional
                                ? cm.alpha <= 0.5
                                : cm.kappa <= 0.5 * minmax;
    if (cost_small)
      rep.add("low_supply_abs_sp_le_abs_rct", std::fabs(sp_bias),
              std::fabs(rct_bias),
              std::fabs(sp_bias) <= std::fabs(rct_bias) + 1e-9);

    // Closed-form bias ratio in the deep-undersupply regime, where the SP
    // estimator returns exactly zero.
    double value_rate = 0.0;
    for (int j = 0; j < inst.n_s; ++j) {
      double best = 0.0;
      for (int i = 0; i < inst.n_d; ++i)
        best = std::max(best, inst.value(i, j));
      value_rate += low.gamma[j] * best;
    }
    double expected_ratio = 0.0;
    if (cm.kind == CostKind::Proportional) {
      expected_ratio = cm.alpha / (1.0 / (1.0 - rho) - cm.alpha);
    } else {
      const double cost_rate = cm.kappa * sum(low.gamma);
      expected_ratio = cost_rate / (value_rate / (1.0 - rho) - cost_rate);
    }
    if (std::fabs(rct_bias) > 0.0) {
      const double ratio = std::fabs(sp_bias) / std::fabs(rct_bias);
      rep.add("low_supply_ratio_matches", ratio, expected_ratio,
              close(ratio, expected_ratio, 1e-9));
    }
  } else {
    rep.note = "deep-undersupply part skipped: min lambda = 0";
  }

  try {
    const GammaRegimes gr = find_gamma_regimes(inst, rates, cm, rho);
    const Rates near = detail::with_scaled_supply(rates, gr.scale_0);
    const double sp0 =
        estimate_fluid(EstimatorKind::SpCi, inst, near, cm, rho).value;
    const double rct0 =
        estimate_fluid(EstimatorKind::RctCi, inst, near, cm, rho).value;
    rep.add("near_saturation_sp_equals_rct", sp0, rct0,
            close(sp0, rct0, 1e-9));
  } catch (const PreconditionError& e) {
    if (!rep.note.empty()) rep.note += "; ";
    rep.note += std::string("near-saturation construction unavailable: ") +
                e.what();
  }
  return rep;
}

// Characterization of designs whose shadow-price estimator is unbiased for
// every treated fraction: equal endpoint demand duals (plus total-mass side
// conditions under fixed costs) in the cost-excluded design; the
// no-interference matching structure in the cost-included design. Each
// structural condition is cross-validated against directly computed biases
// on a rho grid.
inline TheoremReport check_thm_design_unbiasedness(const MatchingInstance& inst,
                                                   const Rates& rates,
                                                   const CostModel& cm) {
  TheoremReport rep;
  rep.id = "all-rho-unbiasedness";
  rates.validate(inst);
  cm.validate_for(inst);
  const Vec treated = rates.treated_rate();
  const double gte = gte_fluid(inst, rates, cm);
  const double bias_tol = 1e-9 * (1.0 + std::fabs(gte));
  const Vec rho_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

  // Cost-excluded branch.
  {
    const CeSolution at0 = ce_duals_at(inst, rates, 0.0, Side::Right);
    const CeSolution at1 = ce_duals_at(inst, rates, 1.0, Side::Left);
    double diff = 0.0, mag = 0.0;
    for (int i = 0; i < inst.n_d; ++i) {
      diff = std::max(diff,
                      std::fabs(at0.demand_dual[i] - at1.demand_dual[i]));
      mag = std::max(mag, std::max(std::fabs(at0.demand_dual[i]),
                                   std::fabs(at1.demand_dual[i])));
    }
    bool condition = diff <= 1e-9 * (1.0 + mag);
    if (cm.kind == CostKind::Fixed) {
      const double td = sum(rates.lambda) + sum(rates.beta);
      condition = condition && (td <= sum(rates.gamma) ||
                                sum(rates.gamma) <= sum(rates.lambda));
    }
    bool all_small = true;
    double worst = 0.0;
    for (double rho : rho_grid) {
      const double bias =
          estimate_fluid(EstimatorKind::SpCe, inst, rates, cm, rho).value -
          gte;
      worst = std::max(worst, std::fabs(bias));
      if (std::fabs(bias) > bias_tol) all_small = false;
    }
    rep.add("ce_condition_iff_all_rho_unbiased", condition ? 1.0 : 0.0,
            all_small ? 1.0 : 0.0, condition == all_small);
    rep.add("ce_worst_abs_bias_on_grid", worst, bias_tol, true);
  }

  // Cost-included branch.
  try {
    const std::vector<int> top = top_choice_map(inst);
    const CeSolution tre =
        detail::solve_all_treated(inst, cm, treated, rates.gamma);
    const CeSolution con =
        detail::solve_all_control(inst, rates.lambda, rates.gamma);
    if (tre.degenerate || con.degenerate) {
      if (!rep.note.empty()) rep.note += "; ";
      rep.note +=
          "cost-included branch skipped: endpoint optimum is degenerate";
    } else {
      const double tol = kTol * std::max(1.0, sum(treated));
      bool structure = true;
      for (int i = 0; i < inst.n_d && structure; ++i) {
        for (int j = 0; j < inst.n_s; ++j) {
          const double f =
              tre.flow[static_cast<std::size_t>(i) * inst.n_s + j];
          const double expect = j == top[i] ? treated[i] : 0.0;
          if (std::fabs(f - expect) > tol) {
            structure = false;
            break;
          }
        }
      }
      bool all_small = true;
      double worst = 0.0;
      for (double rho : rho_grid) {
        const double bias =
            estimate_fluid(EstimatorKind::SpCi, inst, rates, cm, rho).value -
            gte;
        worst = std::max(worst, std::fabs(bias));
        if (std::fabs(bias) > bias_tol) all_small = false;
      }
      rep.add("ci_structure_iff_all_rho_unbiased", structure ? 1.0 : 0.0,
              all_small ? 1.0 : 0.0, structure == all_small);
      rep.add("ci_worst_abs_bias_on_grid", worst, bias_tol, true);
    }
  } catch (const PreconditionError& e) {
    if (!rep.note.empty()) rep.note += "; ";
    rep.note += std::string("cost-included branch skipped: ") + e.what();
  }
  return rep;
}

// Single-pair instance on which the shadow-price bias-reduction threshold
// is tight: no baseline demand, unit uplift and match value, supply chosen
// so both estimator biases approach the same magnitude at the threshold.
struct TightnessCase {
  MatchingInstance instance;
  Rates rates;
  double threshold = 0.0;      // treated-fraction threshold for reduction
  double limit_bias = 0.0;     // common bias magnitude approached there
  double expected_gte = 0.0;
};

inline TightnessCase tightness_instance(const CostModel& cm) {
  cm.validate();
  TightnessCase tc;
  tc.instance.n_d = 1;
  tc.instance.n_s = 1;
  tc.instance.v = {1.0};
  cm.validate_for(tc.instance);
  const double zeta = cost_intensity(tc.instance, cm);
  tc.rates.lambda = {0.0};
  tc.rates.beta = {1.0};
  tc.rates.gamma = {(1.0 - zeta) / (2.0 - zeta)};
  tc.threshold = (1.0 - zeta) / (2.0 - zeta);
  tc.limit_bias = (1.0 - zeta) / (2.0 - zeta);
  tc.expected_gte = (1.0 - zeta) * (1.0 - zeta) / (2.0 - zeta);
  return tc;
}

}  // namespace matchlab
