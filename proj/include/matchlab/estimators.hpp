#pragma once

// The ground-truth global treatment effect (GTE) and the five treatment
// effect estimators, in finite-sample form (evaluated on a sampled market
// state) and in fluid-limit form (evaluated by exact LP solves at the
// expected rates).
//
// Naming: RCT-* are difference-in-means estimators over the randomized
// groups; SP-* are shadow-price (dual-based) estimators; CE/CI distinguish
// whether the platform's matching excludes or includes the treatment cost;
// SB is the simulation-based estimator that re-solves the two global
// counterfactuals at rescaled observed rates.

#include <array>
#include <cmath>
#include <cstdint>

#include "matchlab/core.hpp"
#include "matchlab/lp.hpp"
#include "matchlab/market.hpp"
#include "matchlab/model.hpp"

namespace matchlab {

enum class EstimatorKind { RctCe, RctCi, SpCe, SpCi, Sb };

inline constexpr std::array<EstimatorKind, 5> kAllEstimators = {
    EstimatorKind::RctCe, EstimatorKind::RctCi, EstimatorKind::SpCe,
    EstimatorKind::SpCi, EstimatorKind::Sb};

inline const char* to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::RctCe: return "RCT_CE";
    case EstimatorKind::RctCi: return "RCT_CI";
    case EstimatorKind::SpCe: return "SP_CE";
    case EstimatorKind::SpCi: return "SP_CI";
    case EstimatorKind::Sb: return "SB";
  }
  throw InternalError("to_string: unknown estimator kind");
}

enum class Regime { Fluid, FiniteSample };

inline const char* to_string(Regime r) {
  return r == Regime::Fluid ? "fluid" : "finite";
}

// One estimator evaluation together with the ground truth it is compared
// against and the configuration that produced it.
struct EstimateRecord {
  EstimatorKind kind = EstimatorKind::RctCe;
  double value = 0.0;
  double gte = 0.0;
  double bias = 0.0;  // always value - gte
  Regime regime = Regime::Fluid;
  double rho = 0.0;
  double tau = 1.0;
  CostModel cost;
  bool empty_group = false;
  bool degenerate = false;
};

inline EstimateRecord make_record(EstimatorKind kind, double value, double gte,
                                  Regime regime, double rho, double tau,
                                  const CostModel& cost,
                                  bool empty_group = false,
                                  bool degenerate = false) {
  EstimateRecord r;
  r.kind = kind;
  r.value = value;
  r.gte = gte;
  r.bias = value - gte;
  r.regime = regime;
  r.rho = rho;
  r.tau = tau;
  r.cost = cost;
  r.empty_group = empty_group;
  r.degenerate = degenerate;
  return r;
}

namespace detail {

inline MatchingInstance discounted_instance(const MatchingInstance& inst,
                                            const CostModel& cm) {
  MatchingInstance d = inst;
  d.v = discounted_weights(inst, cm);
  return d;
}

// Value of a market where every demand unit is treated: a one-group problem
// on the net (discounted) match values. Equivalent to the two-group problem
// with an empty control side, but half the size and with a meaningful
// degeneracy flag.
inline CeSolution solve_all_treated(const MatchingInstance& inst,
                                    const CostModel& cm, const Vec& d,
                                    const Vec& s) {
  CeProblem p;
  p.instance = discounted_instance(inst, cm);
  p.d = d;
  p.s = s;
  return solve_ce(p);
}

inline CeSolution solve_all_control(const MatchingInstance& inst, const Vec& d,
                                    const Vec& s) {
  CeProblem p;
  p.instance = inst;
  p.d = d;
  p.s = s;
  return solve_ce(p);
}

inline void check_rho_interior(double rho) {
  if (!(rho > 0.0 && rho < 1.0))
    throw ConfigError(
        "estimator is undefined at rho in {0, 1}: both groups must be "
        "nonempty in expectation");
}

inline CiSolution solve_experiment_ci(const MatchingInstance& inst,
                                      const CostModel& cm, const Vec& d_con,
                                      const Vec& d_tre, const Vec& s) {
  CiProblem p;
  p.instance = inst;
  p.d_con = d_con;
  p.d_tre = d_tre;
  p.s = s;
  p.cost_model = cm;
  return solve_ci(p);
}

// Discounted duals for the pooled solve, falling back to a direct solve of
// the discounted-weights problem when the closed-form shift is not dual
// feasible (possible only at exact demand/supply total ties).
struct DiscountedDualsResult {
  DiscountedDuals duals;
  bool fell_back = false;
  bool fallback_degenerate = false;
};

inline DiscountedDualsResult discounted_duals_or_solve(
    const MatchingInstance& inst, const CostModel& cm, const Vec& d,
    const Vec& s, const CeSolution& pooled) {
  DiscountedDualsResult out;
  try {
    out.duals = discounted_duals(cm, pooled.demand_dual, pooled.supply_dual,
                                 sum(d), sum(s));
  } catch (const PreconditionError&) {
    CeProblem p;
    p.instance = discounted_instance(inst, cm);
    p.d = d;
    p.s = s;
    CeSolution sol = solve_ce(p);
    out.duals.demand = sol.demand_dual;
    out.duals.supply = sol.supply_dual;
    out.fell_back = true;
    out.fallback_degenerate = sol.degenerate;
  }
  return out;
}

// Control/treated demand duals of the experiment path problem at
// eta + offset (clamped to [0, 1]); duals are piecewise constant in eta, so
// a small offset selects the adjacent linear segment's exact duals.
struct DirectionalCiDuals {
  Vec demand_con;
  Vec demand_tre;
  Vec supply;
  bool degenerate = false;
  bool clamped = false;
};

inline DirectionalCiDuals ci_duals_near(const MatchingInstance& inst,
                                        const Rates& rates,
                                        const CostModel& cm, double eta,
                                        double offset) {
  DirectionalCiDuals out;
  double e = eta + offset;
  if (e < 0.0 || e > 1.0) {
    e = std::min(1.0, std::max(0.0, e));
    out.clamped = true;
  }
  PathState ps = ci_path_state(rates, e);
  CiSolution sol = solve_experiment_ci(inst, cm, ps.d_con, ps.d_tre,
                                       rates.gamma);
  out.demand_con = sol.demand_dual_con;
  out.demand_tre = sol.demand_dual_tre;
  out.supply = sol.supply_dual;
  out.degenerate = sol.degenerate;
  return out;
}

inline double dual_vec_diff(const DirectionalCiDuals& a,
                            const DirectionalCiDuals& b) {
  double diff = 0.0;
  for (std::size_t i = 0; i < a.demand_con.size(); ++i)
    diff = std::max(diff, std::fabs(a.demand_con[i] - b.demand_con[i]));
  for (std::size_t i = 0; i < a.demand_tre.size(); ++i)
    diff = std::max(diff, std::fabs(a.demand_tre[i] - b.demand_tre[i]));
  for (std::size_t i = 0; i < a.supply.size(); ++i)
    diff = std::max(diff, std::fabs(a.supply[i] - b.supply[i]));
  return diff;
}

inline double dual_vec_scale(const DirectionalCiDuals& a,
                             const DirectionalCiDuals& b) {
  double m = std::max(max_abs(a.demand_con), max_abs(b.demand_con));
  m = std::max(m, std::max(max_abs(a.demand_tre), max_abs(b.demand_tre)));
  m = std::max(m, std::max(max_abs(a.supply), max_abs(b.supply)));
  return 1.0 + m;
}

}  // namespace detail

// Fluid-limit global treatment effect: the value gap between the
// all-treated market (net match values) and the all-control market at the
// deterministic rates. Also cross-checks the equivalent decomposition
// "pooled value at full treatment minus intervention cost" and fails loudly
// if the two disagree beyond tolerance.
inline double gte_fluid(const MatchingInstance& inst, const Rates& rates,
                        const CostModel& cm) {
  rates.validate(inst);
  cm.validate_for(inst);
  const Vec treated = rates.treated_rate();
  const double phi_tre =
      detail::solve_all_treated(inst, cm, treated, rates.gamma).objective;
  const double phi_con =
      detail::solve_all_control(inst, rates.lambda, rates.gamma).objective;
  const double gte = phi_tre - phi_con;

  CeProblem pooled;
  pooled.instance = inst;
  pooled.d = treated;
  pooled.s = rates.gamma;
  const double phi_pooled = solve_ce(pooled).objective;
  const double cost = intervention_cost(inst, cm, Vec(inst.n_d, 0.0), treated,
                                        rates.gamma);
  const double alt = (phi_pooled - cost) - phi_con;
  if (!close(gte, alt, kTol))
    throw InternalError(
        "gte_fluid: net-value and cost-decomposition forms disagree");
  return gte;
}

// One paired Monte Carlo draw of the finite-sample GTE at market size tau:
// both counterfactual states share the supply realization (and reuse the
// demand streams component-wise) via sample_gte_pair.
inline double gte_finite_draw(const MatchingInstance& inst, const Rates& rates,
                              const CostModel& cm, double tau,
                              std::uint64_t seed, std::uint64_t instance_id,
                              std::uint64_t replication_id) {
  cm.validate_for(inst);
  GtePairState pair =
      sample_gte_pair(inst, rates, tau, seed, instance_id, replication_id);
  const double phi_tre =
      detail::solve_all_treated(inst, cm, pair.d_treatment, pair.s).objective;
  const double phi_con =
      detail::solve_all_control(inst, pair.d_control, pair.s).objective;
  return (phi_tre - phi_con) / tau;
}

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n = 0;
};

// Monte Carlo estimate of the finite-sample GTE over n_draws paired draws.
inline McEstimate gte_finite_mc(const MatchingInstance& inst,
                                const Rates& rates, const CostModel& cm,
                                double tau, int n_draws, std::uint64_t seed,
                                std::uint64_t instance_id = 0) {
  if (n_draws < 2) throw InputError("gte_finite_mc: n_draws must be >= 2");
  double mean = 0.0, m2 = 0.0;
  for (int r = 0; r < n_draws; ++r) {
    const double x = gte_finite_draw(inst, rates, cm, tau, seed, instance_id,
                                     static_cast<std::uint64_t>(r));
    const double delta = x - mean;
    mean += delta / (r + 1);
    m2 += delta * (x - mean);
  }
  McEstimate out;
  out.mean = mean;
  out.n = n_draws;
  out.std_error = std::sqrt(m2 / (n_draws - 1) / n_draws);
  return out;
}

// Result of one finite-sample estimator evaluation. empty_group is set when
// the sampled state has no treated or no control demand even though
// 0 < rho < 1; the estimator still returns its defined partial sum so that
// Monte Carlo means stay unbiased. degenerate propagates the underlying LP
// flag (possible primal/dual multiplicity).
struct FiniteEstimate {
  double value = 0.0;
  bool empty_group = false;
  bool degenerate = false;
};

namespace detail {

inline bool has_empty_group(const SampledState& st) {
  return sum(st.d_tre) <= 0.0 || sum(st.d_con) <= 0.0;
}

}  // namespace detail

// Difference-in-means estimator when the platform matches the pooled demand
// on gross values (cost-excluded): solve one pooled problem, attribute flows
// to groups proportionally within each demand type, then compare the
// per-unit-scaled net treated value against the control value.
inline FiniteEstimate estimate_rct_ce(const SampledState& st,
                                      const MatchingInstance& inst,
                                      const CostModel& cm,
                                      const ExperimentConfig& cfg) {
  cfg.validate();
  detail::check_rho_interior(cfg.rho);
  cm.validate_for(inst);
  const Vec d_exp = add(st.d_con, st.d_tre);
  CeProblem p;
  p.instance = inst;
  p.d = d_exp;
  p.s = st.s;
  const CeSolution sol = solve_ce(p);
  const SplitFlows split = split_ce_flows(inst, sol.flow, st.d_con, st.d_tre);
  const Vec w = discounted_weights(inst, cm);
  const double treated_term = dot(w, split.flow_tre) / cfg.rho;
  const double control_term = dot(inst.v, split.flow_con) / (1.0 - cfg.rho);
  FiniteEstimate out;
  out.value = (treated_term - control_term) / cfg.tau;
  out.empty_group = detail::has_empty_group(st);
  out.degenerate = sol.degenerate;
  return out;
}

// Difference-in-means estimator when the platform matches on net values for
// treated units (cost-included): the two-group solve already attributes
// flows, so compare scaled group values directly.
inline FiniteEstimate estimate_rct_ci(const SampledState& st,
                                      const MatchingInstance& inst,
                                      const CostModel& cm,
                                      const ExperimentConfig& cfg) {
  cfg.validate();
  detail::check_rho_interior(cfg.rho);
  cm.validate_for(inst);
  const CiSolution sol =
      detail::solve_experiment_ci(inst, cm, st.d_con, st.d_tre, st.s);
  const Vec w = discounted_weights(inst, cm);
  const double treated_term = dot(w, sol.flow_tre) / cfg.rho;
  const double control_term = dot(inst.v, sol.flow_con) / (1.0 - cfg.rho);
  FiniteEstimate out;
  out.value = (treated_term - control_term) / cfg.tau;
  out.empty_group = detail::has_empty_group(st);
  out.degenerate = sol.degenerate;
  return out;
}

// Shadow-price estimator under cost-excluded matching: price the
// counterfactual global states with the pooled solve's duals — net
// (discounted) duals for the all-treated state, gross duals for the
// all-control state — scaling each group's demand to estimate the full
// population.
inline FiniteEstimate estimate_sp_ce(const SampledState& st,
                                     const MatchingInstance& inst,
                                     const CostModel& cm,
                                     const ExperimentConfig& cfg) {
  cfg.validate();
  detail::check_rho_interior(cfg.rho);
  cm.validate_for(inst);
  const Vec d_exp = add(st.d_con, st.d_tre);
  CeProblem p;
  p.instance = inst;
  p.d = d_exp;
  p.s = st.s;
  const CeSolution sol = solve_ce(p);
  const detail::DiscountedDualsResult dd =
      detail::discounted_duals_or_solve(inst, cm, d_exp, st.s, sol);
  const double treated_value = dot(dd.duals.demand, st.d_tre) / cfg.rho +
                               dot(dd.duals.supply, st.s);
  const double control_value = dot(sol.demand_dual, st.d_con) /
                                   (1.0 - cfg.rho) +
                               dot(sol.supply_dual, st.s);
  FiniteEstimate out;
  out.value = (treated_value - control_value) / cfg.tau;
  out.empty_group = detail::has_empty_group(st);
  out.degenerate = sol.degenerate || dd.fallback_degenerate;
  return out;
}

// Shadow-price estimator under cost-included matching: the two-group solve
// exposes separate demand duals per group; supply duals cancel.
inline FiniteEstimate estimate_sp_ci(const SampledState& st,
                                     const MatchingInstance& inst,
                                     const CostModel& cm,
                                     const ExperimentConfig& cfg) {
  cfg.validate();
  detail::check_rho_interior(cfg.rho);
  cm.validate_for(inst);
  const CiSolution sol =
      detail::solve_experiment_ci(inst, cm, st.d_con, st.d_tre, st.s);
  const double treated_value = dot(sol.demand_dual_tre, st.d_tre) / cfg.rho;
  const double control_value =
      dot(sol.demand_dual_con, st.d_con) / (1.0 - cfg.rho);
  FiniteEstimate out;
  out.value = (treated_value - control_value) / cfg.tau;
  out.empty_group = detail::has_empty_group(st);
  out.degenerate = sol.degenerate;
  return out;
}

// Simulation-based estimator: rescale the observed group demands to
// population rates and re-solve both global counterfactuals at unit market
// size. Unbiased in the fluid limit by construction; high-variance when the
// scaled-up group is small.
inline FiniteEstimate estimate_sb(const SampledState& st,
                                  const MatchingInstance& inst,
                                  const CostModel& cm,
                                  const ExperimentConfig& cfg) {
  cfg.validate();
  detail::check_rho_interior(cfg.rho);
  cm.validate_for(inst);
  const Vec d_tre_hat = scale(st.d_tre, 1.0 / (cfg.tau * cfg.rho));
  const Vec d_con_hat = scale(st.d_con, 1.0 / (cfg.tau * (1.0 - cfg.rho)));
  const Vec s_hat = scale(st.s, 1.0 / cfg.tau);
  const CeSolution tre = detail::solve_all_treated(inst, cm, d_tre_hat, s_hat);
  const CeSolution con = detail::solve_all_control(inst, d_con_hat, s_hat);
  FiniteEstimate out;
  out.value = tre.objective - con.objective;
  out.empty_group = detail::has_empty_group(st);
  out.degenerate = tre.degenerate || con.degenerate;
  return out;
}

inline FiniteEstimate estimate_finite(EstimatorKind kind,
                                      const SampledState& st,
                                      const MatchingInstance& inst,
                                      const CostModel& cm,
                                      const ExperimentConfig& cfg) {
  switch (kind) {
    case EstimatorKind::RctCe: return estimate_rct_ce(st, inst, cm, cfg);
    case EstimatorKind::RctCi: return estimate_rct_ci(st, inst, cm, cfg);
    case EstimatorKind::SpCe: return estimate_sp_ce(st, inst, cm, cfg);
    case EstimatorKind::SpCi: return estimate_sp_ci(st, inst, cm, cfg);
    case EstimatorKind::Sb: return estimate_sb(st, inst, cm, cfg);
  }
  throw InternalError("estimate_finite: unknown estimator kind");
}

// Fluid-limit estimator value: what each estimator converges to as the
// market grows, computed by exact LP solves at the expected rates (no
// sampling). degenerate marks a non-unique optimum at the evaluation point;
// dual-based values then follow the left-limit convention along the
// experiment path.
struct FluidEstimate {
  double value = 0.0;
  bool degenerate = false;
};

inline FluidEstimate estimate_fluid(EstimatorKind kind,
                                    const MatchingInstance& inst,
                                    const Rates& rates, const CostModel& cm,
                                    double rho) {
  rates.validate(inst);
  cm.validate_for(inst);
  const Vec treated = rates.treated_rate();
  FluidEstimate out;

  if (kind == EstimatorKind::Sb) {
    // Scaled observed rates equal the true rates in the fluid limit, for
    // any rho: the estimator is exactly the fluid GTE.
    const CeSolution tre =
        detail::solve_all_treated(inst, cm, treated, rates.gamma);
    const CeSolution con =
        detail::solve_all_control(inst, rates.lambda, rates.gamma);
    out.value = tre.objective - con.objective;
    out.degenerate = tre.degenerate || con.degenerate;
    return out;
  }

  detail::check_rho_interior(rho);

  switch (kind) {
    case EstimatorKind::RctCe: {
      // Pooled demand lambda + rho*beta; per-type average gross value vbar_i
      // and match rate xbar_i turn the proportional flow split into closed
      // form.
      const Vec d_exp = add(rates.lambda, scale(rates.beta, rho));
      CeProblem p;
      p.instance = inst;
      p.d = d_exp;
      p.s = rates.gamma;
      const CeSolution sol = solve_ce(p);
      double value = 0.0;
      for (int i = 0; i < inst.n_d; ++i) {
        double vx = 0.0, xm = 0.0;
        for (int j = 0; j < inst.n_s; ++j) {
          const double f =
              sol.flow[static_cast<std::size_t>(i) * inst.n_s + j];
          vx += inst.value(i, j) * f;
          xm += f;
        }
        const double denom = d_exp[i];
        const double vbar = denom > 0.0 ? vx / denom : 0.0;
        const double xbar = denom > 0.0 ? xm / denom : 0.0;
        const double wbar = cm.kind == CostKind::Proportional
                                ? (1.0 - cm.alpha) * vbar
                                : vbar - cm.kappa * xbar;
        value += treated[i] * wbar - rates.lambda[i] * vbar;
      }
      out.value = value;
      out.degenerate = sol.degenerate;
      return out;
    }
    case EstimatorKind::RctCi: {
      const PathState ps = ci_path_state(rates, rho);
      const CiSolution sol = detail::solve_experiment_ci(
          inst, cm, ps.d_con, ps.d_tre, rates.gamma);
      const Vec w = discounted_weights(inst, cm);
      out.value = dot(w, sol.flow_tre) / rho -
                  dot(inst.v, sol.flow_con) / (1.0 - rho);
      out.degenerate = sol.degenerate;
      return out;
    }
    case EstimatorKind::SpCe: {
      const Vec d_exp = add(rates.lambda, scale(rates.beta, rho));
      CeProblem p;
      p.instance = inst;
      p.d = d_exp;
      p.s = rates.gamma;
      const CeSolution sol = solve_ce(p);
      const detail::DiscountedDualsResult dd =
          detail::discounted_duals_or_solve(inst, cm, d_exp, rates.gamma, sol);
      out.value = dot(dd.duals.demand, treated) +
                  dot(dd.duals.supply, rates.gamma) -
                  dot(sol.demand_dual, rates.lambda) -
                  dot(sol.supply_dual, rates.gamma);
      out.degenerate = sol.degenerate || dd.fallback_degenerate;
      return out;
    }
    case EstimatorKind::SpCi: {
      // Price the counterfactual states with the experiment point's group
      // duals. The value function along the experiment path is piecewise
      // linear, so duals are directional; use the left limit and flag a
      // kink when the two sides disagree.
      const detail::DirectionalCiDuals left =
          detail::ci_duals_near(inst, rates, cm, rho, -kSideEps);
      const detail::DirectionalCiDuals right =
          detail::ci_duals_near(inst, rates, cm, rho, +kSideEps);
      out.value = dot(left.demand_tre, treated) -
                  dot(left.demand_con, rates.lambda);
      const double diff = detail::dual_vec_diff(left, right);
      out.degenerate = left.degenerate || right.degenerate ||
                       diff > kKinkTol * detail::dual_vec_scale(left, right);
      return out;
    }
    default:
      throw InternalError("estimate_fluid: unknown estimator kind");
  }
}

}  // namespace matchlab
