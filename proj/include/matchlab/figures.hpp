#pragma once

// Figure-data generators. Each key produces one or more CSV files in an
// output directory, holding the exact numbers behind a standard diagnostic
// chart of the laboratory:
//
//   fig2          pooled match-value function of the teaching market
//   fig3          experiment-path value curves for both demand panels
//   fig4          experiment-state flows and dual prices at rho = 0.5
//   fig5          shadow-price counterfactual values across rho
//   fig6          estimator bias across rho on the worst-case 1x1 market
//   fig7          path curves with the shadow-price tangent line at rho = 0.5
//   fig_bias      finite-sample mean bias by estimator across supply ratios
//   fig_reduction fluid shadow-price bias reduction across supply ratios
//   fig_thm3      bias-reduction threshold study across cost intensities
//   fig_thm4      bias-ratio bound versus realized ratio on seeded markets
//
// All output is deterministic: fixed grids, exact rational grid points where
// chart landmarks live, and shortest round-trip number formatting.

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "matchlab/core.hpp"
#include "matchlab/estimators.hpp"
#include "matchlab/fluid.hpp"
#include "matchlab/instances.hpp"
#include "matchlab/io.hpp"
#include "matchlab/market.hpp"
#include "matchlab/sweep.hpp"

namespace matchlab {

inline const std::vector<std::string>& figure_keys() {
  static const std::vector<std::string> keys = {
      "fig2",     "fig3",          "fig4",      "fig5",     "fig6",
      "fig7",     "fig_bias",      "fig_reduction", "fig_thm3", "fig_thm4"};
  return keys;
}

namespace detail {

inline std::filesystem::path write_figure_csv(
    const std::filesystem::path& out_dir, const std::string& name,
    const std::string& header, const std::vector<std::string>& rows) {
  std::string text = header + "\n";
  for (const std::string& r : rows) {
    text += r;
    text += '\n';
  }
  const std::filesystem::path path = out_dir / (name + ".csv");
  write_text_file(path.string(), text);
  return path;
}

inline double path_value(const MatchingInstance& inst, const Rates& rates,
                         const CostModel& cm, double eta) {
  const PathState ps = ci_path_state(rates, eta);
  return solve_experiment_ci(inst, cm, ps.d_con, ps.d_tre, rates.gamma)
      .objective;
}

// --- fig2: value of the pooled matching LP as total demand grows. ---------
inline std::vector<std::filesystem::path> figure_value_function(
    const std::filesystem::path& out_dir) {
  const PedagogicalCase pc = pedagogical_case();
  std::vector<std::string> rows;
  for (int k = 0; k <= 70; ++k) {
    const double d = k / 10.0;  // hits the kinks 1.5, 3.5, 5.5 exactly
    CeProblem p;
    p.instance = pc.instance;
    p.d = {d};
    p.s = pc.low_demand.gamma;
    rows.push_back(fmt_double(d) + "," + fmt_double(solve_ce(p).objective));
  }
  return {write_figure_csv(out_dir, "fig2", "demand,value", rows)};
}

// --- fig3: experiment-path curves for the low- and high-demand panels. ----
inline std::vector<std::filesystem::path> figure_path_curves(
    const std::filesystem::path& out_dir) {
  const PedagogicalCase pc = pedagogical_case();
  std::vector<std::string> rows;
  for (const auto& [panel, rates] :
       {std::pair<const char*, const Rates&>{"a", pc.low_demand},
        std::pair<const char*, const Rates&>{"b", pc.high_demand}}) {
    const PathProfile prof =
        path_profile(pc.instance, rates, pc.cost, 101);
    for (std::size_t k = 0; k < prof.etas.size(); ++k)
      rows.push_back(std::string(panel) + ",path," +
                     fmt_double(prof.etas[k]) + "," +
                     fmt_double(prof.values[k]));
    for (double b : prof.breakpoints)
      rows.push_back(std::string(panel) + ",breakpoint," + fmt_double(b) +
                     "," +
                     fmt_double(path_value(pc.instance, rates, pc.cost, b)));
  }
  return {write_figure_csv(out_dir, "fig3", "panel,series,eta,value", rows)};
}

// --- fig4: optimal flows and duals of the experiment state at rho 0.5. ----
inline std::vector<std::filesystem::path> figure_experiment_state(
    const std::filesystem::path& out_dir) {
  const PedagogicalCase pc = pedagogical_case();
  const double rho = 0.5;
  std::vector<std::string> flow_rows, dual_rows;
  for (const auto& [panel, rates] :
       {std::pair<const char*, const Rates&>{"a", pc.low_demand},
        std::pair<const char*, const Rates&>{"b", pc.high_demand}}) {
    const Vec d_con = scale(rates.lambda, 1.0 - rho);
    const Vec d_tre = scale(rates.treated_rate(), rho);
    const CiSolution sol = solve_experiment_ci(pc.instance, pc.cost, d_con,
                                               d_tre, rates.gamma);
    const Vec w = discounted_weights(pc.instance, pc.cost);
    for (int i = 0; i < pc.instance.n_d; ++i)
      for (int j = 0; j < pc.instance.n_s; ++j) {
        const std::size_t k =
            static_cast<std::size_t>(i) * pc.instance.n_s + j;
        flow_rows.push_back(std::string(panel) + ",control," +
                            std::to_string(i) + "," + std::to_string(j) +
                            "," + fmt_double(sol.flow_con[k]) + "," +
                            fmt_double(pc.instance.value(i, j)));
        flow_rows.push_back(std::string(panel) + ",treated," +
                            std::to_string(i) + "," + std::to_string(j) +
                            "," + fmt_double(sol.flow_tre[k]) + "," +
                            fmt_double(w[k]));
      }
    for (int i = 0; i < pc.instance.n_d; ++i) {
      dual_rows.push_back(std::string(panel) + ",demand,control," +
                          std::to_string(i) + "," +
                          fmt_double(sol.demand_dual_con[i]));
      dual_rows.push_back(std::string(panel) + ",demand,treated," +
                          std::to_string(i) + "," +
                          fmt_double(sol.demand_dual_tre[i]));
    }
    for (int j = 0; j < pc.instance.n_s; ++j)
      dual_rows.push_back(std::string(panel) + ",supply,shared," +
                          std::to_string(j) + "," +
                          fmt_double(sol.supply_dual[j]));
  }
  return {write_figure_csv(out_dir, "fig4_flows",
                           "panel,group,demand_type,supply_type,flow,weight",
                           flow_rows),
          write_figure_csv(out_dir, "fig4_duals",
                           "panel,side,group,index,value", dual_rows)};
}

// --- fig5: dual-priced counterfactual states across rho. ------------------
inline std::vector<std::filesystem::path> figure_priced_states(
    const std::filesystem::path& out_dir) {
  const PedagogicalCase pc = pedagogical_case();
  std::vector<std::string> rows;
  for (const auto& [panel, rates] :
       {std::pair<const char*, const Rates&>{"a", pc.low_demand},
        std::pair<const char*, const Rates&>{"b", pc.high_demand}}) {
    const Vec treated = rates.treated_rate();
    for (int k = 1; k <= 19; ++k) {
      const double rho = k / 20.0;  // includes rho = 0.5 exactly
      Vec pooled_demand(rates.lambda.size());
      for (std::size_t i = 0; i < pooled_demand.size(); ++i)
        pooled_demand[i] = rates.lambda[i] + rho * rates.beta[i];
      CeProblem p;
      p.instance = pc.instance;
      p.d = pooled_demand;
      p.s = rates.gamma;
      const CeSolution pooled = solve_ce(p);
      const DiscountedDualsResult dd = discounted_duals_or_solve(
          pc.instance, pc.cost, pooled_demand, rates.gamma, pooled);
      const double control_price = dot(pooled.demand_dual, rates.lambda) +
                                   dot(pooled.supply_dual, rates.gamma);
      const double treated_price = dot(dd.duals.demand, treated) +
                                   dot(dd.duals.supply, rates.gamma);
      rows.push_back(std::string(panel) + "," + fmt_double(rho) + "," +
                     fmt_double(control_price) + "," +
                     fmt_double(treated_price) + "," +
                     fmt_double(treated_price - control_price));
    }
  }
  return {write_figure_csv(out_dir, "fig5",
                           "panel,rho,control_price,treated_price,sp_ce",
                           rows)};
}

// --- fig6: bias across rho on the worst-case single-pair market. ----------
inline std::vector<std::filesystem::path> figure_tightness_biases(
    const std::filesystem::path& out_dir) {
  std::vector<std::string> rows;
  for (const CostModel& cm :
       {CostModel::proportional(0.15), CostModel::fixed(0.3)}) {
    const TightnessCase tc = tightness_instance(cm);
    const double gte = gte_fluid(tc.instance, tc.rates, cm);
    Vec rho_grid;
    for (int k = 1; k <= 19; ++k) rho_grid.push_back(k / 20.0);
    rho_grid.push_back(tc.threshold);
    rho_grid.push_back(tc.threshold + 1e-4);
    for (double rho : rho_grid) {
      const double rct =
          estimate_fluid(EstimatorKind::RctCe, tc.instance, tc.rates, cm, rho)
              .value;
      const double sp =
          estimate_fluid(EstimatorKind::SpCe, tc.instance, tc.rates, cm, rho)
              .value;
      rows.push_back(std::string(to_string(cm.kind)) + "," +
                     fmt_double(rho) + "," + fmt_double(rct - gte) + "," +
                     fmt_double(sp - gte) + "," + fmt_double(tc.threshold) +
                     "," + fmt_double(tc.limit_bias));
    }
  }
  return {write_figure_csv(
      out_dir, "fig6",
      "cost_kind,rho,rct_ce_bias,sp_ce_bias,threshold,limit_bias", rows)};
}

// --- fig7: path curves plus the shadow-price tangent line at rho 0.5. -----
inline std::vector<std::filesystem::path> figure_path_with_sp_line(
    const std::filesystem::path& out_dir) {
  const PedagogicalCase pc = pedagogical_case();
  const double rho = 0.5;
  std::vector<std::string> rows;
  for (const auto& [panel, rates] :
       {std::pair<const char*, const Rates&>{"a", pc.low_demand},
        std::pair<const char*, const Rates&>{"b", pc.high_demand}}) {
    const PathProfile prof = path_profile(pc.instance, rates, pc.cost, 101);
    for (std::size_t k = 0; k < prof.etas.size(); ++k)
      rows.push_back(std::string(panel) + ",path," +
                     fmt_double(prof.etas[k]) + "," +
                     fmt_double(prof.values[k]));
    // Tangent line with the left-limit slope at the experiment point: the
    // line whose endpoint gap is exactly the shadow-price group-interference
    // estimate.
    const double value = path_value(pc.instance, rates, pc.cost, rho);
    const double slope =
        path_slope(rates, duals_at(pc.instance, rates, pc.cost, rho,
                                   Side::Left));
    rows.push_back(std::string(panel) + ",sp_line,0," +
                   fmt_double(value - rho * slope));
    rows.push_back(std::string(panel) + ",sp_line,1," +
                   fmt_double(value + (1.0 - rho) * slope));
  }
  return {write_figure_csv(out_dir, "fig7", "panel,series,eta,value", rows)};
}

// --- fig_bias: finite-sample bias by estimator across supply ratios. ------
inline std::vector<std::filesystem::path> figure_finite_bias(
    const std::filesystem::path& out_dir) {
  const int n_instances = 5, n_reps = 10, n_ratios = 10;
  const CostModel cm_template = CostModel::proportional(0.10);
  ExperimentConfig exp_cfg;
  exp_cfg.rho = 0.3;
  exp_cfg.tau = 1.0;

  std::vector<GeometricInstance> instances;
  for (int i = 0; i < n_instances; ++i) {
    GeometricSpec spec;
    spec.seed = 1 + static_cast<std::uint64_t>(i);
    instances.push_back(gen_geometric(spec));
  }

  std::vector<std::string> rows;
  for (int g = 0; g < n_ratios; ++g) {
    const double ratio = 0.3 + 2.7 * g / (n_ratios - 1.0);
    std::array<WelfordAcc, kAllEstimators.size()> acc{};
    for (int i = 0; i < n_instances; ++i) {
      const MatchingInstance& inst = instances[i].instance;
      const Rates rates = default_rates(inst, ratio);
      for (int r = 0; r < n_reps; ++r) {
        const SampledState st =
            sample_state(inst, rates, exp_cfg, 1,
                         static_cast<std::uint64_t>(i),
                         static_cast<std::uint64_t>(r));
        const double gte =
            gte_finite_draw(inst, rates, cm_template, exp_cfg.tau, 1,
                            static_cast<std::uint64_t>(i),
                            static_cast<std::uint64_t>(r));
        for (std::size_t e = 0; e < kAllEstimators.size(); ++e)
          acc[e].add(
              estimate_finite(kAllEstimators[e], st, inst, cm_template,
                              exp_cfg)
                  .value -
              gte);
      }
    }
    for (std::size_t e = 0; e < kAllEstimators.size(); ++e)
      rows.push_back(fmt_double(ratio) + "," +
                     to_string(kAllEstimators[e]) + "," +
                     std::to_string(acc[e].n) + "," +
                     fmt_double(acc[e].mean) + "," +
                     fmt_double(acc[e].std_error()));
  }
  return {write_figure_csv(out_dir, "fig_bias",
                           "gamma_ratio,estimator,n,mean_bias,stderr_bias",
                           rows)};
}

// --- fig_reduction: fluid shadow-price bias reduction across ratios. ------
inline std::vector<std::filesystem::path> figure_bias_reduction(
    const std::filesystem::path& out_dir) {
  const int n_instances = 20, n_ratios = 10;
  const CostModel cm = CostModel::proportional(0.10);
  const double rho = 0.3;
  std::vector<std::string> rows;
  for (int g = 0; g < n_ratios; ++g) {
    const double ratio = 0.3 + 2.7 * g / (n_ratios - 1.0);
    WelfordAcc rct_acc{}, sp_acc{};
    for (int i = 0; i < n_instances; ++i) {
      GeometricSpec spec;
      spec.seed = 1 + static_cast<std::uint64_t>(i);
      const MatchingInstance inst = gen_geometric(spec).instance;
      const Rates rates = default_rates(inst, ratio);
      const double gte = gte_fluid(inst, rates, cm);
      rct_acc.add(
          estimate_fluid(EstimatorKind::RctCe, inst, rates, cm, rho).value -
          gte);
      sp_acc.add(std::abs(
          estimate_fluid(EstimatorKind::SpCe, inst, rates, cm, rho).value -
          gte));
    }
    const std::string ratio_col =
        rct_acc.mean > 1e-12 ? fmt_double(sp_acc.mean / rct_acc.mean) : "NA";
    rows.push_back(fmt_double(ratio) + "," + fmt_double(rct_acc.mean) + "," +
                   fmt_double(sp_acc.mean) + "," + ratio_col);
  }
  return {write_figure_csv(
      out_dir, "fig_reduction",
      "gamma_ratio,mean_rct_ce_bias,mean_abs_sp_ce_bias,reduction_ratio",
      rows)};
}

// --- fig_thm3: reduction threshold study across cost intensities. ---------
inline std::vector<std::filesystem::path> figure_threshold_study(
    const std::filesystem::path& out_dir) {
  std::vector<std::string> rows;
  for (const double zeta : {0.05, 0.1, 0.15, 0.2, 0.3, 0.5}) {
    for (const CostKind kind : {CostKind::Proportional, CostKind::Fixed}) {
      const CostModel cm = kind == CostKind::Proportional
                               ? CostModel::proportional(zeta)
                               : CostModel::fixed(zeta);
      const TightnessCase tc = tightness_instance(cm);
      const double gte = gte_fluid(tc.instance, tc.rates, cm);
      const double rct_at =
          estimate_fluid(EstimatorKind::RctCe, tc.instance, tc.rates, cm,
                         tc.threshold)
              .value -
          gte;
      const double sp_above =
          std::abs(estimate_fluid(EstimatorKind::SpCe, tc.instance, tc.rates,
                                  cm, tc.threshold + 1e-4)
                       .value -
                   gte);
      rows.push_back(std::string(to_string(kind)) + "," + fmt_double(zeta) +
                     "," + fmt_double(tc.threshold) + "," +
                     fmt_double(tc.limit_bias) + "," + fmt_double(rct_at) +
                     "," + fmt_double(sp_above) + "," + fmt_double(gte));
    }
  }
  return {write_figure_csv(out_dir, "fig_thm3",
                           "cost_kind,zeta,rho_threshold,limit_bias,"
                           "rct_bias_at_threshold,sp_abs_bias_above_threshold,"
                           "gte",
                           rows)};
}

// --- fig_thm4: bias-ratio bound versus realized ratio. --------------------
inline std::vector<std::filesystem::path> figure_ratio_bound_study(
    const std::filesystem::path& out_dir) {
  const CostModel cm = CostModel::proportional(0.10);
  std::vector<std::string> rows;
  for (int i = 0; i < 20; ++i) {
    GeometricSpec spec;
    spec.seed = 1 + static_cast<std::uint64_t>(i);
    const MatchingInstance inst = gen_geometric(spec).instance;
    for (const double ratio : {0.5, 1.0, 1.5, 2.0, 3.0}) {
      const Rates rates = default_rates(inst, ratio);
      for (const double rho : {0.1, 0.3, 0.5}) {
        const TheoremReport rep =
            check_thm_bias_ratio_bound(inst, rates, cm, rho);
        std::string bound = "NA", realized = "NA";
        for (const Witness& w : rep.witnesses)
          if (w.name == "realized_ratio_vs_bound") {
            realized = fmt_double(w.lhs);
            bound = fmt_double(w.rhs);
          }
        rows.push_back(std::to_string(spec.seed) + "," + fmt_double(ratio) +
                       "," + fmt_double(rho) + "," +
                       (rep.applicable ? "1" : "0") + "," + bound + "," +
                       realized + "," + (rep.holds ? "1" : "0"));
      }
    }
  }
  return {write_figure_csv(
      out_dir, "fig_thm4",
      "instance_seed,gamma_ratio,rho,applicable,bound,realized_ratio,holds",
      rows)};
}

}  // namespace detail

// Writes the data files behind one figure key into out_dir and returns the
// paths written. Unknown keys are an input error listing the valid keys.
inline std::vector<std::filesystem::path> reproduce_figures(
    const std::string& which, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  if (which == "fig2") return detail::figure_value_function(out_dir);
  if (which == "fig3") return detail::figure_path_curves(out_dir);
  if (which == "fig4") return detail::figure_experiment_state(out_dir);
  if (which == "fig5") return detail::figure_priced_states(out_dir);
  if (which == "fig6") return detail::figure_tightness_biases(out_dir);
  if (which == "fig7") return detail::figure_path_with_sp_line(out_dir);
  if (which == "fig_bias") return detail::figure_finite_bias(out_dir);
  if (which == "fig_reduction")
    return detail::figure_bias_reduction(out_dir);
  if (which == "fig_thm3") return detail::figure_threshold_study(out_dir);
  if (which == "fig_thm4") return detail::figure_ratio_bound_study(out_dir);
  std::string known;
  for (const std::string& k : figure_keys()) {
    if (!known.empty()) known += ", ";
    known += k;
  }
  throw InputError("unknown figure key \"" + which + "\"; known keys: " +
                   known);
}

}  // namespace matchlab
