#pragma once

// Executable verification of the fluid-regime estimator guarantees: exact
// values on the teaching market, sign and ordering properties on seeded
// geometric markets, supply-regime behavior, bias-ratio bounds, worst-case
// tightness, and the all-rho unbiasedness characterization. Results go into
// a machine-readable JSON report; the boolean outcome is meant to drive a
// nonzero process exit on failure.
//
// VerifyOptions::inject_rct_ce_sign_flip is a self-test fixture: it negates
// every value the suite computes for the pooled-objective difference
// estimator, which must make the suite fail and surface witnesses. It proves
// the checks can actually catch a wrong estimator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "matchlab/core.hpp"
#include "matchlab/estimators.hpp"
#include "matchlab/fluid.hpp"
#include "matchlab/instances.hpp"
#include "matchlab/io.hpp"

namespace matchlab {

struct VerifyOptions {
  int n_instances = 12;  // seeded geometric markets
  std::uint64_t seed = 1;
  std::vector<double> gamma_ratios = {0.5, 1.0, 2.0};
  std::vector<double> rho_list = {0.1, 0.3, 0.5};
  bool inject_rct_ce_sign_flip = false;  // self-test fixture, see above

  void validate() const {
    if (n_instances < 1)
      throw ConfigError("verify options: n_instances must be >= 1");
    if (gamma_ratios.empty() || rho_list.empty())
      throw ConfigError("verify options: grids must be nonempty");
    for (double g : gamma_ratios)
      if (!(g > 0.0))
        throw ConfigError("verify options: gamma ratios must be > 0");
    for (double r : rho_list)
      if (!(r > 0.0 && r < 1.0))
        throw ConfigError("verify options: rho values must lie in (0, 1)");
  }
};

struct CheckEntry {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  bool passed = false;
  std::string note;
};

struct VerifySection {
  std::string id;
  std::vector<CheckEntry> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const CheckEntry& c) { return c.passed; });
  }
  void add(const std::string& name, double value, double expected,
           bool ok, const std::string& note = "") {
    checks.push_back(CheckEntry{name, value, expected, ok, note});
  }
  void add_exact(const std::string& name, double value, double expected,
                 double tol, const std::string& note = "") {
    add(name, value, expected, close(value, expected, tol), note);
  }
};

struct VerifySummary {
  bool all_passed = true;
  int n_checks = 0;
  int n_failed = 0;
  std::vector<VerifySection> sections;
};

namespace detail {

struct VerifyGrid {
  std::vector<GeometricInstance> instances;
  std::vector<CostModelSpec> cost_specs;
};

inline VerifyGrid build_verify_grid(const VerifyOptions& opts) {
  VerifyGrid grid;
  for (int i = 0; i < opts.n_instances; ++i) {
    GeometricSpec spec;
    spec.seed = opts.seed + static_cast<std::uint64_t>(i);
    grid.instances.push_back(gen_geometric(spec));
  }
  for (const double a : {0.05, 0.10, 0.20})
    grid.cost_specs.push_back({CostKind::Proportional, a, 0.0});
  for (const double f : {0.1, 0.3, 0.5})
    grid.cost_specs.push_back({CostKind::Fixed, 0.0, f});
  return grid;
}

inline std::string grid_point_note(std::uint64_t seed, double ratio,
                                   double rho, const CostModel& cm) {
  return "instance_seed=" + std::to_string(seed) +
         " gamma_ratio=" + fmt_double(ratio) + " rho=" + fmt_double(rho) +
         " cost=" + std::string(to_string(cm.kind)) + "(" +
         fmt_double(cm.param()) + ")";
}

}  // namespace detail

inline VerifySummary run_verification(const VerifyOptions& opts) {
  opts.validate();
  const double flip = opts.inject_rct_ce_sign_flip ? -1.0 : 1.0;
  VerifySummary out;

  auto rct_ce_value = [&](const MatchingInstance& inst, const Rates& rates,
                          const CostModel& cm, double rho) {
    return flip *
           estimate_fluid(EstimatorKind::RctCe, inst, rates, cm, rho).value;
  };

  // ---- Exact values on the teaching market. ------------------------------
  {
    VerifySection sec;
    sec.id = "teaching-market-exact-values";
    const PedagogicalCase pc = pedagogical_case();
    const double tol = kTol;
    sec.add_exact("gte_low_demand",
                  gte_fluid(pc.instance, pc.low_demand, pc.cost), 2.35625,
                  tol);
    sec.add_exact("gte_high_demand",
                  gte_fluid(pc.instance, pc.high_demand, pc.cost), 0.06875,
                  tol);
    sec.add_exact("rct_ce_low_demand_half",
                  rct_ce_value(pc.instance, pc.low_demand, pc.cost, 0.5),
                  3.84, tol);
    sec.add_exact("rct_ci_low_demand_half",
                  estimate_fluid(EstimatorKind::RctCi, pc.instance,
                                 pc.low_demand, pc.cost, 0.5)
                      .value,
                  3.1, tol);
    sec.add_exact("rct_ci_high_demand_half",
                  estimate_fluid(EstimatorKind::RctCi, pc.instance,
                                 pc.high_demand, pc.cost, 0.5)
                      .value,
                  -2.3875, tol);
    sec.add_exact("sp_ce_low_demand_half",
                  estimate_fluid(EstimatorKind::SpCe, pc.instance,
                                 pc.low_demand, pc.cost, 0.5)
                      .value,
                  2.175, tol);
    sec.add_exact("sp_ci_high_demand_half",
                  estimate_fluid(EstimatorKind::SpCi, pc.instance,
                                 pc.high_demand, pc.cost, 0.5)
                      .value,
                  -0.025, tol);
    out.sections.push_back(std::move(sec));
  }

  const detail::VerifyGrid grid = detail::build_verify_grid(opts);

  // ---- Pooled-objective estimator never underestimates in the fluid. -----
  {
    VerifySection sec;
    sec.id = "rct-ce-bias-nonnegative";
    double worst = 0.0;
    std::string worst_note = "no cases";
    int cases = 0;
    for (const auto& gi : grid.instances)
      for (const double ratio : opts.gamma_ratios) {
        const Rates rates = default_rates(gi.instance, ratio);
        for (const auto& spec : grid.cost_specs) {
          const CostModel cm = spec.resolve(gi.instance);
          const double gte = gte_fluid(gi.instance, rates, cm);
          for (const double rho : opts.rho_list) {
            const double bias =
                rct_ce_value(gi.instance, rates, cm, rho) - gte;
            if (cases == 0 || bias < worst) {
              worst = bias;
              worst_note = detail::grid_point_note(gi.seed, ratio, rho, cm);
            }
            ++cases;
          }
        }
      }
    sec.add("worst_bias_at_least", worst, -kTol, worst >= -kTol,
            worst_note + " over " + std::to_string(cases) + " cases");
    out.sections.push_back(std::move(sec));
  }

  // ---- Scaled-benchmark estimator reproduces the fluid effect exactly. ---
  {
    VerifySection sec;
    sec.id = "sb-matches-gte";
    double worst = 0.0;
    std::string worst_note = "no cases";
    int cases = 0;
    for (const auto& gi : grid.instances)
      for (const double ratio : opts.gamma_ratios) {
        const Rates rates = default_rates(gi.instance, ratio);
        for (const auto& spec : grid.cost_specs) {
          const CostModel cm = spec.resolve(gi.instance);
          const double gte = gte_fluid(gi.instance, rates, cm);
          for (const double rho : opts.rho_list) {
            const double diff = std::abs(
                estimate_fluid(EstimatorKind::Sb, gi.instance, rates, cm, rho)
                    .value -
                gte);
            if (diff > worst) {
              worst = diff;
              worst_note = detail::grid_point_note(gi.seed, ratio, rho, cm);
            }
            ++cases;
          }
        }
      }
    sec.add("worst_abs_difference", worst, kTol, worst <= kTol,
            worst_note + " over " + std::to_string(cases) + " cases");
    out.sections.push_back(std::move(sec));
  }

  // ---- Shadow prices reduce bias below the treated-fraction threshold. ---
  {
    VerifySection sec;
    sec.id = "sp-ce-bias-reduction";
    int applicable = 0, failed = 0;
    std::string first_failure;
    for (const auto& gi : grid.instances)
      for (const double ratio : opts.gamma_ratios) {
        const Rates rates = default_rates(gi.instance, ratio);
        for (const auto& spec : grid.cost_specs) {
          const CostModel cm = spec.resolve(gi.instance);
          for (const double rho : opts.rho_list) {
            const TheoremReport rep =
                check_thm_sp_ce_reduction(gi.instance, rates, cm, rho);
            if (!rep.applicable) continue;
            ++applicable;
            if (!rep.holds) {
              ++failed;
              if (first_failure.empty())
                first_failure =
                    detail::grid_point_note(gi.seed, ratio, rho, cm);
            }
          }
        }
      }
    sec.add("violations", failed, 0.0, failed == 0,
            first_failure.empty()
                ? std::to_string(applicable) + " applicable cases"
                : "first failure at " + first_failure);

    // Worst-case tightness: on the 1x1 market both bias magnitudes approach
    // the same limit at the reduction threshold.
    for (const CostModel& cm :
         {CostModel::proportional(0.15), CostModel::fixed(0.3)}) {
      const TightnessCase tc = tightness_instance(cm);
      const double gte = gte_fluid(tc.instance, tc.rates, cm);
      const double rct_bias =
          rct_ce_value(tc.instance, tc.rates, cm, tc.threshold) - gte;
      const double sp_abs_bias =
          std::abs(estimate_fluid(EstimatorKind::SpCe, tc.instance, tc.rates,
                                  cm, tc.threshold + 1e-4)
                       .value -
                   gte);
      const std::string label = to_string(cm.kind);
      sec.add_exact("tightness_" + label + "_rct_bias_at_threshold",
                    rct_bias, tc.limit_bias, 1e-6);
      sec.add_exact("tightness_" + label + "_sp_abs_bias_above_threshold",
                    sp_abs_bias, tc.limit_bias, 1e-6);
    }
    out.sections.push_back(std::move(sec));
  }

  // ---- Group-interference estimator across supply regimes. ---------------
  {
    VerifySection sec;
    sec.id = "rct-ci-supply-regimes";
    int cases = 0, failed = 0;
    std::string first_failure;
    for (const auto& gi : grid.instances)
      for (const auto& spec : grid.cost_specs) {
        const CostModel cm = spec.resolve(gi.instance);
        for (const double rho : opts.rho_list) {
          const Rates rates = default_rates(gi.instance, 1.0);
          const TheoremReport rep =
              check_thm_rct_ci_regimes(gi.instance, rates, cm, rho);
          if (!rep.applicable) continue;
          ++cases;
          if (!rep.holds) {
            ++failed;
            if (first_failure.empty())
              first_failure = detail::grid_point_note(gi.seed, 1.0, rho, cm);
          }
        }
      }
    sec.add("violations", failed, 0.0, failed == 0,
            first_failure.empty() ? std::to_string(cases) + " cases"
                                  : "first failure at " + first_failure);
    out.sections.push_back(std::move(sec));
  }

  // ---- Shadow-price group-interference comparison. -----------------------
  {
    VerifySection sec;
    sec.id = "sp-ci-vs-rct-ci";
    int cases = 0, failed = 0;
    std::string first_failure;
    for (const auto& gi : grid.instances)
      for (const auto& spec : grid.cost_specs) {
        const CostModel cm = spec.resolve(gi.instance);
        for (const double rho : opts.rho_list) {
          const Rates rates = default_rates(gi.instance, 1.0);
          const TheoremReport rep =
              check_thm_sp_ci(gi.instance, rates, cm, rho);
          if (!rep.applicable) continue;
          ++cases;
          if (!rep.holds) {
            ++failed;
            if (first_failure.empty())
              first_failure = detail::grid_point_note(gi.seed, 1.0, rho, cm);
          }
        }
      }
    sec.add("violations", failed, 0.0, failed == 0,
            first_failure.empty() ? std::to_string(cases) + " cases"
                                  : "first failure at " + first_failure);
    out.sections.push_back(std::move(sec));
  }

  // ---- Bias-ratio bound. -------------------------------------------------
  {
    VerifySection sec;
    sec.id = "sp-rct-bias-ratio-bound";
    int applicable = 0, failed = 0;
    std::string first_failure;
    for (const auto& gi : grid.instances)
      for (const double ratio : opts.gamma_ratios) {
        const Rates rates = default_rates(gi.instance, ratio);
        for (const auto& spec : grid.cost_specs) {
          const CostModel cm = spec.resolve(gi.instance);
          for (const double rho : opts.rho_list) {
            const TheoremReport rep =
                check_thm_bias_ratio_bound(gi.instance, rates, cm, rho);
            if (!rep.applicable) continue;
            ++applicable;
            if (!rep.holds) {
              ++failed;
              if (first_failure.empty())
                first_failure =
                    detail::grid_point_note(gi.seed, ratio, rho, cm);
            }
          }
        }
      }
    sec.add("violations", failed, 0.0, failed == 0,
            first_failure.empty()
                ? std::to_string(applicable) + " applicable cases"
                : "first failure at " + first_failure);
    out.sections.push_back(std::move(sec));
  }

  // ---- All-rho unbiasedness characterization. ----------------------------
  {
    VerifySection sec;
    sec.id = "all-rho-unbiasedness";
    int cases = 0, failed = 0;
    std::string first_failure;
    for (const auto& gi : grid.instances)
      for (const double ratio : {0.5, 3.0}) {
        const Rates rates = default_rates(gi.instance, ratio);
        for (const auto& spec : grid.cost_specs) {
          const CostModel cm = spec.resolve(gi.instance);
          const TheoremReport rep =
              check_thm_design_unbiasedness(gi.instance, rates, cm);
          if (!rep.applicable) continue;
          ++cases;
          if (!rep.holds) {
            ++failed;
            if (first_failure.empty())
              first_failure = detail::grid_point_note(gi.seed, ratio, 0.0, cm);
          }
        }
      }
    sec.add("violations", failed, 0.0, failed == 0,
            first_failure.empty() ? std::to_string(cases) + " cases"
                                  : "first failure at " + first_failure);
    out.sections.push_back(std::move(sec));
  }

  for (const VerifySection& sec : out.sections)
    for (const CheckEntry& c : sec.checks) {
      ++out.n_checks;
      if (!c.passed) ++out.n_failed;
    }
  out.all_passed = out.n_failed == 0;
  return out;
}

inline Json verify_summary_to_json(const VerifySummary& s,
                                   const VerifyOptions& opts) {
  Json j;
  j["all_passed"] = s.all_passed;
  j["n_checks"] = s.n_checks;
  j["n_failed"] = s.n_failed;
  j["options"] = {{"n_instances", opts.n_instances},
                  {"seed", opts.seed},
                  {"gamma_ratios", opts.gamma_ratios},
                  {"rho_list", opts.rho_list},
                  {"inject_rct_ce_sign_flip", opts.inject_rct_ce_sign_flip}};
  Json sections = Json::array();
  for (const VerifySection& sec : s.sections) {
    Json js;
    js["id"] = sec.id;
    js["passed"] = sec.passed();
    Json checks = Json::array();
    for (const CheckEntry& c : sec.checks) {
      Json jc;
      jc["name"] = c.name;
      jc["value"] = c.value;
      jc["expected"] = c.expected;
      jc["passed"] = c.passed;
      if (!c.note.empty()) jc["note"] = c.note;
      checks.push_back(jc);
    }
    js["checks"] = checks;
    sections.push_back(js);
  }
  j["sections"] = sections;
  return j;
}

// Runs the suite, writes the JSON report to out_path, and returns whether
// every check passed.
inline bool verify_theorems(const std::string& out_path,
                            const VerifyOptions& opts = {}) {
  const VerifySummary summary = run_verification(opts);
  write_text_file(out_path, verify_summary_to_json(summary, opts).dump(2) +
                                "\n");
  return summary.all_passed;
}

}  // namespace matchlab
