#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "matchlab/estimators.hpp"
#include "matchlab/fluid.hpp"
#include "matchlab/instances.hpp"

using namespace matchlab;

namespace {

bool has_breakpoint_near(const PathProfile& pp, double where, double tol) {
  for (double b : pp.breakpoints)
    if (std::fabs(b - where) <= tol) return true;
  return false;
}

}  // namespace

TEST_CASE("path slopes reproduce the teaching instance's hand-solved duals") {
  const PedagogicalCase pc = pedagogical_case();

  SUBCASE("low-demand panel: interior point away from kinks") {
    const PathDuals left =
        duals_at(pc.instance, pc.low_demand, pc.cost, 0.5, Side::Left);
    const PathDuals right =
        duals_at(pc.instance, pc.low_demand, pc.cost, 0.5, Side::Right);
    CHECK(close(path_slope(pc.low_demand, left), 2.25, 1e-9));
    CHECK(close(path_slope(pc.low_demand, right), 2.25, 1e-9));
  }

  SUBCASE("high-demand panel: a kink sits exactly at one half") {
    const PathDuals left =
        duals_at(pc.instance, pc.high_demand, pc.cost, 0.5, Side::Left);
    const PathDuals right =
        duals_at(pc.instance, pc.high_demand, pc.cost, 0.5, Side::Right);
    CHECK(close(path_slope(pc.high_demand, left), -0.025, 1e-9));
    CHECK(close(path_slope(pc.high_demand, right), -0.475, 1e-9));
  }

  SUBCASE("input validation and clamping") {
    CHECK_THROWS_AS(
        duals_at(pc.instance, pc.low_demand, pc.cost, -0.1, Side::Right),
        InputError);
    CHECK(duals_at(pc.instance, pc.low_demand, pc.cost, 0.0, Side::Left)
              .clamped);
  }
}

TEST_CASE("path profile integrates its slopes and locates interior kinks") {
  const PedagogicalCase pc = pedagogical_case();
  const PathProfile pp =
      path_profile(pc.instance, pc.low_demand, pc.cost, 1001);

  CHECK(close(pp.values.front(), 2.0, 1e-9));
  CHECK(close(pp.values.back(), 4.35625, 1e-9));
  CHECK(std::fabs(pp.values.back() - pp.values.front() - pp.slope_integral) <
        1e-6);

  // The first supply type saturates at eta = 1/6, the second at 5/6.
  REQUIRE(pp.breakpoints.size() == 2);
  CHECK(has_breakpoint_near(pp, 1.0 / 6.0, 1e-6));
  CHECK(has_breakpoint_near(pp, 5.0 / 6.0, 1e-6));

  CHECK_THROWS_AS(path_profile(pc.instance, pc.low_demand, pc.cost, 2),
                  InputError);
}

TEST_CASE("high-demand path values match the hand solve") {
  const PedagogicalCase pc = pedagogical_case();
  const PathProfile pp =
      path_profile(pc.instance, pc.high_demand, pc.cost, 5);
  CHECK(close(pp.values[1], 4.8125, 1e-9));  // eta = 0.25
  CHECK(std::fabs(pp.values.back() - pp.values.front() - pp.slope_integral) <
        1e-6);
}

TEST_CASE("a null intervention yields a flat profile with no kinks") {
  const PedagogicalCase pc = pedagogical_case();
  Rates r = pc.low_demand;
  r.beta = {0.0};
  const PathProfile pp =
      path_profile(pc.instance, r, CostModel::proportional(0.0), 101);
  CHECK(max_abs(pp.left_slopes) < 1e-9);
  CHECK(max_abs(pp.right_slopes) < 1e-9);
  CHECK(std::fabs(pp.slope_integral) < 1e-9);
  CHECK(pp.breakpoints.empty());
}

TEST_CASE("pooled-path averages and endpoint duals") {
  const PedagogicalCase pc = pedagogical_case();
  const CeAverages avg =
      ce_averages(pc.instance, {4.0}, pc.high_demand.gamma);
  CHECK(close(avg.vbar[0], 1.28125, 1e-12));
  CHECK(close(avg.xbar[0], 1.0, 1e-12));

  // Low-demand panel: marginal value 2 at the control end, 0.25 at the
  // treatment end.
  const CeSolution at0 =
      ce_duals_at(pc.instance, pc.low_demand, 0.0, Side::Right);
  const CeSolution at1 =
      ce_duals_at(pc.instance, pc.low_demand, 1.0, Side::Left);
  CHECK(close(at0.demand_dual[0], 2.0, 1e-9));
  CHECK(close(at1.demand_dual[0], 0.25, 1e-9));
}

TEST_CASE("supply-scaling landmarks on the teaching instance") {
  const PedagogicalCase pc = pedagogical_case();
  const GammaRegimes gr =
      find_gamma_regimes(pc.instance, pc.low_demand, pc.cost, 0.5);

  CHECK(gr.top_choice == std::vector<int>{0});
  // Saturation: the top supply type must hold all treated demand,
  // 4 = scale * 1.5.
  CHECK(close(gr.scale_m, 4.0 / 1.5, 1e-6));
  CHECK(close(gr.gamma_m, gr.scale_m * 5.5, 1e-9));
  CHECK(close(gr.gamma_low_threshold, 0.5, 1e-12));
  CHECK(close(gr.scale_low, 0.25 / 5.5, 1e-12));
  CHECK(gr.short_type == 0);
  CHECK(gr.epsilon > 0.0);
  CHECK(gr.epsilon <= 1e-3);
  CHECK(gr.gamma_0 < gr.gamma_m);

  SUBCASE("no treated demand") {
    Rates r = pc.low_demand;
    r.lambda = {0.0};
    r.beta = {0.0};
    CHECK_THROWS_AS(find_gamma_regimes(pc.instance, r, pc.cost, 0.5),
                    PreconditionError);
  }
  SUBCASE("tied top choices are rejected") {
    const MatchingInstance tie = testutil::make_instance(1, 2, {1.0, 1.0});
    Rates r;
    r.lambda = {1.0};
    r.beta = {1.0};
    r.gamma = {1.0, 1.0};
    CHECK_THROWS_AS(top_choice_map(tie), PreconditionError);
    CHECK_THROWS_AS(
        find_gamma_regimes(tie, r, CostModel::proportional(0.1), 0.5),
        PreconditionError);
  }
}

TEST_CASE("supply-regime checker certifies signs and the closed-form ratio") {
  const PedagogicalCase pc = pedagogical_case();
  for (const CostModel cm : {pc.cost, CostModel::fixed(0.1)}) {
    const TheoremReport rep =
        check_thm_rct_ci_regimes(pc.instance, pc.low_demand, cm, 0.3);
    CHECK(rep.applicable);
    CHECK_MESSAGE(rep.holds, rep.id << ": " << rep.note);
    CHECK(rep.witnesses.size() == 3);
  }
}

TEST_CASE("bias-reduction checker respects its threshold") {
  const PedagogicalCase pc = pedagogical_case();
  const TheoremReport in =
      check_thm_sp_ce_reduction(pc.instance, pc.low_demand, pc.cost, 0.3);
  CHECK(in.applicable);
  CHECK_MESSAGE(in.holds, in.note);

  // Threshold for alpha = 0.15 is 0.85/1.85 < 0.5: no claim at 0.5.
  const TheoremReport out =
      check_thm_sp_ce_reduction(pc.instance, pc.low_demand, pc.cost, 0.5);
  CHECK_FALSE(out.applicable);
  CHECK(out.holds);
}

TEST_CASE("ratio-bound checker distinguishes applicable instances") {
  const PedagogicalCase pc = pedagogical_case();

  // Low-demand panel at rho = 0.3: the experiment's average matched value
  // sits below the control-end marginal value, so the bound's assumption
  // fails and no claim is made.
  const TheoremReport na =
      check_thm_bias_ratio_bound(pc.instance, pc.low_demand, pc.cost, 0.3);
  CHECK_FALSE(na.applicable);
  CHECK(na.holds);

  // High-demand panel at rho = 0.5: assumption holds and the bound is
  // respected.
  const TheoremReport ok =
      check_thm_bias_ratio_bound(pc.instance, pc.high_demand, pc.cost, 0.5);
  CHECK(ok.applicable);
  CHECK_MESSAGE(ok.holds, ok.note);
}

TEST_CASE("cost-included comparison checker certifies both regimes") {
  const PedagogicalCase pc = pedagogical_case();
  const TheoremReport rep =
      check_thm_sp_ci(pc.instance, pc.low_demand, pc.cost, 0.3);
  CHECK(rep.applicable);
  CHECK_MESSAGE(rep.holds, rep.note);

  // Deep-undersupply ratio: alpha / (1/(1-rho) - alpha).
  bool saw_ratio = false;
  for (const Witness& w : rep.witnesses)
    if (w.name == "low_supply_ratio_matches") {
      saw_ratio = true;
      CHECK(close(w.rhs, 0.15 / (1.0 / 0.7 - 0.15), 1e-12));
    }
  CHECK(saw_ratio);
}

TEST_CASE("unbiasedness characterization holds on contrasting designs") {
  const PedagogicalCase pc = pedagogical_case();

  // Scarce supply: endpoint duals differ, and some treated fraction is
  // biased — the equivalence must hold with both sides false.
  const TheoremReport scarce = check_thm_design_unbiasedness(
      pc.instance, pc.low_demand, pc.cost);
  CHECK_MESSAGE(scarce.holds, scarce.note);

  // Abundant supply: endpoint duals agree, the no-interference matching
  // structure holds, and every treated fraction is unbiased.
  Rates ample = pc.low_demand;
  ample.gamma = {10.0, 10.0, 10.0};
  for (const CostModel cm : {pc.cost, CostModel::fixed(0.05)}) {
    const TheoremReport rep =
        check_thm_design_unbiasedness(pc.instance, ample, cm);
    CHECK_MESSAGE(rep.holds, rep.note);
    bool ce_condition_true = false, ci_structure_true = false;
    for (const Witness& w : rep.witnesses) {
      if (w.name == "ce_condition_iff_all_rho_unbiased")
        ce_condition_true = w.lhs == 1.0 && w.rhs == 1.0;
      if (w.name == "ci_structure_iff_all_rho_unbiased")
        ci_structure_true = w.lhs == 1.0 && w.rhs == 1.0;
    }
    CHECK(ce_condition_true);
    CHECK(ci_structure_true);
  }
}

TEST_CASE("tightness case attains the bias-reduction limit") {
  for (const CostModel cm :
       {CostModel::proportional(0.15), CostModel::fixed(0.3)}) {
    const TightnessCase tc = tightness_instance(cm);
    CHECK(close(gte_fluid(tc.instance, tc.rates, cm), tc.expected_gte,
                1e-12));

    // At the threshold the difference-in-means bias equals the limit.
    const double gte = gte_fluid(tc.instance, tc.rates, cm);
    const double rct_bias =
        estimate_fluid(EstimatorKind::RctCe, tc.instance, tc.rates, cm,
                       tc.threshold)
            .value -
        gte;
    CHECK(close(rct_bias, tc.limit_bias, 1e-9));

    // Just above it the shadow-price bias reaches the same magnitude.
    const double sp_bias =
        estimate_fluid(EstimatorKind::SpCe, tc.instance, tc.rates, cm,
                       tc.threshold + 1e-4)
            .value -
        gte;
    CHECK(close(std::fabs(sp_bias), tc.limit_bias, 1e-9));
  }
}
