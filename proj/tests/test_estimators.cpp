#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "matchlab/estimators.hpp"
#include "matchlab/instances.hpp"
#include "matchlab/lp.hpp"

using namespace matchlab;

TEST_CASE("fluid effect nets treatment cost out of the matched-value gain") {
  const PedagogicalCase pc = pedagogical_case();
  CHECK(close(gte_fluid(pc.instance, pc.low_demand, pc.cost), 2.35625, 1e-12));
  CHECK(close(gte_fluid(pc.instance, pc.high_demand, pc.cost), 0.06875,
              1e-12));
  // Flat fee per treated match: cost = kappa * matched treated mass.
  CHECK(close(gte_fluid(pc.instance, pc.low_demand, CostModel::fixed(0.1)),
              2.725, 1e-12));
}

TEST_CASE("fluid estimators reproduce the hand-solved teaching values") {
  const PedagogicalCase pc = pedagogical_case();
  const double rho = 0.5;
  const auto value = [&](EstimatorKind k, const Rates& r) {
    return estimate_fluid(k, pc.instance, r, pc.cost, rho).value;
  };
  CHECK(close(value(EstimatorKind::RctCe, pc.low_demand), 3.84, 1e-12));
  CHECK(close(value(EstimatorKind::RctCi, pc.low_demand), 3.1, 1e-12));
  CHECK(close(value(EstimatorKind::SpCe, pc.low_demand), 2.175, 1e-12));
  CHECK(close(value(EstimatorKind::SpCi, pc.low_demand), 2.25, 1e-12));
  CHECK(close(value(EstimatorKind::RctCi, pc.high_demand), -2.3875, 1e-12));
  CHECK(close(value(EstimatorKind::SpCi, pc.high_demand), -0.025, 1e-12));
}

TEST_CASE("supply-balance fluid estimate equals the effect at any treated "
          "fraction") {
  const PedagogicalCase pc = pedagogical_case();
  for (const CostModel cm : {pc.cost, CostModel::fixed(0.05)}) {
    for (const Rates& r : {pc.low_demand, pc.high_demand}) {
      const double gte = gte_fluid(pc.instance, r, cm);
      for (const double rho : {0.2, 0.5, 0.8})
        CHECK(close(estimate_fluid(EstimatorKind::Sb, pc.instance, r, cm, rho)
                        .value,
                    gte, 1e-12));
    }
  }
}

TEST_CASE("shadow-price fluid estimate matches its closed dual form") {
  RngStream r(StreamKey{301, 0, 0, 1});
  for (int rep = 0; rep < 30; ++rep) {
    const MatchingInstance inst = testutil::random_instance(r, 3, 3);
    Rates rates;
    rates.lambda = testutil::random_caps(r, 3, 0.3, 2.0);
    rates.beta = testutil::random_caps(r, 3, 0.0, 1.0);
    rates.gamma = testutil::random_caps(r, 3, 0.3, 2.0);
    const double rho = rep % 2 == 0 ? 0.2 : 0.6;

    const Vec pooled = add(rates.lambda, scale(rates.beta, rho));
    const CeSolution sol = solve_ce(CeProblem{inst, pooled, rates.gamma});
    const double a_beta = dot(sol.demand_dual, rates.beta);

    const double alpha = 0.2;
    const double closed_prop =
        a_beta - alpha * (dot(sol.demand_dual, rates.treated_rate()) +
                          dot(sol.supply_dual, rates.gamma));
    CHECK(close(estimate_fluid(EstimatorKind::SpCe, inst, rates,
                               CostModel::proportional(alpha), rho)
                    .value,
                closed_prop, 1e-9));

    const double kappa = 0.1;
    const double closed_fixed =
        sum(pooled) < sum(rates.gamma)
            ? a_beta - kappa * sum(rates.treated_rate())
            : a_beta - kappa * sum(rates.gamma);
    CHECK(close(estimate_fluid(EstimatorKind::SpCe, inst, rates,
                               CostModel::fixed(kappa), rho)
                    .value,
                closed_fixed, 1e-9));
  }
}

TEST_CASE("replicated finite-sample estimators approach their fluid values") {
  const PedagogicalCase pc = pedagogical_case();
  ExperimentConfig cfg;
  cfg.rho = 0.5;
  cfg.tau = 2000.0;
  const int n = 40;
  const double gte = gte_fluid(pc.instance, pc.low_demand, pc.cost);

  for (const EstimatorKind kind : kAllEstimators) {
    const double fluid =
        estimate_fluid(kind, pc.instance, pc.low_demand, pc.cost, cfg.rho)
            .value;
    double mean = 0.0, m2 = 0.0;
    for (int rep = 0; rep < n; ++rep) {
      const SampledState st =
          sample_state(pc.instance, pc.low_demand, cfg, 555, 1, rep);
      const FiniteEstimate est =
          estimate_finite(kind, st, pc.instance, pc.cost, cfg);
      CHECK_FALSE(est.empty_group);
      const double delta = est.value - mean;
      mean += delta / (rep + 1);
      m2 += delta * (est.value - mean);
    }
    const double se = std::sqrt(m2 / (n - 1) / n);
    CHECK_MESSAGE(std::fabs(mean - fluid) < 5.0 * se + 1e-9,
                  to_string(kind) << ": mean " << mean << " vs fluid "
                                  << fluid << " (se " << se << ")");
  }

  const McEstimate mc =
      gte_finite_mc(pc.instance, pc.low_demand, pc.cost, cfg.tau, n, 555, 1);
  CHECK(std::fabs(mc.mean - gte) < 5.0 * mc.std_error + 1e-9);
}

TEST_CASE("an empty experiment group flags the estimate instead of failing") {
  const PedagogicalCase pc = pedagogical_case();
  SampledState st;
  st.d_con = {1.0};
  st.d_tre = {0.0};
  st.s = {1.0, 1.0, 1.0};
  ExperimentConfig cfg;
  cfg.rho = 0.5;
  cfg.tau = 1.0;

  const FiniteEstimate rct =
      estimate_rct_ce(st, pc.instance, pc.cost, cfg);
  CHECK(rct.empty_group);
  CHECK(close(rct.value, -4.0, 1e-12));  // control still matches 1 unit at 2

  const FiniteEstimate sb = estimate_sb(st, pc.instance, pc.cost, cfg);
  CHECK(sb.empty_group);
  // Minus the all-control value of demand 2 on the observed unit supplies.
  CHECK(close(sb.value, -3.0, 1e-12));
}

TEST_CASE("a tied demand-supply total takes the fallback dual path") {
  const PedagogicalCase pc = pedagogical_case();
  SampledState st;
  st.d_con = {1.0};
  st.d_tre = {2.0};
  st.s = {1.0, 1.0, 1.0};  // observed totals tie: 3 = 3
  ExperimentConfig cfg;
  cfg.rho = 0.5;
  cfg.tau = 1.0;
  const FiniteEstimate est =
      estimate_sp_ce(st, pc.instance, CostModel::fixed(0.1), cfg);
  CHECK(std::isfinite(est.value));
  CHECK_FALSE(est.empty_group);
}

TEST_CASE("treated fractions 0 and 1 are rejected by difference estimators") {
  const PedagogicalCase pc = pedagogical_case();
  CHECK_THROWS_AS(estimate_fluid(EstimatorKind::RctCe, pc.instance,
                                 pc.low_demand, pc.cost, 0.0),
                  ConfigError);
  CHECK_THROWS_AS(estimate_fluid(EstimatorKind::SpCi, pc.instance,
                                 pc.low_demand, pc.cost, 1.0),
                  ConfigError);
  // The supply-balance estimator never differences across groups by rate.
  CHECK_NOTHROW(estimate_fluid(EstimatorKind::Sb, pc.instance, pc.low_demand,
                               pc.cost, 1.0));

  SampledState st;
  st.d_con = {1.0};
  st.d_tre = {1.0};
  st.s = {1.0, 1.0, 1.0};
  ExperimentConfig cfg;
  cfg.rho = 0.0;
  CHECK_THROWS_AS(estimate_rct_ci(st, pc.instance, pc.cost, cfg), ConfigError);
}

TEST_CASE("estimate records always store the estimate-effect gap") {
  const CostModel cm = CostModel::proportional(0.1);
  const EstimateRecord rec = make_record(EstimatorKind::SpCe, 1.25, 1.0,
                                         Regime::Fluid, 0.3, 1.0, cm);
  CHECK(rec.bias == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(rec.kind == EstimatorKind::SpCe);
  CHECK(rec.regime == Regime::Fluid);
}

TEST_CASE("monte carlo effect estimates are reproducible") {
  const PedagogicalCase pc = pedagogical_case();
  const McEstimate a =
      gte_finite_mc(pc.instance, pc.low_demand, pc.cost, 50.0, 16, 9, 3);
  const McEstimate b =
      gte_finite_mc(pc.instance, pc.low_demand, pc.cost, 50.0, 16, 9, 3);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK_THROWS_AS(
      gte_finite_mc(pc.instance, pc.low_demand, pc.cost, 50.0, 1, 9, 3),
      InputError);
}
