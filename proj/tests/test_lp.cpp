#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "matchlab/lp.hpp"
#include "matchlab/rng.hpp"

using namespace matchlab;

namespace {

MatchingInstance teaching_instance() {
  return testutil::make_instance(1, 3, {2.0, 1.0, 0.25});
}

double phi(const MatchingInstance& inst, const Vec& d, const Vec& s) {
  return solve_ce(CeProblem{inst, d, s}).objective;
}

}  // namespace

TEST_CASE("pooled solve matches exhaustive search and certifies optimality") {
  RngStream r(StreamKey{2024, 0, 0, 7});
  int checked = 0;
  while (checked < 120) {
    const int nd = 1 + static_cast<int>(r.next_u64() % 3);
    const int ns = 1 + static_cast<int>(r.next_u64() % 3);
    const MatchingInstance inst = testutil::random_instance(r, nd, ns);
    Vec d(nd), s(ns);
    for (double& x : d) x = static_cast<double>(r.next_u64() % 4);
    for (double& x : s) x = static_cast<double>(r.next_u64() % 4);
    if (sum(d) > 12.0 || sum(s) > 12.0) continue;
    const CeProblem p{inst, d, s};
    const CeSolution sol = solve_ce(p);
    const auto brute = brute_force_matching(p);
    CHECK(close(sol.objective, brute.objective, 1e-9));
    const auto kkt = verify_kkt(p, sol);
    CHECK_MESSAGE(kkt.empty(), testutil::kkt_text(kkt));
    ++checked;
  }
}

TEST_CASE("two-group solve matches exhaustive search and certifies optimality") {
  RngStream r(StreamKey{2024, 0, 0, 8});
  int checked = 0;
  while (checked < 80) {
    const int nd = 1 + static_cast<int>(r.next_u64() % 2);
    const int ns = 1 + static_cast<int>(r.next_u64() % 3);
    const MatchingInstance inst = testutil::random_instance(r, nd, ns);
    Vec dc(nd), dt(nd), s(ns);
    for (double& x : dc) x = static_cast<double>(r.next_u64() % 3);
    for (double& x : dt) x = static_cast<double>(r.next_u64() % 3);
    for (double& x : s) x = static_cast<double>(r.next_u64() % 4);
    if (sum(dc) + sum(dt) > 12.0 || sum(s) > 12.0) continue;
    const CostModel cm = (checked % 2 == 0) ? CostModel::proportional(0.3)
                                            : CostModel::fixed(0.1);
    const CiProblem p{inst, dc, dt, s, cm};
    const CiSolution sol = solve_ci(p);
    const auto brute = brute_force_matching(p);
    CHECK(close(sol.objective, brute.objective, 1e-9));
    const auto kkt = verify_kkt(p, sol);
    CHECK_MESSAGE(kkt.empty(), testutil::kkt_text(kkt));
    ++checked;
  }
}

TEST_CASE("pooled value function traces its hand-computed breakpoints") {
  const MatchingInstance inst = teaching_instance();
  const Vec s = {1.5, 2.0, 2.0};
  CHECK(close(phi(inst, {1.0}, s), 2.0, 1e-12));
  CHECK(close(phi(inst, {1.5}, s), 3.0, 1e-12));
  CHECK(close(phi(inst, {3.5}, s), 5.0, 1e-12));
  CHECK(close(phi(inst, {4.0}, s), 5.125, 1e-12));
  CHECK(close(phi(inst, {5.5}, s), 5.5, 1e-12));
  CHECK(close(phi(inst, {7.0}, s), 5.5, 1e-12));  // saturated at total value
}

TEST_CASE("demand duals equal the local slope of the value function") {
  const MatchingInstance inst = teaching_instance();
  const Vec s = {1.5, 2.0, 2.0};
  const struct {
    double d, slope;
  } cases[] = {{1.0, 2.0}, {2.5, 1.0}, {4.5, 0.25}, {6.5, 0.0}};
  for (const auto& c : cases) {
    const CeSolution sol = solve_ce(CeProblem{inst, {c.d}, s});
    CHECK(close(sol.demand_dual[0], c.slope, 1e-12));
    const double h = 1e-4;
    const double fd =
        (phi(inst, {c.d + h}, s) - phi(inst, {c.d - h}, s)) / (2.0 * h);
    CHECK(close(sol.demand_dual[0], fd, 1e-9));
  }
}

TEST_CASE("one-sided markets price the absent side at its best match value") {
  RngStream r(StreamKey{2024, 0, 0, 9});
  const MatchingInstance inst = testutil::random_instance(r, 3, 2);
  SUBCASE("no demand") {
    const CeSolution sol = solve_ce(CeProblem{inst, {0, 0, 0}, {1.0, 2.0}});
    CHECK(sol.objective == 0.0);
    CHECK(sol.degenerate);
    for (int i = 0; i < 3; ++i) {
      double best = 0.0;
      for (int j = 0; j < 2; ++j) best = std::max(best, inst.value(i, j));
      CHECK(close(sol.demand_dual[i], best, 1e-12));
    }
    CHECK(max_abs(sol.supply_dual) == 0.0);
  }
  SUBCASE("no supply") {
    const CeSolution sol = solve_ce(CeProblem{inst, {1, 1, 1}, {0.0, 0.0}});
    CHECK(sol.objective == 0.0);
    CHECK(sol.degenerate);
    for (int j = 0; j < 2; ++j) {
      double best = 0.0;
      for (int i = 0; i < 3; ++i) best = std::max(best, inst.value(i, j));
      CHECK(close(sol.supply_dual[j], best, 1e-12));
    }
    CHECK(max_abs(sol.demand_dual) == 0.0);
  }
}

TEST_CASE("degeneracy flag distinguishes balanced from slack optima") {
  const MatchingInstance inst = testutil::make_instance(1, 1, {1.0});
  CHECK(solve_ce(CeProblem{inst, {1.0}, {2.0}}).degenerate == false);
  CHECK(solve_ce(CeProblem{inst, {1.0}, {1.0}}).degenerate == true);
}

TEST_CASE("two-group solves with one empty group reduce to pooled solves") {
  RngStream r(StreamKey{2024, 0, 0, 10});
  for (int rep = 0; rep < 20; ++rep) {
    const MatchingInstance inst = testutil::random_instance(r, 2, 3);
    const Vec d = testutil::random_caps(r, 2, 0.3, 2.0);
    const Vec s = testutil::random_caps(r, 3, 0.3, 2.0);
    const CostModel cm = (rep % 2 == 0) ? CostModel::proportional(0.25)
                                        : CostModel::fixed(0.15);
    const Vec zero(2, 0.0);

    // All-control: the cost model is irrelevant.
    const double ci_con =
        solve_ci(CiProblem{inst, d, zero, s, cm}).objective;
    CHECK(close(ci_con, phi(inst, d, s), 1e-9));

    // All-treated: equals a pooled solve on the discounted weights.
    const double ci_tre =
        solve_ci(CiProblem{inst, zero, d, s, cm}).objective;
    MatchingInstance disc = inst;
    disc.v = discounted_weights(inst, cm);
    CHECK(close(ci_tre, phi(disc, d, s), 1e-9));
  }
}

TEST_CASE("discounting transforms the all-treated objective exactly") {
  RngStream r(StreamKey{2024, 0, 0, 11});
  for (int rep = 0; rep < 20; ++rep) {
    const MatchingInstance inst = testutil::random_instance(r, 3, 2);
    const Vec d = testutil::random_caps(r, 3, 0.2, 2.0);
    const Vec s = testutil::random_caps(r, 2, 0.2, 2.0);
    const Vec zero(3, 0.0);
    const double base = phi(inst, d, s);

    const double alpha = 0.35;
    const double prop =
        solve_ci(CiProblem{inst, zero, d, s, CostModel::proportional(alpha)})
            .objective;
    CHECK(close(prop, (1.0 - alpha) * base, 1e-9));

    const double kappa = 0.12;
    const double fixed =
        solve_ci(CiProblem{inst, zero, d, s, CostModel::fixed(kappa)})
            .objective;
    CHECK(close(fixed, base - kappa * std::min(sum(d), sum(s)), 1e-9));
  }
}

TEST_CASE("treatment cost identities at full treatment") {
  RngStream r(StreamKey{2024, 0, 0, 12});
  for (int rep = 0; rep < 20; ++rep) {
    const MatchingInstance inst = testutil::random_instance(r, 2, 2);
    const Vec d = testutil::random_caps(r, 2, 0.2, 2.0);
    const Vec s = testutil::random_caps(r, 2, 0.2, 2.0);
    const Vec zero(2, 0.0);
    const double base = phi(inst, d, s);

    const double alpha = 0.2;
    CHECK(close(
        intervention_cost(inst, CostModel::proportional(alpha), zero, d, s),
        alpha * base, 1e-9));

    const double kappa = 0.1;
    CHECK(close(intervention_cost(inst, CostModel::fixed(kappa), zero, d, s),
                kappa * std::min(sum(d), sum(s)), 1e-9));
  }
}

TEST_CASE("exhaustive oracle rejects out-of-scope inputs") {
  const MatchingInstance inst = testutil::make_instance(1, 1, {1.0});
  CHECK_THROWS_AS(brute_force_matching(CeProblem{inst, {13.0}, {1.0}}),
                  ScopeError);
  CHECK_THROWS_AS(brute_force_matching(CeProblem{inst, {1.5}, {1.0}}),
                  ScopeError);
}
