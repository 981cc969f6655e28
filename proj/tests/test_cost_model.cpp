#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "matchlab/lp.hpp"
#include "matchlab/model.hpp"
#include "matchlab/rng.hpp"

using namespace matchlab;

TEST_CASE("cost model validation rejects out-of-range parameters") {
  const MatchingInstance inst = testutil::make_instance(1, 2, {1.0, 0.4});
  CHECK_THROWS_AS(CostModel::proportional(1.0).validate(), InputError);
  CHECK_THROWS_AS(CostModel::proportional(-0.1).validate(), InputError);
  CHECK_THROWS_AS(CostModel::fixed(0.0).validate(), InputError);
  CHECK_THROWS_AS(CostModel::fixed(0.4).validate_for(inst), InputError);
  CHECK_NOTHROW(CostModel::proportional(0.0).validate());
  CHECK_NOTHROW(CostModel::fixed(0.39).validate_for(inst));
}

TEST_CASE("discounted weights implement both cost models") {
  const MatchingInstance inst = testutil::make_instance(1, 2, {2.0, 0.5});
  const Vec prop = discounted_weights(inst, CostModel::proportional(0.15));
  CHECK(close(prop[0], 1.7, 1e-15));
  CHECK(close(prop[1], 0.425, 1e-15));
  const Vec fixed = discounted_weights(inst, CostModel::fixed(0.2));
  CHECK(close(fixed[0], 1.8, 1e-15));
  CHECK(close(fixed[1], 0.3, 1e-15));
}

TEST_CASE("dual discounting shifts the scarce side") {
  SUBCASE("proportional scales both sides") {
    const auto dd = discounted_duals(CostModel::proportional(0.25),
                                     {2.0, 0.8}, {1.0}, 3.0, 5.0);
    CHECK(close(dd.demand[0], 1.5, 1e-15));
    CHECK(close(dd.demand[1], 0.6, 1e-15));
    CHECK(close(dd.supply[0], 0.75, 1e-15));
  }
  SUBCASE("fixed shifts demand when demand is scarce") {
    const auto dd =
        discounted_duals(CostModel::fixed(0.3), {1.0, 0.5}, {0.2}, 2.0, 3.0);
    CHECK(close(dd.demand[0], 0.7, 1e-15));
    CHECK(close(dd.demand[1], 0.2, 1e-15));
    CHECK(close(dd.supply[0], 0.2, 1e-15));
  }
  SUBCASE("fixed shifts supply when supply is scarce") {
    const auto dd =
        discounted_duals(CostModel::fixed(0.3), {0.0}, {1.0, 0.4}, 3.0, 2.0);
    CHECK(close(dd.demand[0], 0.0, 1e-15));
    CHECK(close(dd.supply[0], 0.7, 1e-15));
    CHECK(close(dd.supply[1], 0.1, 1e-15));
  }
  SUBCASE("a balanced tie falls back to the demand shift when needed") {
    // Supply dual has a zero entry, so the preferred supply shift fails;
    // the same dual vector supports a demand shift because totals tie.
    const auto dd = discounted_duals(CostModel::fixed(0.3), {0.4},
                                     {0.6, 0.0}, 2.0, 2.0);
    CHECK(close(dd.demand[0], 0.1, 1e-15));
    CHECK(close(dd.supply[0], 0.6, 1e-15));
    CHECK(close(dd.supply[1], 0.0, 1e-15));
  }
  SUBCASE("non-optimal inputs surface as errors") {
    CHECK_THROWS_AS(
        discounted_duals(CostModel::fixed(0.3), {0.0}, {1.0, 0.0}, 3.0, 2.0),
        PreconditionError);
    CHECK_THROWS_AS(
        discounted_duals(CostModel::fixed(0.3), {0.0, 0.0}, {0.1}, 1.0, 2.0),
        PreconditionError);
  }
}

TEST_CASE("transformed duals certify optimality of the discounted problem") {
  RngStream r(StreamKey{77, 0, 0, 1});
  for (int rep = 0; rep < 60; ++rep) {
    const int nd = 1 + static_cast<int>(r.next_u64() % 4);
    const int ns = 1 + static_cast<int>(r.next_u64() % 4);
    const MatchingInstance inst = testutil::random_instance(r, nd, ns);
    Vec d = testutil::random_caps(r, nd, 0.3, 1.5);
    Vec s = testutil::random_caps(r, ns, 0.3, 1.5);
    // Alternate strictly demand- and supply-constrained markets.
    if (rep % 2 == 0)
      s = testutil::with_total(std::move(s), 1.6 * sum(d));
    else
      d = testutil::with_total(std::move(d), 1.6 * sum(s));

    const CeProblem p{inst, d, s};
    const CeSolution sol = solve_ce(p);
    const CostModel cm = (rep % 4 < 2) ? CostModel::proportional(0.35)
                                       : CostModel::fixed(0.15);
    const auto dd = discounted_duals(cm, sol.demand_dual, sol.supply_dual,
                                     sum(d), sum(s));

    // The undiscounted optimal flow stays optimal after discounting (both
    // transforms preserve the optimal face), so flow plus transformed duals
    // must pass the discounted problem's optimality certificate.
    MatchingInstance disc = inst;
    disc.v = discounted_weights(inst, cm);
    CeSolution dsol;
    dsol.flow = sol.flow;
    dsol.demand_dual = dd.demand;
    dsol.supply_dual = dd.supply;
    double obj = 0.0;
    for (std::size_t k = 0; k < disc.v.size(); ++k)
      obj += disc.v[k] * sol.flow[k];
    dsol.objective = obj;
    const auto kkt = verify_kkt(CeProblem{disc, d, s}, dsol, 1e-7);
    CHECK_MESSAGE(kkt.empty(), testutil::kkt_text(kkt));
  }
}
