#pragma once

// Market-level state: arrival rate profiles, experiment configuration
// (treatment share rho, market size tau), Poisson-sampled finite states, and
// the proportional split of pooled flows back into control/treated parts.

#include <cstdint>

#include "matchlab/core.hpp"
#include "matchlab/lp.hpp"
#include "matchlab/rng.hpp"

namespace matchlab {

// Arrival rates per unit market size: baseline demand lambda (per demand
// type), demand uplift beta gained under treatment, and supply gamma (per
// supply type).
struct Rates {
  Vec lambda;
  Vec beta;
  Vec gamma;

  void validate(const MatchingInstance& inst) const {
    if (lambda.size() != static_cast<std::size_t>(inst.n_d) ||
        beta.size() != static_cast<std::size_t>(inst.n_d) ||
        gamma.size() != static_cast<std::size_t>(inst.n_s))
      throw InputError("Rates: vector sizes do not match the instance");
    for (double x : lambda)
      if (!(x >= 0.0)) throw InputError("Rates: lambda must be >= 0");
    for (double x : beta)
      if (!(x >= 0.0)) throw InputError("Rates: beta must be >= 0");
    for (double x : gamma)
      if (!(x > 0.0)) throw InputError("Rates: gamma must be > 0");
  }

  Vec treated_rate() const { return add(lambda, beta); }
};

struct ExperimentConfig {
  double rho = 0.5;  // treated share of demand, in [0, 1]
  double tau = 1.0;  // market size multiplier, > 0

  void validate() const {
    if (!(rho >= 0.0 && rho <= 1.0))
      throw InputError("ExperimentConfig: rho must lie in [0, 1]");
    if (!(tau > 0.0))
      throw InputError("ExperimentConfig: tau must be > 0");
  }
};

// One Poisson draw of the experiment's market state. Counts are stored as
// doubles (they are exact small integers) so they feed the LP layer
// directly. The key fields echo where the randomness came from.
struct SampledState {
  Vec d_con;
  Vec d_tre;
  Vec s;
  std::uint64_t seed = 0;
  std::uint64_t instance_id = 0;
  std::uint64_t replication_id = 0;
};

namespace detail {

inline RngStream component_stream(std::uint64_t seed, std::uint64_t instance,
                                  std::uint64_t replication, StreamRole role,
                                  std::uint64_t component) {
  return RngStream(StreamKey{seed, instance, replication,
                             stream_id(role, component)});
}

}  // namespace detail

// Samples the experiment state: control demand at rate tau*(1-rho)*lambda,
// treated demand at rate tau*rho*(lambda+beta), supply at rate tau*gamma.
// Each vector component owns a substream, so states sampled for related
// configurations (different rho, or the paired full-treatment/full-control
// states below) share uniforms component-wise.
inline SampledState sample_state(const MatchingInstance& inst,
                                 const Rates& rates,
                                 const ExperimentConfig& cfg,
                                 std::uint64_t seed, std::uint64_t instance_id,
                                 std::uint64_t replication_id) {
  rates.validate(inst);
  cfg.validate();
  SampledState st;
  st.seed = seed;
  st.instance_id = instance_id;
  st.replication_id = replication_id;
  st.d_con.resize(inst.n_d);
  st.d_tre.resize(inst.n_d);
  st.s.resize(inst.n_s);
  for (int i = 0; i < inst.n_d; ++i) {
    auto rc = detail::component_stream(seed, instance_id, replication_id,
                                       StreamRole::DemandControl, i);
    st.d_con[i] = static_cast<double>(
        sample_poisson(cfg.tau * (1.0 - cfg.rho) * rates.lambda[i], rc));
    auto rt = detail::component_stream(seed, instance_id, replication_id,
                                       StreamRole::DemandTreated, i);
    st.d_tre[i] = static_cast<double>(sample_poisson(
        cfg.tau * cfg.rho * (rates.lambda[i] + rates.beta[i]), rt));
  }
  for (int j = 0; j < inst.n_s; ++j) {
    auto rs = detail::component_stream(seed, instance_id, replication_id,
                                       StreamRole::Supply, j);
    st.s[j] = static_cast<double>(sample_poisson(cfg.tau * rates.gamma[j], rs));
  }
  return st;
}

// The pair of counterfactual states backing the treatment effect: everyone
// treated vs everyone in control. The supply draw reuses the exact same
// streams as `sample_state`, so all three states share one supply
// realization; the demand draws reuse the experiment state's per-component
// uniform streams, which couples them comonotonically wherever inversion
// sampling applies.
struct GtePairState {
  Vec d_treatment;  // demand under global treatment, rate tau*(lambda+beta)
  Vec d_control;    // demand under global control, rate tau*lambda
  Vec s;            // shared supply draw
};

inline GtePairState sample_gte_pair(const MatchingInstance& inst,
                                    const Rates& rates, double tau,
                                    std::uint64_t seed,
                                    std::uint64_t instance_id,
                                    std::uint64_t replication_id) {
  rates.validate(inst);
  if (!(tau > 0.0)) throw InputError("sample_gte_pair: tau must be > 0");
  GtePairState st;
  st.d_treatment.resize(inst.n_d);
  st.d_control.resize(inst.n_d);
  st.s.resize(inst.n_s);
  for (int i = 0; i < inst.n_d; ++i) {
    auto rt = detail::component_stream(seed, instance_id, replication_id,
                                       StreamRole::DemandTreated, i);
    st.d_treatment[i] = static_cast<double>(
        sample_poisson(tau * (rates.lambda[i] + rates.beta[i]), rt));
    auto rc = detail::component_stream(seed, instance_id, replication_id,
                                       StreamRole::DemandControl, i);
    st.d_control[i] =
        static_cast<double>(sample_poisson(tau * rates.lambda[i], rc));
  }
  for (int j = 0; j < inst.n_s; ++j) {
    auto rs = detail::component_stream(seed, instance_id, replication_id,
                                       StreamRole::Supply, j);
    st.s[j] = static_cast<double>(sample_poisson(tau * rates.gamma[j], rs));
  }
  return st;
}

// A point on the continuous experiment path parametrized by eta in [0, 1]:
// a fraction eta of demand behaves as treated (full uplift), the rest as
// control. eta = rho recovers the fluid experiment state; eta = 0 and
// eta = 1 are the global-control and global-treatment states.
struct PathState {
  Vec d_con;
  Vec d_tre;
};

inline PathState ci_path_state(const Rates& rates, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw InputError("ci_path_state: eta must lie in [0, 1]");
  PathState ps;
  ps.d_con = scale(rates.lambda, 1.0 - eta);
  ps.d_tre = scale(rates.treated_rate(), eta);
  return ps;
}

// Splits pooled flows into control and treated parts in proportion to the
// group counts of each demand type. The two parts sum back to the input
// exactly (the treated part is computed as the remainder); types with no
// experiment demand contribute zero to both.
struct SplitFlows {
  Vec flow_con;
  Vec flow_tre;
};

inline SplitFlows split_ce_flows(const MatchingInstance& inst, const Vec& flow,
                                 const Vec& d_con, const Vec& d_tre) {
  if (flow.size() != inst.v.size() ||
      d_con.size() != static_cast<std::size_t>(inst.n_d) ||
      d_tre.size() != static_cast<std::size_t>(inst.n_d))
    throw InputError("split_ce_flows: size mismatch");
  SplitFlows out;
  out.flow_con.assign(flow.size(), 0.0);
  out.flow_tre.assign(flow.size(), 0.0);
  for (int i = 0; i < inst.n_d; ++i) {
    const double total = d_con[i] + d_tre[i];
    const double share = total > 0.0 ? d_con[i] / total : 0.0;
    for (int j = 0; j < inst.n_s; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * inst.n_s + j;
      if (total <= 0.0) continue;  // no experiment demand of this type
      out.flow_con[k] = flow[k] * share;
      out.flow_tre[k] = flow[k] - out.flow_con[k];
    }
  }
  return out;
}

}  // namespace matchlab
