#pragma once

// Serialization layer: instance JSON, strict sweep-configuration parsing
// (unknown fields are errors), and deterministic number formatting for CSV
// output (shortest round-trip via std::to_chars, so identical runs produce
// identical bytes).

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "matchlab/core.hpp"
#include "matchlab/instances.hpp"
#include "matchlab/model.hpp"

namespace matchlab {

using Json = nlohmann::json;

// Shortest representation that round-trips to the same double.
inline std::string fmt_double(double x) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (res.ec != std::errc())
    throw InternalError("fmt_double: formatting failed");
  return std::string(buf.data(), res.ptr);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write file: " + path);
  out << content;
  if (!out) throw InputError("write failed: " + path);
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(what + ": invalid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Instance JSON: {n_d, n_s, v: row-major array, meta: {seed, locations}}.

inline Json instance_to_json(const GeometricInstance& g) {
  Json j;
  j["n_d"] = g.instance.n_d;
  j["n_s"] = g.instance.n_s;
  j["v"] = g.instance.v;
  Json locations;
  Json demand = Json::array(), supply = Json::array();
  for (const Point& p : g.demand_points) demand.push_back({p.x, p.y});
  for (const Point& p : g.supply_points) supply.push_back({p.x, p.y});
  locations["demand"] = demand;
  locations["supply"] = supply;
  j["meta"] = {{"seed", g.seed}, {"locations", locations}};
  return j;
}

inline GeometricInstance instance_from_json(const Json& j) {
  GeometricInstance g;
  try {
    g.instance.n_d = j.at("n_d").get<int>();
    g.instance.n_s = j.at("n_s").get<int>();
    g.instance.v = j.at("v").get<Vec>();
    if (j.contains("meta")) {
      const Json& meta = j.at("meta");
      if (meta.contains("seed")) g.seed = meta.at("seed").get<std::uint64_t>();
      if (meta.contains("locations")) {
        const Json& loc = meta.at("locations");
        for (const auto& p : loc.at("demand"))
          g.demand_points.push_back({p.at(0).get<double>(),
                                     p.at(1).get<double>()});
        for (const auto& p : loc.at("supply"))
          g.supply_points.push_back({p.at(0).get<double>(),
                                     p.at(1).get<double>()});
      }
    }
  } catch (const Json::exception& e) {
    throw InputError(std::string("instance JSON malformed: ") + e.what());
  }
  g.instance.validate();
  return g;
}

// ---------------------------------------------------------------------------
// Sweep configuration.

// One cost model entry of the sweep grid. Proportional models carry alpha
// directly; fixed models carry a fraction of each instance's smallest match
// value, resolved to a concrete kappa per instance.
struct CostModelSpec {
  CostKind kind = CostKind::Proportional;
  double alpha = 0.0;
  double kappa_fraction = 0.0;

  CostModel resolve(const MatchingInstance& inst) const {
    if (kind == CostKind::Proportional) return CostModel::proportional(alpha);
    return CostModel::fixed(kappa_fraction * inst.min_value());
  }

  void validate() const {
    if (kind == CostKind::Proportional) {
      if (!(alpha >= 0.0 && alpha < 1.0))
        throw ConfigError("cost_models: alpha must lie in [0, 1)");
    } else {
      if (!(kappa_fraction > 0.0 && kappa_fraction < 1.0))
        throw ConfigError(
            "cost_models: kappa_fraction must lie in (0, 1)");
    }
  }
};

struct SweepConfig {
  std::uint64_t seed = 1;
  int n_instances = 50;
  int n_replications = 50;
  int n_d = 10;
  int n_s = 10;
  double lambda_level = 13.0;
  double beta_level = 3.0;
  std::vector<double> gamma_ratios;           // default: 30 uniform in [0.3, 3]
  std::vector<double> rho_list = {0.1, 0.3, 0.5};
  std::vector<CostModelSpec> cost_models;     // default: 3 proportional + 3 fixed
  double tau = 1.0;
  int gte_draws = 1;        // paired Poisson draws behind each gte value
  bool use_fluid_gte = false;  // price biases against the fluid gte instead

  SweepConfig() {
    gamma_ratios.reserve(30);
    for (int k = 0; k < 30; ++k)
      gamma_ratios.push_back(0.3 + 2.7 * k / 29.0);
    for (const double a : {0.05, 0.10, 0.20})
      cost_models.push_back({CostKind::Proportional, a, 0.0});
    for (const double f : {0.1, 0.3, 0.5})
      cost_models.push_back({CostKind::Fixed, 0.0, f});
  }

  void validate() const {
    if (n_instances < 1 || n_replications < 1)
      throw ConfigError("sweep config: counts must be >= 1");
    if (n_d < 1 || n_s < 1)
      throw ConfigError("sweep config: n_d and n_s must be >= 1");
    // Supply rates are gamma_ratio * lambda_level, so the demand level
    // anchors the whole grid and must be positive.
    if (!(lambda_level > 0.0))
      throw ConfigError("sweep config: lambda_level must be > 0");
    if (!(beta_level >= 0.0))
      throw ConfigError("sweep config: beta_level must be >= 0");
    if (gamma_ratios.empty())
      throw ConfigError("sweep config: gamma_ratios must be nonempty");
    for (double g : gamma_ratios)
      if (!(g > 0.0))
        throw ConfigError("sweep config: gamma_ratios must be > 0");
    if (rho_list.empty())
      throw ConfigError("sweep config: rho_list must be nonempty");
    for (double r : rho_list)
      if (!(r > 0.0 && r < 1.0))
        throw ConfigError("sweep config: rho values must lie in (0, 1)");
    if (cost_models.empty())
      throw ConfigError("sweep config: cost_models must be nonempty");
    for (const CostModelSpec& c : cost_models) c.validate();
    if (!(tau > 0.0)) throw ConfigError("sweep config: tau must be > 0");
    if (gte_draws < 1)
      throw ConfigError("sweep config: gte_draws must be >= 1");
  }
};

inline Json cost_model_spec_to_json(const CostModelSpec& c) {
  if (c.kind == CostKind::Proportional)
    return Json{{"kind", "proportional"}, {"alpha", c.alpha}};
  return Json{{"kind", "fixed"}, {"kappa_fraction", c.kappa_fraction}};
}

inline CostModelSpec cost_model_spec_from_json(const Json& j) {
  CostModelSpec c;
  std::string kind;
  try {
    kind = j.at("kind").get<std::string>();
  } catch (const Json::exception&) {
    throw ConfigError("cost_models: each entry needs a \"kind\" field");
  }
  try {
    if (kind == "proportional") {
      c.kind = CostKind::Proportional;
      c.alpha = j.at("alpha").get<double>();
      for (const auto& [key, value] : j.items())
        if (key != "kind" && key != "alpha")
          throw ConfigError("cost_models: unknown field \"" + key +
                            "\" on a proportional entry");
    } else if (kind == "fixed") {
      c.kind = CostKind::Fixed;
      c.kappa_fraction = j.at("kappa_fraction").get<double>();
      for (const auto& [key, value] : j.items())
        if (key != "kind" && key != "kappa_fraction")
          throw ConfigError("cost_models: unknown field \"" + key +
                            "\" on a fixed entry");
    } else {
      throw ConfigError("cost_models: unknown kind \"" + kind + "\"");
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("cost_models: malformed entry: ") +
                      e.what());
  }
  c.validate();
  return c;
}

inline Json sweep_config_to_json(const SweepConfig& cfg) {
  Json j;
  j["seed"] = cfg.seed;
  j["n_instances"] = cfg.n_instances;
  j["n_replications"] = cfg.n_replications;
  j["n_d"] = cfg.n_d;
  j["n_s"] = cfg.n_s;
  j["lambda_level"] = cfg.lambda_level;
  j["beta_level"] = cfg.beta_level;
  j["gamma_ratios"] = cfg.gamma_ratios;
  j["rho_list"] = cfg.rho_list;
  Json models = Json::array();
  for (const CostModelSpec& c : cfg.cost_models)
    models.push_back(cost_model_spec_to_json(c));
  j["cost_models"] = models;
  j["tau"] = cfg.tau;
  j["gte_draws"] = cfg.gte_draws;
  j["use_fluid_gte"] = cfg.use_fluid_gte;
  return j;
}

// Strict parse: every field optional (defaults apply), unknown fields fail.
inline SweepConfig sweep_config_from_json(const Json& j) {
  SweepConfig cfg;
  if (!j.is_object())
    throw ConfigError("sweep config: top level must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "n_instances") cfg.n_instances = value.get<int>();
      else if (key == "n_replications")
        cfg.n_replications = value.get<int>();
      else if (key == "n_d") cfg.n_d = value.get<int>();
      else if (key == "n_s") cfg.n_s = value.get<int>();
      else if (key == "lambda_level") cfg.lambda_level = value.get<double>();
      else if (key == "beta_level") cfg.beta_level = value.get<double>();
      else if (key == "gamma_ratios")
        cfg.gamma_ratios = value.get<std::vector<double>>();
      else if (key == "rho_list")
        cfg.rho_list = value.get<std::vector<double>>();
      else if (key == "cost_models") {
        cfg.cost_models.clear();
        for (const auto& entry : value)
          cfg.cost_models.push_back(cost_model_spec_from_json(entry));
      } else if (key == "tau") cfg.tau = value.get<double>();
      else if (key == "gte_draws") cfg.gte_draws = value.get<int>();
      else if (key == "use_fluid_gte")
        cfg.use_fluid_gte = value.get<bool>();
      else
        throw ConfigError("sweep config: unknown field \"" + key + "\"");
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("sweep config: malformed value: ") +
                      e.what());
  }
  cfg.validate();
  return cfg;
}

inline SweepConfig sweep_config_from_file(const std::string& path) {
  return sweep_config_from_json(
      parse_json(read_text_file(path), "sweep config"));
}

}  // namespace matchlab
