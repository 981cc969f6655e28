#pragma once

// Simulation sweep driver: runs every (instance, supply ratio, rho, cost
// model) cell of a configured grid, with n_replications Poisson draws per
// cell and all five estimators per draw, and writes runs.csv / summary.csv /
// config.json / instances/*.json into an output directory.
//
// Cells are independent work units. They may be processed by several threads
// (MATCHLAB_THREADS, default: hardware concurrency), but every random draw
// is keyed by (seed, instance, replication, stream role) alone, and output
// is assembled in canonical grid order after the workers finish, so results
// are byte-identical regardless of thread count.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "matchlab/core.hpp"
#include "matchlab/estimators.hpp"
#include "matchlab/instances.hpp"
#include "matchlab/io.hpp"
#include "matchlab/market.hpp"

namespace matchlab {

inline constexpr const char* kRunsCsvHeader =
    "instance_id,gamma_ratio,rho,cost_kind,cost_param,replication,estimator,"
    "estimate,gte,bias,empty_group_flag,degenerate_flag";

inline constexpr const char* kSummaryCsvHeader =
    "instance_id,gamma_ratio,rho,cost_kind,cost_param,estimator,n,"
    "mean_estimate,mean_gte,mean_bias,stderr_bias";

// One output row of runs.csv.
struct RunRow {
  int instance_id = 0;
  double gamma_ratio = 0.0;
  double rho = 0.0;
  CostKind cost_kind = CostKind::Proportional;
  double cost_param = 0.0;
  int replication = 0;
  EstimatorKind estimator = EstimatorKind::RctCe;
  double estimate = 0.0;
  double gte = 0.0;
  double bias = 0.0;
  bool empty_group_flag = false;
  bool degenerate_flag = false;
};

inline std::string run_row_to_csv(const RunRow& r) {
  std::string line;
  line.reserve(128);
  line += std::to_string(r.instance_id);
  line += ',';
  line += fmt_double(r.gamma_ratio);
  line += ',';
  line += fmt_double(r.rho);
  line += ',';
  line += to_string(r.cost_kind);
  line += ',';
  line += fmt_double(r.cost_param);
  line += ',';
  line += std::to_string(r.replication);
  line += ',';
  line += to_string(r.estimator);
  line += ',';
  line += fmt_double(r.estimate);
  line += ',';
  line += fmt_double(r.gte);
  line += ',';
  line += fmt_double(r.bias);
  line += ',';
  line += r.empty_group_flag ? '1' : '0';
  line += ',';
  line += r.degenerate_flag ? '1' : '0';
  return line;
}

inline int resolve_thread_count() {
  if (const char* env = std::getenv("MATCHLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
      throw ConfigError("MATCHLAB_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {

inline Rates config_rates(const SweepConfig& cfg, const MatchingInstance& inst,
                          double gamma_ratio) {
  Rates r;
  r.lambda = constant_vec(inst.n_d, cfg.lambda_level);
  r.beta = constant_vec(inst.n_d, cfg.beta_level);
  r.gamma = constant_vec(inst.n_s, gamma_ratio * cfg.lambda_level);
  return r;
}

struct SweepCell {
  int instance_idx = 0;
  int gamma_idx = 0;
  int rho_idx = 0;
  int cost_idx = 0;
};

struct CellOutput {
  std::string runs;
  std::string summary;
  std::size_t n_rows = 0;
};

struct WelfordAcc {
  int n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double std_error() const {
    return std::sqrt(m2 / (n - 1)) / std::sqrt(static_cast<double>(n));
  }
};

// Extra paired GTE draws beyond the one sharing the replication's streams
// get distinct replication ids well above any real replication index.
inline std::uint64_t gte_draw_replication_id(int draw, int replication) {
  if (draw == 0) return static_cast<std::uint64_t>(replication);
  return (static_cast<std::uint64_t>(draw) << 40) |
         static_cast<std::uint64_t>(replication);
}

inline CellOutput run_sweep_cell(const SweepConfig& cfg,
                                 const MatchingInstance& inst,
                                 const SweepCell& cell) {
  const double gamma_ratio = cfg.gamma_ratios[cell.gamma_idx];
  const double rho = cfg.rho_list[cell.rho_idx];
  const CostModelSpec& spec = cfg.cost_models[cell.cost_idx];
  const CostModel cm = spec.resolve(inst);
  const Rates rates = config_rates(cfg, inst, gamma_ratio);
  ExperimentConfig exp_cfg;
  exp_cfg.rho = rho;
  exp_cfg.tau = cfg.tau;

  const double fluid_gte =
      cfg.use_fluid_gte ? gte_fluid(inst, rates, cm) : 0.0;

  CellOutput out;
  std::array<WelfordAcc, kAllEstimators.size()> bias_acc{};
  std::array<WelfordAcc, kAllEstimators.size()> estimate_acc{};
  std::array<WelfordAcc, kAllEstimators.size()> gte_acc{};

  for (int rep = 0; rep < cfg.n_replications; ++rep) {
    const SampledState st =
        sample_state(inst, rates, exp_cfg, cfg.seed,
                     static_cast<std::uint64_t>(cell.instance_idx),
                     static_cast<std::uint64_t>(rep));
    double gte_value = fluid_gte;
    if (!cfg.use_fluid_gte) {
      double acc = 0.0;
      for (int g = 0; g < cfg.gte_draws; ++g)
        acc += gte_finite_draw(inst, rates, cm, cfg.tau, cfg.seed,
                               static_cast<std::uint64_t>(cell.instance_idx),
                               gte_draw_replication_id(g, rep));
      gte_value = acc / cfg.gte_draws;
    }

    for (std::size_t e = 0; e < kAllEstimators.size(); ++e) {
      const FiniteEstimate fe =
          estimate_finite(kAllEstimators[e], st, inst, cm, exp_cfg);
      RunRow row;
      row.instance_id = cell.instance_idx;
      row.gamma_ratio = gamma_ratio;
      row.rho = rho;
      row.cost_kind = cm.kind;
      row.cost_param = cm.param();
      row.replication = rep;
      row.estimator = kAllEstimators[e];
      row.estimate = fe.value;
      row.gte = gte_value;
      row.bias = fe.value - gte_value;
      row.empty_group_flag = fe.empty_group;
      row.degenerate_flag = fe.degenerate;
      out.runs += run_row_to_csv(row);
      out.runs += '\n';
      ++out.n_rows;
      bias_acc[e].add(row.bias);
      estimate_acc[e].add(row.estimate);
      gte_acc[e].add(row.gte);
    }
  }

  for (std::size_t e = 0; e < kAllEstimators.size(); ++e) {
    std::string line;
    line.reserve(128);
    line += std::to_string(cell.instance_idx);
    line += ',';
    line += fmt_double(gamma_ratio);
    line += ',';
    line += fmt_double(rho);
    line += ',';
    line += to_string(cm.kind);
    line += ',';
    line += fmt_double(cm.param());
    line += ',';
    line += to_string(kAllEstimators[e]);
    line += ',';
    line += std::to_string(bias_acc[e].n);
    line += ',';
    line += fmt_double(estimate_acc[e].mean);
    line += ',';
    line += fmt_double(gte_acc[e].mean);
    line += ',';
    line += fmt_double(bias_acc[e].mean);
    line += ',';
    line += bias_acc[e].n >= 2 ? fmt_double(bias_acc[e].std_error()) : "NA";
    out.summary += line;
    out.summary += '\n';
  }
  return out;
}

}  // namespace detail

struct SweepOutput {
  std::filesystem::path out_dir;
  std::filesystem::path runs_csv;
  std::filesystem::path summary_csv;
  std::filesystem::path config_json;
  std::size_t n_rows = 0;
};

inline SweepOutput run_sweep(const SweepConfig& cfg,
                             const std::filesystem::path& out_dir) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "instances");

  // Echo the fully resolved configuration so a run is self-describing.
  write_text_file((out_dir / "config.json").string(),
                  sweep_config_to_json(cfg).dump(2) + "\n");

  std::vector<GeometricInstance> instances;
  instances.reserve(cfg.n_instances);
  for (int i = 0; i < cfg.n_instances; ++i) {
    GeometricSpec spec;
    spec.n_d = cfg.n_d;
    spec.n_s = cfg.n_s;
    spec.seed = cfg.seed + static_cast<std::uint64_t>(i);
    instances.push_back(gen_geometric(spec));
    write_text_file(
        (out_dir / "instances" / ("instance_" + std::to_string(i) + ".json"))
            .string(),
        instance_to_json(instances.back()).dump(2) + "\n");
  }

  // Canonical cell order: instance, then gamma ratio, then rho, then cost
  // model. Rows within a cell run replication-major over the estimator list.
  std::vector<detail::SweepCell> cells;
  for (int i = 0; i < cfg.n_instances; ++i)
    for (std::size_t g = 0; g < cfg.gamma_ratios.size(); ++g)
      for (std::size_t r = 0; r < cfg.rho_list.size(); ++r)
        for (std::size_t c = 0; c < cfg.cost_models.size(); ++c)
          cells.push_back({i, static_cast<int>(g), static_cast<int>(r),
                           static_cast<int>(c)});

  std::vector<detail::CellOutput> outputs(cells.size());
  const int n_threads =
      std::min<int>(resolve_thread_count(), static_cast<int>(cells.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= cells.size()) return;
      try {
        outputs[k] = detail::run_sweep_cell(
            cfg, instances[cells[k].instance_idx].instance, cells[k]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  SweepOutput result;
  result.out_dir = out_dir;
  result.runs_csv = out_dir / "runs.csv";
  result.summary_csv = out_dir / "summary.csv";
  result.config_json = out_dir / "config.json";

  std::string runs = std::string(kRunsCsvHeader) + "\n";
  std::string summary = std::string(kSummaryCsvHeader) + "\n";
  for (const detail::CellOutput& o : outputs) {
    runs += o.runs;
    summary += o.summary;
    result.n_rows += o.n_rows;
  }
  write_text_file(result.runs_csv.string(), runs);
  write_text_file(result.summary_csv.string(), summary);
  return result;
}

}  // namespace matchlab
