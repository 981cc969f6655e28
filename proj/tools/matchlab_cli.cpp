// Command-line front end for the matching-market pricing laboratory.
//
// Subcommands:
//   gen      write a random geometric market instance as JSON
//   solve    solve a matching LP from a JSON problem file, print primal/dual
//   sweep    run a configured simulation sweep into an output directory
//   figures  write the data files behind one standard figure key
//   verify   run the theorem-verification suite, write a JSON report
//
// Exit codes: 0 success, 1 verification failure, 2 usage or input error.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "matchlab/figures.hpp"
#include "matchlab/io.hpp"
#include "matchlab/lp.hpp"
#include "matchlab/sweep.hpp"
#include "matchlab/verify.hpp"

namespace {

using matchlab::Json;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text;
  else
    matchlab::write_text_file(out_path, text);
}

int run_gen(std::uint64_t seed, int n_d, int n_s,
            const std::string& out_path) {
  matchlab::GeometricSpec spec;
  spec.n_d = n_d;
  spec.n_s = n_s;
  spec.seed = seed;
  const matchlab::GeometricInstance inst = matchlab::gen_geometric(spec);
  emit(matchlab::instance_to_json(inst).dump(2) + "\n", out_path);
  return 0;
}

matchlab::CostModel cost_model_from_json(const Json& j) {
  std::string kind;
  try {
    kind = j.at("kind").get<std::string>();
    if (kind == "proportional")
      return matchlab::CostModel::proportional(j.at("alpha").get<double>());
    if (kind == "fixed")
      return matchlab::CostModel::fixed(j.at("kappa").get<double>());
  } catch (const Json::exception& e) {
    throw matchlab::InputError(std::string("cost_model: malformed entry: ") +
                               e.what());
  }
  throw matchlab::InputError("cost_model: unknown kind \"" + kind + "\"");
}

// Shared-supply problems carry {instance, d, s}; two-group problems carry
// {instance, d_con, d_tre, s, cost_model}.
int run_solve(const std::string& in_path, const std::string& out_path) {
  const Json j = matchlab::parse_json(matchlab::read_text_file(in_path),
                                      "solve input");
  Json result;
  try {
    const matchlab::MatchingInstance inst =
        matchlab::instance_from_json(j.at("instance")).instance;
    if (j.contains("d_con") || j.contains("d_tre")) {
      matchlab::CiProblem p;
      p.instance = inst;
      p.d_con = j.at("d_con").get<matchlab::Vec>();
      p.d_tre = j.at("d_tre").get<matchlab::Vec>();
      p.s = j.at("s").get<matchlab::Vec>();
      p.cost_model = cost_model_from_json(j.at("cost_model"));
      const matchlab::CiSolution sol = matchlab::solve_ci(p);
      result["mode"] = "two_group";
      result["objective"] = sol.objective;
      result["flow_con"] = sol.flow_con;
      result["flow_tre"] = sol.flow_tre;
      result["demand_dual_con"] = sol.demand_dual_con;
      result["demand_dual_tre"] = sol.demand_dual_tre;
      result["supply_dual"] = sol.supply_dual;
      result["degenerate"] = sol.degenerate;
    } else {
      matchlab::CeProblem p;
      p.instance = inst;
      p.d = j.at("d").get<matchlab::Vec>();
      p.s = j.at("s").get<matchlab::Vec>();
      const matchlab::CeSolution sol = matchlab::solve_ce(p);
      result["mode"] = "shared";
      result["objective"] = sol.objective;
      result["flow"] = sol.flow;
      result["demand_dual"] = sol.demand_dual;
      result["supply_dual"] = sol.supply_dual;
      result["degenerate"] = sol.degenerate;
    }
  } catch (const Json::exception& e) {
    throw matchlab::InputError(std::string("solve input malformed: ") +
                               e.what());
  }
  emit(result.dump(2) + "\n", out_path);
  return 0;
}

int run_sweep(const std::string& config_path, const std::string& out_dir) {
  const matchlab::SweepConfig cfg =
      matchlab::sweep_config_from_file(config_path);
  const matchlab::SweepOutput out = matchlab::run_sweep(cfg, out_dir);
  std::cout << "wrote " << out.runs_csv.string() << " (" << out.n_rows
            << " rows)\n";
  std::cout << "wrote " << out.summary_csv.string() << "\n";
  return 0;
}

int run_figures(const std::string& which, const std::string& out_dir) {
  for (const auto& path : matchlab::reproduce_figures(which, out_dir))
    std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int run_verify(const std::string& out_path, int n_instances,
               std::uint64_t seed, bool self_test) {
  matchlab::VerifyOptions opts;
  opts.n_instances = n_instances;
  opts.seed = seed;
  opts.inject_rct_ce_sign_flip = self_test;
  const bool ok = matchlab::verify_theorems(out_path, opts);
  std::cout << (ok ? "verification passed" : "verification FAILED")
            << ", report at " << out_path << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pricing-experiment laboratory for centrally matched markets"};
  app.require_subcommand(1);

  std::uint64_t gen_seed = 1;
  int gen_n_d = 10, gen_n_s = 10;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen", "Generate a geometric instance");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--n-d", gen_n_d, "Number of demand types");
  gen->add_option("--n-s", gen_n_s, "Number of supply types");
  gen->add_option("--out", gen_out, "Output file (default: stdout)");

  std::string solve_in, solve_out;
  CLI::App* solve = app.add_subcommand("solve", "Solve a matching LP");
  solve->add_option("--in", solve_in, "Problem JSON file")->required();
  solve->add_option("--out", solve_out, "Output file (default: stdout)");

  std::string sweep_config, sweep_out;
  CLI::App* sweep = app.add_subcommand("sweep", "Run a simulation sweep");
  sweep->add_option("--config", sweep_config, "Sweep configuration JSON")
      ->required();
  sweep->add_option("--out", sweep_out, "Output directory")->required();

  std::string fig_which, fig_out;
  CLI::App* figures = app.add_subcommand("figures", "Write figure data");
  figures->add_option("--which", fig_which, "Figure key")->required();
  figures->add_option("--out", fig_out, "Output directory")->required();

  std::string verify_out;
  int verify_n_instances = 12;
  std::uint64_t verify_seed = 1;
  bool verify_self_test = false;
  CLI::App* verify =
      app.add_subcommand("verify", "Run the theorem-verification suite");
  verify->add_option("--out", verify_out, "Report JSON file")->required();
  verify->add_option("--n-instances", verify_n_instances,
                     "Number of seeded markets");
  verify->add_option("--seed", verify_seed, "Base seed");
  verify->add_flag("--self-test", verify_self_test,
                   "Inject a sign error to prove the suite catches it");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen(gen_seed, gen_n_d, gen_n_s, gen_out);
    if (solve->parsed()) return run_solve(solve_in, solve_out);
    if (sweep->parsed()) return run_sweep(sweep_config, sweep_out);
    if (figures->parsed()) return run_figures(fig_which, fig_out);
    if (verify->parsed())
      return run_verify(verify_out, verify_n_instances, verify_seed,
                        verify_self_test);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
