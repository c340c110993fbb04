// purecd: solve / bench / validate / oracle.
// Exit codes: 0 ok, 1 check failure, 2 config error.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "purecd/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"PURE-CD primal-dual coordinate solvers"};
  app.require_subcommand(1);

  purecd::CommandOptions opt;
  std::string seed_range, checkpoints;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out-dir", opt.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed-range", seed_range, "Seeds A..B (inclusive) or a single seed");
    sub->add_option("--checkpoints", checkpoints, "Checkpoint plan")
        ->check(CLI::IsMember({"geometric", "linear"}));
  };

  std::string config_path;
  bool print_config = false;
  auto* solve = app.add_subcommand("solve", "Run an experiment config over seeds");
  solve->add_option("config", config_path, "Experiment config (JSON)");
  solve->add_flag("--print-config", print_config, "Print the config with all defaults and exit");
  add_common(solve);

  std::string suite_path;
  auto* bench = app.add_subcommand("bench", "Cost-to-epsilon comparison over a suite");
  bench->add_option("suite", suite_path, "Suite file (JSON)")->required();
  add_common(bench);

  auto* validate = app.add_subcommand("validate", "Exact identities and schedule invariants");
  validate->add_flag("--perturb-theta", opt.perturb_theta,
                     "Negative control: perturb one theta in the equivalence check");

  std::string problem_path;
  auto* oracle = app.add_subcommand("oracle", "Compute and store a reference saddle point");
  oracle->add_option("problem", problem_path, "Problem descriptor (JSON)")->required();
  oracle->add_option("--out-dir", opt.out_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (!seed_range.empty()) {
    try {
      opt.seeds = purecd::parse_seed_range(seed_range);
    } catch (const std::exception& e) {
      std::cerr << "config error: --seed-range: " << e.what() << "\n";
      return 2;
    }
  }
  if (!checkpoints.empty()) opt.checkpoints = checkpoints;

  if (*solve) {
    if (print_config) return purecd::cmd_print_config(config_path, std::cout, std::cerr);
    if (config_path.empty()) {
      std::cerr << "config error: solve needs a config file (or --print-config)\n";
      return 2;
    }
    return purecd::cmd_solve(config_path, opt, std::cout, std::cerr);
  }
  if (*bench) return purecd::cmd_bench(suite_path, opt, std::cout, std::cerr);
  if (*validate) return purecd::cmd_validate(opt, std::cout);
  return purecd::cmd_oracle(problem_path, opt, std::cout, std::cerr);
}
