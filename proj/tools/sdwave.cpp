#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sdwave/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace sdwave::cli;

  CLI::App app{"sdwave: finite-difference experiments for the strongly damped semilinear wave equation"};
  app.require_subcommand(1);

  Invocation inv;
  std::string out;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", inv.config_path, "experiment file")->required();
    sub->add_option("-o,--out", out, "output directory (overrides SDWAVE_OUT and the file)");
    sub->add_option("--seed", seed, "seed for randomized estimates");
    sub->add_flag("-q,--quiet", inv.quiet, "no progress output");
  };

  CLI::App* run = app.add_subcommand("run", "integrate and write trace.csv and report.json");
  CLI::App* bounds = app.add_subcommand("bounds", "evaluate criteria and blow-up time bounds");
  CLI::App* check = app.add_subcommand("check", "sample hypotheses H1-H3 for the nonlinearity");
  CLI::App* conv = app.add_subcommand("convergence", "manufactured-solution convergence study");
  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter grid");
  for (CLI::App* sub : {run, bounds, check, conv, sweep}) add_common(sub);
  sweep->add_option("-j,--jobs", inv.jobs, "worker threads (default: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  for (CLI::App* sub : {run, bounds, check, conv, sweep}) {
    if (sub->count_all() == 0) continue;
    if (sub->count("--out") > 0) inv.out = out;
    if (sub->count("--seed") > 0) inv.seed = seed;
  }

  if (*run) return cmd_run(inv);
  if (*bounds) return cmd_bounds(inv);
  if (*check) return cmd_check(inv);
  if (*conv) return cmd_convergence(inv);
  return cmd_sweep(inv);
}
