#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "pinchlab/acceptance.hpp"
#include "pinchlab/app.hpp"

namespace {

int cmd_verify(pinchlab::Mutation mutation) {
  bool all = true;
  pinchlab::run_acceptance({.mutation = mutation}, [&](const pinchlab::CriterionResult& r) {
    all = all && r.pass;
    std::cout << pinchlab::format_criterion(r) << std::endl;
    std::cerr << "  criterion " << r.id << " timing: " << r.timing << std::endl;
  });
  std::cout << (all ? "all criteria passed" : "some criteria failed") << std::endl;
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean curvature flow lab: inscribed and outer radius monitors"};
  app.require_subcommand(1);

  std::string run_config, sweep_config, run_dir;
  auto* run = app.add_subcommand("run", "Flow one scenario and evaluate every monitor");
  run->add_option("config", run_config, "INI config file")->required();
  auto* sweep = app.add_subcommand("sweep", "Run the scenario x delta x sigma x p grid concurrently");
  sweep->add_option("config", sweep_config, "INI config file")->required();
  auto* analyze = app.add_subcommand("analyze", "Recompute the monitors from a run directory's frames");
  analyze->add_option("run-dir", run_dir, "Directory written by run")->required();

  pinchlab::Mutation mutation = pinchlab::Mutation::None;
  const std::map<std::string, pinchlab::Mutation> mutations{{"mu-sign", pinchlab::Mutation::MuSign},
                                                             {"cfl", pinchlab::Mutation::Cfl}};
  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  verify->add_option("--mutate", mutation, "Inject a defect the suite must catch")
      ->transform(CLI::CheckedTransformer(mutations))
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return pinchlab::cmd_run(run_config, std::cout, std::cerr);
    if (*sweep) return pinchlab::cmd_sweep(sweep_config, std::cout, std::cerr);
    if (*analyze) return pinchlab::cmd_analyze(run_dir, std::cout, std::cerr);
    return cmd_verify(mutation);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
