// spinroute CLI: deterministic scenario runner for the chiral spin-network
// router. Subcommands: run <config>, validate <config>, list.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spinroute/scenarios.hpp"

namespace {

void print_schema_table() {
  using namespace spinroute;
  std::cout << "scenario kinds (" << scenario_schemas().size() << "):\n\n";
  for (const ScenarioSchema& s : scenario_schemas()) {
    std::cout << s.kind << "\n  " << s.summary << "\n";
    for (const ScenarioKey& k : s.keys) {
      std::cout << "    " << (k.required ? "[required] " : "[optional] ")
                << k.path;
      if (!k.desc.empty()) std::cout << " - " << k.desc;
      std::cout << "\n";
    }
    std::cout << "\n";
  }
  std::cout << "full key reference: docs/schema.md\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spinroute: quantum-state routing in spin networks with "
               "broken time-reversal symmetry"};
  app.require_subcommand(1);
  app.fallthrough(true);

  std::string output_dir = ".";
  std::uint64_t seed = 0;
  bool quiet = false;
  app.add_option("--output-dir", output_dir,
                 "directory for CSV and manifest artifacts")
      ->capture_default_str();
  app.add_option("--seed", seed,
                 "seed for optimizer restarts (the only randomness)");
  app.add_flag("--quiet", quiet, "suppress informational output");

  std::string run_config, validate_config;
  CLI::App* cmd_run = app.add_subcommand("run", "execute a scenario config");
  cmd_run->add_option("config", run_config, "JSON scenario config")
      ->required();
  CLI::App* cmd_validate =
      app.add_subcommand("validate", "schema-check a config without running");
  cmd_validate->add_option("config", validate_config, "JSON scenario config")
      ->required();
  CLI::App* cmd_list =
      app.add_subcommand("list", "list scenario kinds and their keys");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_list->parsed()) {
      print_schema_table();
      return 0;
    }
    if (cmd_validate->parsed()) {
      const spinroute::json cfg = spinroute::load_json_file(validate_config);
      const std::string kind =
          spinroute::validate_scenario(cfg, validate_config);
      if (!quiet) std::cout << "valid: " << kind << "\n";
      return 0;
    }
    // run
    const spinroute::json cfg = spinroute::load_json_file(run_config);
    spinroute::RunSettings settings;
    settings.output_dir = output_dir;
    settings.seed = seed;
    settings.quiet = quiet;
    const spinroute::ScenarioOutcome outcome =
        spinroute::run_scenario(cfg, run_config, settings);
    if (!quiet)
      for (const std::string& f : outcome.files)
        std::cout << "wrote " << f << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
