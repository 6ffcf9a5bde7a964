#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "glasstn/experiment.hpp"

using namespace glasstn;

int main(int argc, char** argv) {
  CLI::App app{"Tensor-network simulator for quantum annealing of Ising spin glasses"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string run_dir;

  CLI::App* run = app.add_subcommand("run", "Execute the full pipeline for a config");
  run->add_option("config", config_path, "Config file (JSON)")->required();
  run->add_option("overrides", overrides, "key=value overrides (dotted paths)");

  CLI::App* validate = app.add_subcommand("validate", "Check a config and echo defaults");
  validate->add_option("config", config_path, "Config file (JSON)")->required();
  validate->add_option("overrides", overrides, "key=value overrides");

  CLI::App* analyze = app.add_subcommand("analyze", "Re-run the analysis over a run dir");
  analyze->add_option("run_dir", run_dir, "Run directory with manifest.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed() || validate->parsed()) {
      nlohmann::json raw = load_config_json(config_path, overrides);
      std::vector<std::string> errors;
      ExperimentConfig config = validate_config(raw, errors);
      if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "config error: " << e << '\n';
        return 2;
      }
      if (validate->parsed()) {
        std::cout << config_to_json(config).dump(2) << '\n';
        return 0;
      }
      Schedule schedule = [&] {
        if (config.schedule == "builtin") return Schedule::builtin();
        std::ifstream in(config.schedule);
        return Schedule::from_csv(in);
      }();
      if (schedule.prep_warning())
        std::cerr << "warning: jx(0) < 10 * gamma(0); ground-state preparation may "
                     "be inaccurate\n";
      RunOutcome outcome = run_experiment(config);
      int failed = 0;
      for (const auto& cell : outcome.cells) {
        std::cout << "cell seed=" << cell.seed << " t_a=" << cell.t_a << ": "
                  << (cell.ok ? "ok" : cell.error) << '\n';
        failed += cell.ok ? 0 : 1;
      }
      std::cout << "manifest: " << outcome.manifest_path.string() << '\n';
      return failed == 0 ? 0 : 1;
    }
    analyze_run(run_dir);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
