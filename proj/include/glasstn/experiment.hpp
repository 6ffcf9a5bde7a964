#ifndef GLASSTN_EXPERIMENT_HPP
#define GLASSTN_EXPERIMENT_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glasstn/evolution.hpp"
#include "glasstn/lattice.hpp"
#include "glasstn/observables.hpp"

namespace glasstn {

struct MeasureSpec {
  std::string method;  // bmps | loop_corrected | oracle
  int r = 0;           // bmps rank
  int l_max = 0;       // loop-corrected order
};

struct ExperimentConfig {
  LatticeSpec lattice;
  std::string edge_list;  // custom lattices
  std::vector<std::uint64_t> seeds;
  std::string schedule = "builtin";  // builtin or CSV path
  std::vector<double> t_a;
  double dt = 0.01;
  int chi_bp = 16;
  int chi = 16;
  MeasureSpec measure;
  std::string output_dir;
  int parallelism = 1;
  std::string reference;  // optional correlator CSV
  double bp_tol_evolve = 1e-6;
  double bp_tol_measure = 1e-10;
  int max_sweeps = 500;
  int checkpoint_every = 0;
};

// Resolve defaults and collect every violation; returns the normalized config
// when errors stay empty.
ExperimentConfig validate_config(const nlohmann::json& raw,
                                 std::vector<std::string>& errors);
nlohmann::json config_to_json(const ExperimentConfig& config);
// Parse a config file plus key=value overrides (dotted paths, JSON values).
nlohmann::json load_config_json(const std::string& path,
                                const std::vector<std::string>& overrides);

struct CellOutcome {
  std::uint64_t seed = 0;
  double t_a = 0.0;
  bool ok = false;
  std::string error;
  double t_evo_seconds = 0.0;
  double t_measure_avg_seconds = 0.0;
  double q2 = 0.0;
  std::optional<double> eps_c;
  int max_bond_dim = 0;
  double cumulative_truncation = 0.0;
  std::vector<std::string> files;
};

struct RunOutcome {
  std::vector<CellOutcome> cells;
  std::filesystem::path manifest_path;
  bool all_ok = false;
};

// Execute the pipeline for every (seed, t_a) cell, write correlator CSVs,
// metrics and a manifest with content hashes; failed cells are recorded and
// the others proceed.
RunOutcome run_experiment(const ExperimentConfig& config);

// Re-run the analysis layer (q2, C(d), fits, collapse) over an existing run
// directory using its manifest's config echo.
void analyze_run(const std::filesystem::path& run_dir);

// One pipeline cell without the file layer (acceptance and tests).
struct CellData {
  CorrelatorMatrix correlators;
  std::vector<double> singles;
  double t_evo_seconds = 0.0;
  double t_measure_avg_seconds = 0.0;
  int max_bond_dim = 0;
  double cumulative_truncation = 0.0;
};
CellData run_cell(const ExperimentConfig& config, std::uint64_t seed, double t_a,
                  int threads);

}  // namespace glasstn

#endif
