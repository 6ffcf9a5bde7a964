#include "glasstn/experiment.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "glasstn/boundary_mps.hpp"
#include "glasstn/gauge.hpp"
#include "glasstn/hashing.hpp"
#include "glasstn/loop_corrections.hpp"
#include "glasstn/parallel.hpp"

namespace glasstn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Schedule load_schedule(const std::string& name) {
  if (name == "builtin") return Schedule::builtin();
  std::ifstream in(name);
  if (!in) throw ConfigError("cannot open schedule file: " + name);
  return Schedule::from_csv(in);
}

DisorderInstance make_instance(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.lattice.kind == LatticeKind::custom) {
    std::ifstream in(config.edge_list);
    if (!in) throw ConfigError("cannot open edge list: " + config.edge_list);
    return load_edge_list(in);
  }
  return sample_couplings(build_lattice(config.lattice), seed);
}

TensorLattice make_tensor_lattice(const DisorderInstance& instance) {
  if (instance.lattice.spec.kind == LatticeKind::dimerized_cubic)
    return group_dimers(instance);
  return as_tensor_lattice(instance);
}

}  // namespace

CellData run_cell(const ExperimentConfig& config, std::uint64_t seed, double t_a,
                  int threads) {
  CellData cell;
  DisorderInstance instance = make_instance(config, seed);
  TensorLattice lattice = make_tensor_lattice(instance);
  Schedule schedule = load_schedule(config.schedule);
  const int l = lattice.num_qubits;

  std::vector<int> sites(l);
  for (int q = 0; q < l; ++q) sites[q] = q;
  cell.correlators.sites = sites;
  cell.correlators.params = {{"t_a", t_a},
                             {"dt", config.dt},
                             {"chi_bp", double(config.chi_bp)},
                             {"chi", double(config.chi)},
                             {"seed", double(seed)}};

  if (config.measure.method == "oracle") {
    EvolutionParams params;
    params.t_a = t_a;
    params.dt = config.dt;
    params.chi_bp = config.chi_bp;
    params.chi = config.chi;
    const double t0 = now_seconds();
    StateVector v = exact_evolve(lattice, schedule, params);
    cell.t_evo_seconds = now_seconds() - t0;
    const double m0 = now_seconds();
    CorrelatorData data = exact_z_correlators(v);
    const int pairs = std::max(1, l * (l - 1) / 2);
    cell.t_measure_avg_seconds = (now_seconds() - m0) / pairs;
    cell.correlators.method = "oracle";
    cell.correlators.values = data.pairs;
    cell.singles = data.singles;
    return cell;
  }

  PrepParams prep_params;
  prep_params.chi_bp = config.chi_bp;
  PrepResult prep = prepare_ground_state(lattice, schedule, prep_params);

  EvolutionParams params;
  params.t_a = t_a;
  params.dt = config.dt;
  params.chi_bp = config.chi_bp;
  params.chi = config.chi;
  params.bp_tol = config.bp_tol_evolve;
  params.max_sweeps = config.max_sweeps;
  params.checkpoint_every = config.checkpoint_every;

  const double t0 = now_seconds();
  EvolveStats stats = evolve(prep.state, prep.messages, schedule, params);
  cell.t_evo_seconds = now_seconds() - t0;
  cell.max_bond_dim = stats.max_bond_dim;
  cell.cumulative_truncation = stats.cumulative_truncation;

  NetworkState state = std::move(prep.state);
  NormMessages messages = std::move(prep.messages);
  BpOptions measure_bp;
  measure_bp.tol = config.bp_tol_measure;
  measure_bp.max_sweeps = config.max_sweeps;
  messages.converge(state, measure_bp);
  if (config.chi < state.max_bond_dim()) {
    state = truncate_state(state, messages, config.chi);
    messages = NormMessages(state);
    messages.converge(state, measure_bp);
  }
  normalize_bp(state, messages);
  messages.converge(state, measure_bp);

  const double m0 = now_seconds();
  const int pairs = std::max(1, l * (l - 1) / 2);
  if (config.measure.method == "bmps") {
    BmpsOptions opts;
    opts.rank = config.measure.r > 0 ? config.measure.r : 2 * config.chi;
    opts.threads = threads;
    BmpsCorrelators result = bmps_all_correlators(state, opts);
    cell.correlators.method = "bmps";
    cell.correlators.params["r"] = double(opts.rank);
    cell.correlators.values = result.pairs;
    cell.singles = result.singles;
  } else {  // loop_corrected
    LoopExpectationOptions opts;
    opts.bp_tol = config.bp_tol_measure;
    opts.max_sweeps = config.max_sweeps;
    opts.warm_start = &messages;
    const int l_max = config.measure.l_max;
    LoopNormContext ctx = loop_norm_context(state, l_max, opts);
    Eigen::Matrix2cd sz;
    sz << 1, 0, 0, -1;
    Eigen::MatrixXd values = Eigen::MatrixXd::Identity(l, l);
    std::vector<std::pair<int, int>> jobs;
    for (int i = 0; i < l; ++i)
      for (int j = i + 1; j < l; ++j) jobs.push_back({i, j});
    std::vector<double> results(jobs.size());
    parallel_for(static_cast<int>(jobs.size()), threads, [&](int k) {
      QubitOperators ops;
      ops[jobs[k].first] = sz;
      ops[jobs[k].second] = sz;
      results[k] = loop_corrected_expectation_with(state, ops, l_max, ctx, opts);
    });
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      values(jobs[k].first, jobs[k].second) = results[k];
      values(jobs[k].second, jobs[k].first) = results[k];
    }
    cell.singles.assign(l, 0.0);
    std::vector<double> singles(l);
    parallel_for(l, threads, [&](int i) {
      QubitOperators ops;
      ops[i] = sz;
      singles[i] = loop_corrected_expectation_with(state, ops, l_max, ctx, opts);
    });
    cell.singles = singles;
    cell.correlators.method = "loop_corrected";
    cell.correlators.params["l_max"] = double(l_max);
    cell.correlators.values = values;
  }
  cell.t_measure_avg_seconds = (now_seconds() - m0) / pairs;
  return cell;
}

// --- Config handling ----------------------------------------------------------

ExperimentConfig validate_config(const json& raw, std::vector<std::string>& errors) {
  ExperimentConfig config;
  auto need = [&](const char* key) {
    if (!raw.contains(key)) {
      errors.push_back(std::string("missing required key: ") + key);
      return false;
    }
    return true;
  };

  if (need("lattice")) {
    const json& lat = raw["lattice"];
    std::string kind = lat.value("kind", "");
    auto parsed = lattice_kind_from_string(kind);
    if (!parsed) {
      errors.push_back("unknown lattice kind '" + kind +
                       "' (valid: cylinder, diamond_cubic, dimerized_cubic, tree, "
                       "custom)");
    } else {
      config.lattice.kind = *parsed;
    }
    if (lat.contains("dims"))
      config.lattice.dims = lat["dims"].get<std::vector<int>>();
    config.edge_list = lat.value("edge_list", "");
    if (parsed && *parsed == LatticeKind::custom && config.edge_list.empty())
      errors.push_back("custom lattice requires lattice.edge_list");
    if (parsed && *parsed != LatticeKind::custom) {
      try {
        build_lattice(config.lattice);
      } catch (const Error& e) {
        errors.push_back(std::string("invalid lattice: ") + e.what());
      }
    }
  }

  config.seeds = raw.value("seeds", std::vector<std::uint64_t>{1});
  if (config.seeds.empty()) errors.push_back("seeds must be nonempty");
  config.schedule = raw.value("schedule", std::string("builtin"));
  if (config.schedule != "builtin" && !fs::exists(config.schedule))
    errors.push_back("schedule file not found: " + config.schedule);
  config.t_a = raw.value("t_a", std::vector<double>{});
  if (config.t_a.empty()) errors.push_back("t_a list must be nonempty");
  for (double t : config.t_a)
    if (t <= 0) errors.push_back("t_a values must be positive");
  config.dt = raw.value("dt", 0.01);
  if (config.dt <= 0) errors.push_back("dt must be positive");
  config.chi_bp = raw.value("chi_bp", 16);
  config.chi = raw.value("chi", config.chi_bp);
  if (config.chi < 1 || config.chi_bp < 1) errors.push_back("chi and chi_bp must be >= 1");
  if (config.chi > config.chi_bp)
    errors.push_back("chi must not exceed chi_bp");

  if (need("measure")) {
    const json& m = raw["measure"];
    config.measure.method = m.value("method", "");
    if (config.measure.method == "bmps") {
      config.measure.r = m.value("r", 0);
    } else if (config.measure.method == "loop_corrected") {
      config.measure.l_max = m.value("l_max", -1);
      if (config.measure.l_max < 0)
        errors.push_back("loop_corrected requires measure.l_max >= 0");
    } else if (config.measure.method != "oracle") {
      errors.push_back("measure.method must be one of bmps, loop_corrected, oracle");
    }
    if (config.measure.method == "bmps" &&
        config.lattice.kind != LatticeKind::cylinder)
      errors.push_back("bmps measurement requires a cylinder lattice");
  }

  config.output_dir = raw.value("output_dir", std::string("runs/experiment"));
  if (const char* root = std::getenv("GLASSTN_OUTPUT_ROOT"))
    if (fs::path(config.output_dir).is_relative())
      config.output_dir = (fs::path(root) / config.output_dir).string();
  config.parallelism = raw.value("parallelism", 1);
  if (config.parallelism < 1) errors.push_back("parallelism must be >= 1");
  config.reference = raw.value("reference", std::string());
  if (!config.reference.empty() && !fs::exists(config.reference))
    errors.push_back("reference file not found: " + config.reference);
  config.bp_tol_evolve = raw.value("bp_tol_evolve", 1e-6);
  config.bp_tol_measure = raw.value("bp_tol_measure", 1e-10);
  config.max_sweeps = raw.value("max_sweeps", 500);
  config.checkpoint_every = raw.value("checkpoint_every", 0);
  return config;
}

json config_to_json(const ExperimentConfig& config) {
  json j;
  j["lattice"]["kind"] = to_string(config.lattice.kind);
  j["lattice"]["dims"] = config.lattice.dims;
  if (!config.edge_list.empty()) j["lattice"]["edge_list"] = config.edge_list;
  j["seeds"] = config.seeds;
  j["schedule"] = config.schedule;
  j["t_a"] = config.t_a;
  j["dt"] = config.dt;
  j["chi_bp"] = config.chi_bp;
  j["chi"] = config.chi;
  j["measure"]["method"] = config.measure.method;
  if (config.measure.method == "bmps") j["measure"]["r"] = config.measure.r;
  if (config.measure.method == "loop_corrected")
    j["measure"]["l_max"] = config.measure.l_max;
  j["output_dir"] = config.output_dir;
  j["parallelism"] = config.parallelism;
  if (!config.reference.empty()) j["reference"] = config.reference;
  j["bp_tol_evolve"] = config.bp_tol_evolve;
  j["bp_tol_measure"] = config.bp_tol_measure;
  j["max_sweeps"] = config.max_sweeps;
  j["checkpoint_every"] = config.checkpoint_every;
  return j;
}

json load_config_json(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("unparseable config: ") + e.what());
  }
  for (const auto& kv : overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must be key=value: " + kv);
    std::string key = kv.substr(0, eq);
    std::string value = kv.substr(eq + 1);
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      parsed = value;  // plain string
    }
    json* node = &j;
    std::size_t start = 0;
    for (;;) {
      auto dot = key.find('.', start);
      std::string part = key.substr(start, dot - start);
      if (dot == std::string::npos) {
        (*node)[part] = parsed;
        break;
      }
      node = &(*node)[part];
      start = dot + 1;
    }
  }
  return j;
}

// --- Run orchestration ---------------------------------------------------------

namespace {

std::string hash_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64(buf.str())));
  return hex;
}

std::string cell_dir_name(std::uint64_t seed, double t_a) {
  std::ostringstream name;
  name << "seed" << seed << "_ta" << t_a;
  return name.str();
}

std::vector<std::vector<int>> column_site_ids(const TensorLattice& lattice) {
  std::vector<std::vector<int>> out;
  for (const auto& col : lattice.columns) {
    std::vector<int> sites;
    for (int v : col)
      for (int q : lattice.vertex_qubits[v]) sites.push_back(q);
    out.push_back(std::move(sites));
  }
  return out;
}

void write_analysis(const fs::path& dir, const ExperimentConfig& config,
                    const std::vector<CellOutcome>& cells) {
  // Group per t_a, average C(d) over seeds, fit, and collapse when possible.
  if (config.lattice.kind != LatticeKind::cylinder) return;
  DisorderInstance probe = sample_couplings(build_lattice(config.lattice), 1);
  TensorLattice lattice = as_tensor_lattice(probe);
  auto columns = column_site_ids(lattice);

  fs::create_directories(dir / "analysis");
  json fits = json::array();
  std::vector<std::pair<double, CdTable>> curves;
  for (double t_a : config.t_a) {
    std::vector<CdTable> tables;
    for (const auto& cell : cells) {
      if (!cell.ok || cell.t_a != t_a) continue;
      fs::path cdir = dir / cell_dir_name(cell.seed, cell.t_a);
      std::ifstream cin(cdir / "correlators.csv");
      std::ifstream sin(cdir / "singles.csv");
      if (!cin || !sin) continue;
      CorrelatorMatrix c = read_correlator_csv(cin);
      std::vector<double> singles = read_singles_csv(sin);
      CdTable table = correlation_function(c, singles, columns);
      {
        std::ostringstream name;
        name << "cd_seed" << cell.seed << "_ta" << t_a << ".csv";
        std::ofstream out(dir / "analysis" / name.str());
        write_cd_table_csv(table, out);
      }
      try {
        CompressedExpFit fit = fit_compressed_exponential(table);
        fits.push_back({{"t_a", t_a},
                        {"seed", cell.seed},
                        {"a0", fit.a0},
                        {"a1", fit.a1},
                        {"alpha", fit.alpha},
                        {"residual", fit.residual}});
      } catch (const Error&) {
        // Too few points for a per-realization fit; the average may still fit.
      }
      tables.push_back(std::move(table));
    }
    if (tables.empty()) continue;
    CdTable averaged = average_cd_tables(tables);
    {
      std::ostringstream name;
      name << "cd_avg_ta" << t_a << ".csv";
      std::ofstream out(dir / "analysis" / name.str());
      write_cd_table_csv(averaged, out);
    }
    curves.push_back({t_a, averaged});
  }
  json analysis;
  analysis["per_realization_fits"] = fits;
  if (curves.size() >= 3) {
    try {
      CollapseFit collapse = kz_collapse(curves);
      analysis["collapse"] = {{"mu", collapse.mu},     {"a0", collapse.a0},
                              {"a1", collapse.a1},     {"alpha", collapse.alpha},
                              {"residual", collapse.residual},
                              {"ambiguous", collapse.ambiguous}};
      std::ofstream scan(dir / "analysis" / "collapse_scan.csv");
      write_collapse_scan_csv(collapse, scan);
    } catch (const Error& e) {
      analysis["collapse_error"] = e.what();
    }
  }
  std::ofstream out(dir / "analysis" / "fits.json");
  out << analysis.dump(2) << '\n';
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& config) {
  RunOutcome outcome;
  fs::path dir(config.output_dir);
  fs::create_directories(dir);

  std::optional<CorrelatorMatrix> reference;
  if (!config.reference.empty()) {
    std::ifstream in(config.reference);
    reference = read_correlator_csv(in);
  }

  struct CellKey {
    std::uint64_t seed;
    double t_a;
  };
  std::vector<CellKey> keys;
  for (std::uint64_t seed : config.seeds)
    for (double t_a : config.t_a) keys.push_back({seed, t_a});
  outcome.cells.resize(keys.size());

  const int cell_parallelism = std::min<int>(config.parallelism,
                                             static_cast<int>(keys.size()));
  const int inner_threads = std::max(1, config.parallelism / cell_parallelism);

  parallel_for(static_cast<int>(keys.size()), cell_parallelism, [&](int k) {
    CellOutcome& cell = outcome.cells[k];
    cell.seed = keys[k].seed;
    cell.t_a = keys[k].t_a;
    fs::path cdir = dir / cell_dir_name(cell.seed, cell.t_a);
    fs::create_directories(cdir);
    try {
      CellData data = run_cell(config, cell.seed, cell.t_a, inner_threads);
      data.correlators.validate();
      {
        std::ofstream out(cdir / "correlators.csv");
        write_correlator_csv(data.correlators, out);
        cell.files.push_back((cdir / "correlators.csv").string());
      }
      {
        std::ofstream out(cdir / "correlators_triplets.csv");
        write_triplet_csv(data.correlators, out);
        cell.files.push_back((cdir / "correlators_triplets.csv").string());
      }
      {
        std::ofstream out(cdir / "singles.csv");
        write_singles_csv(data.correlators.sites, data.singles, out);
        cell.files.push_back((cdir / "singles.csv").string());
      }
      cell.q2 = spin_glass_q2(data.correlators);
      if (reference) cell.eps_c = error_metric(data.correlators, *reference);
      cell.t_evo_seconds = data.t_evo_seconds;
      cell.t_measure_avg_seconds = data.t_measure_avg_seconds;
      cell.max_bond_dim = data.max_bond_dim;
      cell.cumulative_truncation = data.cumulative_truncation;
      json metrics;
      metrics["q2"] = cell.q2;
      if (cell.eps_c) metrics["eps_c"] = *cell.eps_c;
      metrics["t_evo_seconds"] = cell.t_evo_seconds;
      metrics["t_measure_avg_seconds"] = cell.t_measure_avg_seconds;
      metrics["max_bond_dim"] = cell.max_bond_dim;
      metrics["cumulative_truncation"] = cell.cumulative_truncation;
      std::ofstream mout(cdir / "metrics.json");
      mout << metrics.dump(2) << '\n';
      cell.files.push_back((cdir / "metrics.json").string());
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  });

  write_analysis(dir, config, outcome.cells);

  json manifest;
  manifest["version"] = GLASSTN_VERSION;
  manifest["config"] = config_to_json(config);
  {
    char hex[20];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(
                      fnv1a64(config_to_json(config).dump())));
    manifest["config_hash"] = hex;
  }
  manifest["cells"] = json::array();
  outcome.all_ok = true;
  for (const auto& cell : outcome.cells) {
    json c;
    c["seed"] = cell.seed;
    c["t_a"] = cell.t_a;
    c["status"] = cell.ok ? "ok" : ("failed: " + cell.error);
    if (cell.ok) {
      c["q2"] = cell.q2;
      if (cell.eps_c) c["eps_c"] = *cell.eps_c;
      c["t_evo_seconds"] = cell.t_evo_seconds;
      c["t_measure_avg_seconds"] = cell.t_measure_avg_seconds;
      c["max_bond_dim"] = cell.max_bond_dim;
      c["cumulative_truncation"] = cell.cumulative_truncation;
      json files;
      for (const auto& f : cell.files)
        files[fs::path(f).filename().string()] = hash_file(f);
      c["files"] = files;
    }
    manifest["cells"].push_back(c);
    outcome.all_ok = outcome.all_ok && cell.ok;
  }
  if (fs::exists(dir / "analysis")) {
    json files;
    for (const auto& entry : fs::directory_iterator(dir / "analysis"))
      files[entry.path().filename().string()] = hash_file(entry.path());
    manifest["analysis_files"] = files;
  }
  outcome.manifest_path = dir / "manifest.json";
  std::ofstream mout(outcome.manifest_path);
  mout << manifest.dump(2) << '\n';
  return outcome;
}

void analyze_run(const fs::path& run_dir) {
  std::ifstream min(run_dir / "manifest.json");
  if (!min) throw ConfigError("no manifest.json in " + run_dir.string());
  json manifest;
  min >> manifest;
  std::vector<std::string> errors;
  ExperimentConfig config = validate_config(manifest["config"], errors);
  if (!errors.empty()) throw ConfigError("manifest config invalid: " + errors.front());
  config.output_dir = run_dir.string();
  std::vector<CellOutcome> cells;
  for (const auto& c : manifest["cells"]) {
    CellOutcome cell;
    cell.seed = c["seed"].get<std::uint64_t>();
    cell.t_a = c["t_a"].get<double>();
    cell.ok = c["status"] == "ok";
    cells.push_back(cell);
  }
  write_analysis(run_dir, config, cells);
}

}  // namespace glasstn
