#include "sievelab/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "sievelab/errors.hpp"
#include "sievelab/experiments.hpp"
#include "sievelab/inference.hpp"
#include "sievelab/io.hpp"
#include "sievelab/simulate.hpp"
#include "sievelab/tuning.hpp"

namespace sievelab {

using nlohmann::json;

namespace {

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("malformed integer list '" + text + "'");
    }
  }
  return values;
}

struct SimulateOptions {
  std::string model = "model1";
  double delta = 0.0;
  std::string error = "a";
  int n = 500;
  int burn_in = 1000;
  int covariates = 0;
};

struct DataOptions {
  std::string input;
  std::string time_basis = "fourier";
  std::string space_basis = "fourier";
  std::string mapping = "algebraic";
  double s = 0.0;
  int c = 0;
  int d = 0;
  int r = 0;
  std::string cd_grid;
  int l = 0;
  int h0 = 3;
  int m_min = 0;
  int m_max = 0;
};

struct BootOptions {
  int m = 0;
  int B = 1000;
  int M = 1000;
  int grid_t = 100;
  int grid_y = 100;
  double alpha = 0.05;
  int j = 1;
  std::string m0 = "model1";
  double m0_delta = 0.0;
  std::string m0_csv;
};

struct ReproduceOptions {
  int reps = 500;
  int n = 500;
  std::string family = "fourier";
  std::string error = "a";
  std::string cd_grid;
  int B = 300;
  int M = 300;
  int grid = 50;
  double alpha = 0.1;
  int m = 0;
};

struct Leaf {
  std::vector<std::string> command;
  CLI::App* app = nullptr;
  std::string output;
  std::uint64_t seed = 0;
  SimulateOptions sim;
  DataOptions data;
  BootOptions boot;
  ReproduceOptions repro;
};

void add_data_options(CLI::App* app, DataOptions& o) {
  app->add_option("-i,--input", o.input, "input CSV with column y (and x1..xr for exogenous covariates)")->required();
  app->add_option("--time-basis", o.time_basis, "fourier|legendre|chebyshev1|jacobi:a,b|db<N>:J0,Jn");
  app->add_option("--space-basis", o.space_basis, "basis family composed with the mapping");
  app->add_option("--mapping", o.mapping, "identity|algebraic|logarithmic|algebraic+|logarithmic+");
  app->add_option("--s", o.s, "mapping scale; 0 uses the covariate standard deviation")->check(CLI::NonNegativeNumber);
  app->add_option("--c", o.c, "time truncation order; 0 tunes it")->check(CLI::NonNegativeNumber);
  app->add_option("--d", o.d, "space truncation order; 0 tunes it")->check(CLI::NonNegativeNumber);
  app->add_option("--r", o.r, "number of regression functions; 0 infers it from the data")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--cd-grid", o.cd_grid, "comma-separated c and d candidates (default 2..ceil(2 ln n))");
  app->add_option("--l", o.l, "validation length; 0 uses floor(3 log2 n)")->check(CLI::NonNegativeNumber);
  app->add_option("--h0", o.h0, "minimum-volatility neighbourhood radius")->check(CLI::PositiveNumber);
  app->add_option("--m-min", o.m_min, "smallest block size in the volatility scan (0 = default)");
  app->add_option("--m-max", o.m_max, "largest block size in the volatility scan (0 = default)");
}

void add_boot_options(CLI::App* app, BootOptions& o, std::uint64_t& seed, bool with_m0) {
  app->add_option("--m", o.m, "block size; 0 selects it by minimum volatility")->check(CLI::NonNegativeNumber);
  app->add_option("--B", o.B, "draws for the standard deviation / null distribution")->check(CLI::PositiveNumber);
  app->add_option("--M", o.M, "draws for the sup statistic")->check(CLI::PositiveNumber);
  app->add_option("--grid-t", o.grid_t, "grid points in t")->check(CLI::Range(2, 100000));
  app->add_option("--grid-y", o.grid_y, "grid points in the mapped covariate")->check(CLI::Range(2, 100000));
  app->add_option("--alpha", o.alpha, "level")->check(CLI::Range(0.0, 1.0));
  app->add_option("--j", o.j, "regression function index")->check(CLI::PositiveNumber);
  app->add_option("--seed", seed, "master seed");
  if (with_m0) {
    app->add_option("--m0", o.m0, "null surface: model1|model2|model3");
    app->add_option("--m0-delta", o.m0_delta, "delta of the builtin null surface");
    app->add_option("--m0-csv", o.m0_csv, "null surface as a t,x,value grid CSV (overrides --m0)");
  }
}

SieveSpec base_spec(const DataOptions& o, const Sample& sample) {
  SieveSpec spec;
  spec.time_family = parse_basis_family(o.time_basis);
  spec.space_family = parse_basis_family(o.space_basis);
  const double s = o.s > 0.0 ? o.s : default_mapping_scale(sample);
  spec.mapping = Mapping(parse_mapping_kind(o.mapping), s);
  spec.r = o.r > 0 ? o.r : (sample.exogenous() ? static_cast<int>(sample.covariates.cols()) : 1);
  spec.c = std::max(o.c, 1);
  spec.d = std::max(o.d, 1);
  return spec;
}

TuneGrid tune_grid(const DataOptions& o, int n, int threads) {
  TuneGrid grid = TuneGrid::defaults(n);
  if (!o.cd_grid.empty()) {
    grid.c_candidates = parse_int_list(o.cd_grid);
    grid.d_candidates = grid.c_candidates;
  }
  grid.l = o.l;
  grid.h0 = o.h0;
  if (o.m_min > 0 || o.m_max > 0) {
    grid.m_min = o.m_min > 0 ? o.m_min : 1;
    grid.m_max = o.m_max > 0 ? o.m_max : grid.m_max;
  } else {
    grid.m_max = std::max(grid.m_max, 2 * grid.h0 + 1);
  }
  grid.m_max = std::min(grid.m_max, std::max(grid.m_min, n / 2));
  grid.threads = threads;
  return grid;
}

struct Prepared {
  Sample sample;
  FitResult fit;
  std::optional<CdSelection> cd;
};

Prepared prepare_fit(const DataOptions& o, int threads) {
  Prepared out;
  out.sample = sample_from_table(read_csv(o.input));
  SieveSpec spec = base_spec(o, out.sample);
  if (o.c == 0 || o.d == 0) {
    TuneGrid grid = tune_grid(o, out.sample.n(), threads);
    if (o.c > 0) grid.c_candidates = {o.c};
    if (o.d > 0) grid.d_candidates = {o.d};
    out.cd = select_cd(out.sample, spec, grid);
    if (out.cd->at_grid_edge) {
      std::cerr << "warning: selected (c,d) = (" << out.cd->c << "," << out.cd->d
                << ") lies on the edge of the candidate grid\n";
    }
    spec.c = out.cd->c;
    spec.d = out.cd->d;
  }
  out.fit = fit_sieve(out.sample, spec);
  return out;
}

BootstrapConfig boot_config(const BootOptions& o, std::uint64_t seed, int m, int threads) {
  BootstrapConfig cfg;
  cfg.m = m;
  cfg.B = o.B;
  cfg.M = o.M;
  cfg.grid_t = o.grid_t;
  cfg.grid_y = o.grid_y;
  cfg.alpha = o.alpha;
  cfg.seed = seed;
  cfg.threads = threads;
  return cfg;
}

int resolve_m(const BootOptions& b, const DataOptions& d, const Prepared& prep, int threads) {
  if (b.m > 0) return b.m;
  return select_m(prep.fit, prep.sample, tune_grid(d, prep.sample.n(), threads)).m;
}

json make_manifest(const Leaf& leaf) {
  json options = json::object();
  for (const CLI::Option* opt : leaf.app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "output" || name == "o") continue;
    const std::string value = opt->count() > 0 ? opt->results().back() : opt->get_default_str();
    options[name] = value;
  }
  return json{{"tool", "sievelab"},
              {"version", SIEVELAB_VERSION},
              {"schema_version", kSchemaVersion},
              {"command", leaf.command},
              {"options", options}};
}

std::string sidecar_path(const std::string& output) {
  std::filesystem::path p(output);
  if (p.extension() == ".json") throw ConfigError("scr output must be the CSV path; the sidecar gets .json");
  return p.replace_extension(".json").string();
}

void run_simulate(const Leaf& leaf) {
  const SimulateOptions& o = leaf.sim;
  if (o.n < 2) throw ConfigError("--n must be >= 2");
  const RegressionModelSpec model = builtin_model(o.model, o.delta);
  ErrorProcessSpec errors = ErrorProcessSpec::builtin(parse_error_kind(o.error));
  errors.burn_in = o.burn_in;
  CsvTable table;
  table.manifest = make_manifest(leaf);
  if (o.covariates <= 0) {
    const Eigen::VectorXd y = simulate_series(model, errors, o.n, leaf.seed);
    table.header = {"t", "y"};
    table.values.resize(o.n, 2);
    for (int i = 0; i < o.n; ++i) {
      table.values(i, 0) = static_cast<double>(i + 1) / o.n;
      table.values(i, 1) = y[i];
    }
  } else {
    Case2Spec spec;
    spec.components.assign(o.covariates, model);
    spec.covariates.assign(o.covariates, errors);
    spec.noise = errors;
    const Eigen::MatrixXd panel = gen_case2_panel(spec, o.n, leaf.seed);
    table.header = {"t", "y"};
    for (int j = 1; j <= o.covariates; ++j) table.header.push_back("x" + std::to_string(j));
    table.values.resize(o.n, o.covariates + 2);
    for (int i = 0; i < o.n; ++i) table.values(i, 0) = static_cast<double>(i + 1) / o.n;
    table.values.rightCols(o.covariates + 1) = panel;
  }
  write_csv(leaf.output, table);
}

void run_fit(const Leaf& leaf, int threads) {
  const Prepared prep = prepare_fit(leaf.data, threads);
  json doc = fit_to_json(prep.fit);
  doc["manifest"] = make_manifest(leaf);
  write_json(leaf.output, doc);
}

void run_tune(const Leaf& leaf, int threads) {
  DataOptions o = leaf.data;
  o.c = 0;
  o.d = 0;
  const Prepared prep = prepare_fit(o, threads);
  const MSelection ms = select_m(prep.fit, prep.sample, tune_grid(o, prep.sample.n(), threads));
  json mse = json::array();
  for (const auto& cand : prep.cd->table) {
    json row{{"c", cand.c}, {"d", cand.d}};
    if (cand.error.empty()) {
      row["mse"] = cand.mse;
    } else {
      row["mse"] = nullptr;
      row["error"] = cand.error;
    }
    mse.push_back(row);
  }
  json se = json::array();
  for (const auto& [m, value] : ms.se_table) se.push_back({{"m", m}, {"se", value}});
  json doc{{"schema_version", kSchemaVersion},
           {"c", prep.cd->c},
           {"d", prep.cd->d},
           {"m", ms.m},
           {"s", prep.fit.spec.mapping.scale()},
           {"at_grid_edge", prep.cd->at_grid_edge},
           {"validation_mse_table", mse},
           {"se_table", se},
           {"manifest", make_manifest(leaf)}};
  write_json(leaf.output, doc);
}

void run_scr(const Leaf& leaf, int threads) {
  const std::string sidecar = sidecar_path(leaf.output);
  const Prepared prep = prepare_fit(leaf.data, threads);
  const int m = resolve_m(leaf.boot, leaf.data, prep, threads);
  const ScrResult band = scr(prep.fit, prep.sample, boot_config(leaf.boot, leaf.seed, m, threads), leaf.boot.j);
  const json manifest = make_manifest(leaf);
  CsvTable table = scr_to_table(band);
  table.manifest = manifest;
  write_csv(leaf.output, table);
  json side = scr_sidecar(band);
  side["manifest"] = manifest;
  write_json(sidecar, side);
}

NullSurface null_surface(const BootOptions& o) {
  if (!o.m0_csv.empty()) return surface_from_grid(read_csv(o.m0_csv));
  return builtin_model(o.m0, o.m0_delta).m;
}

void run_test(const Leaf& leaf, const std::string& kind, int threads) {
  const Prepared prep = prepare_fit(leaf.data, threads);
  const int m = resolve_m(leaf.boot, leaf.data, prep, threads);
  const BootstrapConfig cfg = boot_config(leaf.boot, leaf.seed, m, threads);
  TestResult result;
  if (kind == "exact") {
    result = test_exact_form(prep.fit, prep.sample, cfg, leaf.boot.j, null_surface(leaf.boot));
  } else if (kind == "joint") {
    const std::vector<NullSurface> m0(prep.fit.spec.r, null_surface(leaf.boot));
    result = test_exact_form_joint(prep.fit, prep.sample, cfg, m0);
  } else if (kind == "stationarity") {
    result = test_stationarity(prep.fit, prep.sample, cfg, leaf.boot.j);
  } else {
    result = test_separability(prep.fit, prep.sample, cfg, leaf.boot.j);
  }
  json doc = test_to_json(result);
  doc["m"] = m;
  doc["c"] = prep.fit.spec.c;
  doc["d"] = prep.fit.spec.d;
  doc["manifest"] = make_manifest(leaf);
  write_json(leaf.output, doc);
}

void run_reproduce(const Leaf& leaf, const std::string& which, int threads) {
  const ReproduceOptions& o = leaf.repro;
  if (o.reps < 100) throw ConfigError("--reps must be >= 100");
  CellSpec cell;
  cell.reps = o.reps;
  cell.n = o.n;
  cell.family = o.family;
  parse_basis_family(o.family);
  cell.error = parse_error_kind(o.error);
  if (!o.cd_grid.empty()) cell.cd_grid = parse_int_list(o.cd_grid);
  cell.B = o.B;
  cell.M = o.M;
  cell.grid_t = o.grid;
  cell.grid_y = o.grid;
  cell.alpha = o.alpha;
  cell.m = o.m;
  cell.seed = leaf.seed;
  cell.threads = threads;
  json report = reproduce_tables(which, cell);
  report["manifest"] = make_manifest(leaf);
  for (const auto& c : report["cells"]) {
    std::fprintf(stderr, "%-28s rate %.3f  (se %.3f, reps %d, failed %d)\n", c["cell"].get<std::string>().c_str(),
                 c["rate"].get<double>(), c["se"].get<double>(), c["reps"].get<int>(), c["failures"].get<int>());
  }
  write_json(leaf.output, report);
}

// Turns a config document into command-line tokens placed before the user's
// own arguments, so explicit flags win.
std::vector<std::string> config_tokens(const json& config, std::vector<std::string>& command) {
  std::vector<std::string> tokens;
  if (config.contains("command")) command = config.at("command").get<std::vector<std::string>>();
  const json& options = config.contains("options") ? config.at("options") : config;
  for (const auto& [key, value] : options.items()) {
    if (key == "command" || key == "tool" || key == "version" || key == "schema_version" || key == "options") continue;
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_number() || value.is_boolean()) {
      text = value.dump();
    } else {
      throw ConfigError("config key '" + key + "' must be a scalar");
    }
    if (text.empty()) continue;
    tokens.push_back("--" + key);
    tokens.push_back(text);
  }
  return tokens;
}

int execute(std::vector<std::string> args) {
  CLI::App app{"Sieve estimation and multiplier-bootstrap inference for time-varying nonlinear regression",
               "sievelab"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.set_version_flag("--version", SIEVELAB_VERSION);
  app.require_subcommand(1);

  int threads = 0;
  std::string config_path;
  app.add_option("--threads", threads, "worker threads (default: $SIEVE_LAB_THREADS or hardware)");
  app.add_option("--config", config_path, "JSON config, or any sievelab output to rerun from its manifest");

  std::vector<std::unique_ptr<Leaf>> leaves;
  auto make_leaf = [&](CLI::App* parent, const std::string& name, const std::string& help,
                       std::vector<std::string> command) {
    auto leaf = std::make_unique<Leaf>();
    leaf->command = std::move(command);
    leaf->app = parent->add_subcommand(name, help);
    leaf->app->add_option("-o,--output", leaf->output, "output path")->required();
    leaves.push_back(std::move(leaf));
    return leaves.back().get();
  };

  Leaf* sim = make_leaf(&app, "simulate", "simulate a builtin model", {"simulate"});
  sim->app->add_option("--model", sim->sim.model, "model1|model2|model3");
  sim->app->add_option("--delta", sim->sim.delta, "delta in [0,1)");
  sim->app->add_option("--error", sim->sim.error, "a|b|c|tvtar (tvar2, setar, bilinear)");
  sim->app->add_option("--n", sim->sim.n, "series length")->check(CLI::PositiveNumber);
  sim->app->add_option("--burn-in", sim->sim.burn_in, "discarded warm-up steps")->check(CLI::NonNegativeNumber);
  sim->app->add_option("--covariates", sim->sim.covariates, "r > 0 writes an exogenous panel with x1..xr")
      ->check(CLI::NonNegativeNumber);
  sim->app->add_option("--seed", sim->seed, "master seed");

  Leaf* tune = make_leaf(&app, "tune", "select (c,d) and the block size m", {"tune"});
  add_data_options(tune->app, tune->data);

  Leaf* fit = make_leaf(&app, "fit", "fit the sieve regression", {"fit"});
  add_data_options(fit->app, fit->data);

  Leaf* band = make_leaf(&app, "scr", "simultaneous confidence region", {"scr"});
  add_data_options(band->app, band->data);
  add_boot_options(band->app, band->boot, band->seed, false);

  CLI::App* test = app.add_subcommand("test", "hypothesis tests");
  test->require_subcommand(1);
  std::vector<std::pair<Leaf*, std::string>> tests;
  for (const char* kind : {"exact", "joint", "stationarity", "separability"}) {
    Leaf* leaf = make_leaf(test, kind, std::string(kind) + " test", {"test", kind});
    add_data_options(leaf->app, leaf->data);
    add_boot_options(leaf->app, leaf->boot, leaf->seed, std::string(kind) == "exact" || std::string(kind) == "joint");
    tests.emplace_back(leaf, kind);
  }

  CLI::App* repro = app.add_subcommand("reproduce", "desk-scale Monte Carlo tables");
  repro->require_subcommand(1);
  std::vector<std::pair<Leaf*, std::string>> repros;
  for (const char* which : {"table1", "table2", "power"}) {
    Leaf* leaf = make_leaf(repro, which, std::string(which) + " report", {"reproduce", which});
    ReproduceOptions& o = leaf->repro;
    if (std::string(which) == "power") o.n = 800;
    leaf->app->add_option("--reps", o.reps, "Monte Carlo replications (>= 100)");
    leaf->app->add_option("--n", o.n, "sample size")->check(CLI::PositiveNumber);
    leaf->app->add_option("--family", o.family, "basis family for time and space");
    leaf->app->add_option("--error", o.error, "a|b|c");
    leaf->app->add_option("--cd-grid", o.cd_grid, "comma-separated (c,d) candidates");
    leaf->app->add_option("--B", o.B, "bootstrap draws")->check(CLI::PositiveNumber);
    leaf->app->add_option("--M", o.M, "sup-statistic draws")->check(CLI::PositiveNumber);
    leaf->app->add_option("--grid", o.grid, "grid size per axis")->check(CLI::Range(2, 100000));
    leaf->app->add_option("--alpha", o.alpha, "test level")->check(CLI::Range(0.0, 1.0));
    leaf->app->add_option("--m", o.m, "fixed block size; 0 selects per replication");
    leaf->app->add_option("--seed", leaf->seed, "master seed");
    repros.emplace_back(leaf, which);
  }

  // Expand --config before the real parse.
  for (std::size_t k = 0; k < args.size(); ++k) {
    std::string path;
    if (args[k] == "--config" && k + 1 < args.size()) {
      path = args[k + 1];
    } else if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
    }
    if (path.empty()) continue;
    std::vector<std::string> command;
    const json config = read_config_file(path);
    const std::vector<std::string> tokens = config_tokens(config, command);
    // Split the user's arguments into global flags, subcommand path and the rest.
    std::vector<std::string> global;
    std::vector<std::string> user_command;
    std::vector<std::string> rest;
    std::size_t i = 0;
    while (i < args.size()) {
      if (args[i] == "--config" || args[i] == "--threads") {
        global.insert(global.end(), args.begin() + i, args.begin() + std::min(i + 2, args.size()));
        i += 2;
      } else if (args[i].rfind("--config=", 0) == 0 || args[i].rfind("--threads=", 0) == 0) {
        global.push_back(args[i++]);
      } else {
        break;
      }
    }
    while (i < args.size() && !args[i].empty() && args[i][0] != '-') user_command.push_back(args[i++]);
    rest.assign(args.begin() + i, args.end());
    if (user_command.empty()) user_command = command;
    if (user_command.empty()) throw ConfigError("config '" + path + "' names no command; give one on the command line");
    std::vector<std::string> merged = global;
    merged.insert(merged.end(), user_command.begin(), user_command.end());
    merged.insert(merged.end(), tokens.begin(), tokens.end());
    merged.insert(merged.end(), rest.begin(), rest.end());
    args = std::move(merged);
    break;
  }

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*sim->app) run_simulate(*sim);
  else if (*tune->app) run_tune(*tune, threads);
  else if (*fit->app) run_fit(*fit, threads);
  else if (*band->app) run_scr(*band, threads);
  for (const auto& [leaf, kind] : tests) {
    if (*leaf->app) run_test(*leaf, kind, threads);
  }
  for (const auto& [leaf, which] : repros) {
    if (*leaf->app) run_reproduce(*leaf, which, threads);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  try {
    return execute(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run_cli(args);
}

}  // namespace sievelab
