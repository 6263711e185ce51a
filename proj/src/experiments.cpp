#include "sievelab/experiments.hpp"

#include <cmath>
#include <cstdio>

#include "sievelab/errors.hpp"
#include "sievelab/parallel.hpp"
#include "sievelab/rng.hpp"

namespace sievelab {

using nlohmann::json;

namespace {

CellResult summarize(std::vector<int> outcomes) {
  CellResult out;
  int hits = 0;
  for (int v : outcomes) {
    if (v < 0) {
      ++out.failures;
    } else {
      ++out.reps;
      hits += v;
    }
  }
  if (out.reps > 0) {
    out.rate = static_cast<double>(hits) / out.reps;
    out.se = std::sqrt(out.rate * (1.0 - out.rate) / out.reps);
  }
  out.outcomes = std::move(outcomes);
  return out;
}

BootstrapConfig bootstrap_config(const CellSpec& cell, int index, int m) {
  BootstrapConfig cfg;
  cfg.m = m;
  cfg.B = cell.B;
  cfg.M = cell.M;
  cfg.grid_t = cell.grid_t;
  cfg.grid_y = cell.grid_y;
  cfg.alpha = cell.alpha;
  cfg.seed = derive_seed(cell.seed, "bootstrap", static_cast<std::uint64_t>(index));
  cfg.threads = 1;
  return cfg;
}

json cell_json(const std::string& label, const CellResult& r) {
  return json{{"cell", label}, {"rate", r.rate}, {"se", r.se}, {"reps", r.reps}, {"failures", r.failures}};
}

}  // namespace

Replication run_replication(const CellSpec& cell, int index) {
  const RegressionModelSpec model = builtin_model(cell.model, cell.delta);
  const ErrorProcessSpec errors = ErrorProcessSpec::builtin(cell.error);
  const std::uint64_t data_seed = derive_seed(cell.seed, "replication", static_cast<std::uint64_t>(index));

  Replication rep;
  rep.sample = Sample::series(simulate_series(model, errors, cell.n, data_seed));

  SieveSpec spec;
  spec.time_family = parse_basis_family(cell.family);
  spec.space_family = spec.time_family;
  spec.mapping = Mapping(cell.mapping, default_mapping_scale(rep.sample));
  spec.r = 1;

  TuneGrid grid = TuneGrid::defaults(cell.n);
  if (!cell.cd_grid.empty()) {
    grid.c_candidates = cell.cd_grid;
    grid.d_candidates = cell.cd_grid;
  }
  grid.threads = 1;
  const CdSelection cd = select_cd(rep.sample, spec, grid);
  spec.c = cd.c;
  spec.d = cd.d;
  rep.fit = fit_sieve(rep.sample, spec);
  rep.m = cell.m > 0 ? cell.m : select_m(rep.fit, rep.sample, grid).m;
  return rep;
}

std::vector<CellResult> coverage_cell(const CellSpec& cell, const std::vector<double>& alphas) {
  const RegressionModelSpec truth = builtin_model(cell.model, cell.delta);
  std::vector<std::vector<int>> outcomes(alphas.size(), std::vector<int>(cell.reps, -1));
  parallel_for(cell.reps, cell.threads, [&](std::size_t k) {
    const int index = static_cast<int>(k);
    try {
      const Replication rep = run_replication(cell, index);
      const ScrResult band = scr(rep.fit, rep.sample, bootstrap_config(cell, index, rep.m), 1);
      const double root_n = std::sqrt(static_cast<double>(band.n));
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        const double c = empirical_quantile(band.sup_draws, alphas[a]);
        bool covered = true;
        for (Eigen::Index p = 0; p < band.size() && covered; ++p) {
          if (std::abs(band.x[p]) > cell.x_limit) continue;
          const double half = c * band.h_hat[p] / root_n;
          const double value = truth.m(band.t[p], band.x[p]);
          covered = value >= band.m_hat[p] - half && value <= band.m_hat[p] + half;
        }
        outcomes[a][k] = covered ? 1 : 0;
      }
    } catch (const Error&) {
      // Counted as a failed replication.
    }
  });
  std::vector<CellResult> out;
  for (auto& o : outcomes) out.push_back(summarize(std::move(o)));
  return out;
}

CellResult rejection_cell(const CellSpec& cell, TestResult::Kind kind) {
  const RegressionModelSpec null_model = builtin_model(cell.model, 0.0);
  std::vector<int> outcomes(cell.reps, -1);
  parallel_for(cell.reps, cell.threads, [&](std::size_t k) {
    const int index = static_cast<int>(k);
    try {
      const Replication rep = run_replication(cell, index);
      const BootstrapConfig cfg = bootstrap_config(cell, index, rep.m);
      TestResult result;
      switch (kind) {
        case TestResult::Kind::ExactForm:
          result = test_exact_form(rep.fit, rep.sample, cfg, 1, null_model.m);
          break;
        case TestResult::Kind::ExactFormJoint:
          result = test_exact_form_joint(rep.fit, rep.sample, cfg, {null_model.m});
          break;
        case TestResult::Kind::Stationarity:
          result = test_stationarity(rep.fit, rep.sample, cfg, 1);
          break;
        case TestResult::Kind::Separability:
          result = test_separability(rep.fit, rep.sample, cfg, 1);
          break;
      }
      outcomes[k] = result.reject ? 1 : 0;
    } catch (const Error&) {
    }
  });
  return summarize(std::move(outcomes));
}

std::string power_model(TestResult::Kind kind) {
  switch (kind) {
    case TestResult::Kind::Stationarity: return "model2";
    case TestResult::Kind::Separability: return "model3";
    default: return "model1";
  }
}

std::vector<CellResult> power_curve(const CellSpec& cell, TestResult::Kind kind, const std::vector<double>& deltas) {
  std::vector<CellResult> out;
  for (double delta : deltas) {
    CellSpec at = cell;
    at.model = power_model(kind);
    at.delta = delta;
    out.push_back(rejection_cell(at, kind));
  }
  return out;
}

json reproduce_tables(const std::string& which, const CellSpec& base) {
  json report{{"schema_version", 1},
              {"which", which},
              {"n", base.n},
              {"reps", base.reps},
              {"family", base.family},
              {"error", to_string(base.error)},
              {"cells", json::array()}};
  if (which == "table1") {
    // Models 2 and 3 use their strongest admissible delta (delta must stay below 1).
    for (const char* model : {"model1", "model2", "model3"}) {
      CellSpec cell = base;
      cell.model = model;
      cell.delta = std::string(model) == "model1" ? 0.0 : 0.99;
      const auto results = coverage_cell(cell, {0.10, 0.05});
      report["cells"].push_back(cell_json(std::string(model) + " 90%", results[0]));
      report["cells"].push_back(cell_json(std::string(model) + " 95%", results[1]));
    }
  } else if (which == "table2") {
    for (auto kind : {TestResult::Kind::Stationarity, TestResult::Kind::Separability, TestResult::Kind::ExactForm}) {
      CellSpec cell = base;
      cell.model = power_model(kind);
      cell.delta = 0.0;
      report["cells"].push_back(cell_json(to_string(kind), rejection_cell(cell, kind)));
    }
  } else if (which == "power") {
    const std::vector<double> deltas{0.0, 0.2, 0.4, 0.6, 0.8};
    for (auto kind : {TestResult::Kind::Stationarity, TestResult::Kind::Separability, TestResult::Kind::ExactForm}) {
      const auto curve = power_curve(base, kind, deltas);
      for (std::size_t k = 0; k < deltas.size(); ++k) {
        char label[64];
        std::snprintf(label, sizeof(label), "%s delta=%.1f", to_string(kind).c_str(), deltas[k]);
        report["cells"].push_back(cell_json(label, curve[k]));
      }
    }
  } else {
    throw ConfigError("unknown table '" + which + "' (expected table1|table2|power)");
  }
  return report;
}

}  // namespace sievelab
