#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "sievelab/inference.hpp"
#include "sievelab/simulate.hpp"
#include "sievelab/tuning.hpp"

namespace sievelab {

/// One Monte Carlo cell: a data-generating process plus the full pipeline
/// (mapping scale from the data, (c,d) by validation forecasts, m by minimum
/// volatility, then bootstrap inference).
struct CellSpec {
  std::string model = "model1";
  double delta = 0.0;
  ErrorProcessSpec::Kind error = ErrorProcessSpec::Kind::TvAR2;
  std::string family = "fourier";
  Mapping::Kind mapping = Mapping::Kind::AlgebraicR;
  int n = 500;
  int reps = 500;
  /// Candidate orders; empty means TuneGrid::defaults(n).
  std::vector<int> cd_grid;
  /// Fixed block size; 0 selects m per replication.
  int m = 0;
  int B = 300;
  int M = 300;
  int grid_t = 50;
  int grid_y = 50;
  double alpha = 0.05;
  /// Coverage is checked at grid points with |x| <= x_limit.
  double x_limit = 2000.0;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct CellResult {
  double rate = 0.0;
  double se = 0.0;
  int reps = 0;
  int failures = 0;
  /// Per-replication indicator (1 covered / rejected, 0 otherwise, -1 failed).
  std::vector<int> outcomes;
};

/// Data, fitted sieve and block size of one replication.
struct Replication {
  Sample sample;
  FitResult fit;
  int m = 0;
};

/// Simulates replication `index` of the cell and runs tuning + estimation.
Replication run_replication(const CellSpec& cell, int index);

/// Simultaneous coverage at every level in `alphas`, from one SCR per replication.
std::vector<CellResult> coverage_cell(const CellSpec& cell, const std::vector<double>& alphas);

/// Rejection rate of one test at level cell.alpha. ExactForm tests against
/// the cell's model with delta = 0.
CellResult rejection_cell(const CellSpec& cell, TestResult::Kind kind);

/// The model each test uses in the power study: exact form on model1,
/// stationarity on model2, separability on model3.
std::string power_model(TestResult::Kind kind);

/// Rejection rate over delta values with common random numbers.
std::vector<CellResult> power_curve(const CellSpec& cell, TestResult::Kind kind, const std::vector<double>& deltas);

/// Desk-scale versions of the coverage table, the type-I table and the power
/// study, as a JSON report.
nlohmann::json reproduce_tables(const std::string& which, const CellSpec& base);

}  // namespace sievelab
