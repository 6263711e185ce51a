#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

#include "sievelab/estimate.hpp"
#include "sievelab/inference.hpp"

namespace sievelab {

inline constexpr int kSchemaVersion = 1;

/// A numeric CSV file. Lines starting with '#' are comments; a comment of
/// the form "# manifest {...}" carries the run manifest.
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
  nlohmann::json manifest;

  /// Column index by name, -1 when absent.
  int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Reads the manifest embedded in a CSV ("# manifest" line) or JSON output
/// ("manifest" key), or the file itself when it is a plain JSON config.
nlohmann::json read_config_file(const std::string& path);

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& value);

/// y column plus optional x1..xr covariates. With r > 0 and no x columns the
/// sample is Case 1.
Sample sample_from_table(const CsvTable& table);

nlohmann::json spec_to_json(const SieveSpec& spec);
SieveSpec spec_from_json(const nlohmann::json& j);

nlohmann::json fit_to_json(const FitResult& fit);
FitResult fit_from_json(const nlohmann::json& j);

/// CSV part of an SCR: t,x,mhat,h,lo,hi.
CsvTable scr_to_table(const ScrResult& band);
/// JSON sidecar: c_alpha, alpha, m, B, M, seed, plus the grid layout and the
/// sorted sup draws so the result can be reconstructed.
nlohmann::json scr_sidecar(const ScrResult& band);
ScrResult scr_from_files(const CsvTable& table, const nlohmann::json& sidecar);

/// Bilinear interpolant of a complete (t, x, value) grid; arguments outside
/// the grid are clamped to its edges.
NullSurface surface_from_grid(const CsvTable& table);

nlohmann::json test_to_json(const TestResult& result);
TestResult test_from_json(const nlohmann::json& j);

}  // namespace sievelab
