#include "sievelab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sievelab/errors.hpp"

namespace sievelab {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open input file '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot create output file '" + path + "'");
  return out;
}

json vector_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) { return json(std::vector<double>(v.begin(), v.end())); }

Eigen::VectorXd vector_from_json(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw DataError(std::string("missing array '") + key + "'");
  const auto values = j.at(key).get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return static_cast<int>(k);
  }
  return -1;
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw NumericalError("cannot format floating-point value");
  return std::string(buffer, ptr);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line[0] == '#') {
      const std::string body = trim(line.substr(1));
      if (body.rfind("manifest", 0) == 0) {
        try {
          table.manifest = json::parse(body.substr(8));
        } catch (const json::exception&) {
          throw DataError(path + ":" + std::to_string(line_no) + ": malformed manifest comment");
        }
      }
      continue;
    }
    if (!have_header) {
      table.header = split(line);
      have_header = true;
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                      " cells, found " + std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const std::string& cell = cells[k];
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        throw DataError(path + ":" + std::to_string(line_no) + ": column '" + table.header[k] +
                        "' holds a missing or non-numeric value '" + cell + "'");
      }
      row[k] = value;
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw DataError(path + ": missing header row");
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) table.values(i, k) = rows[i][k];
  }
  return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out = open_output(path);
  if (!table.manifest.is_null()) out << "# manifest " << table.manifest.dump() << '\n';
  for (std::size_t k = 0; k < table.header.size(); ++k) out << (k ? "," : "") << table.header[k];
  out << '\n';
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    for (Eigen::Index k = 0; k < table.values.cols(); ++k) out << (k ? "," : "") << format_double(table.values(i, k));
    out << '\n';
  }
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

json read_json(const std::string& path) {
  std::ifstream in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json(const std::string& path, const json& value) {
  std::ofstream out = open_output(path);
  out << value.dump(2) << '\n';
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

json read_config_file(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string first;
  while (std::getline(in, first) && trim(first).empty()) {
  }
  in.close();
  if (trim(first).rfind('#', 0) == 0 || trim(first).find('{') == std::string::npos) {
    const CsvTable table = read_csv(path);
    if (table.manifest.is_null()) throw ConfigError("'" + path + "' carries no manifest");
    return table.manifest;
  }
  const json doc = read_json(path);
  if (doc.contains("manifest")) return doc.at("manifest");
  return doc;
}

Sample sample_from_table(const CsvTable& table) {
  const int ycol = table.column("y");
  if (ycol < 0) throw DataError("input CSV needs a 'y' column");
  const Eigen::VectorXd y = table.values.col(ycol);
  std::vector<int> xcols;
  for (int k = 1;; ++k) {
    const int col = table.column("x" + std::to_string(k));
    if (col < 0) break;
    xcols.push_back(col);
  }
  if (xcols.empty()) return Sample::series(y);
  Eigen::MatrixXd x(table.values.rows(), static_cast<Eigen::Index>(xcols.size()));
  for (std::size_t k = 0; k < xcols.size(); ++k) x.col(static_cast<Eigen::Index>(k)) = table.values.col(xcols[k]);
  return Sample::panel(y, x);
}

json spec_to_json(const SieveSpec& spec) {
  return json{{"time_family", spec.time_family.name()},
              {"space_family", spec.space_family.name()},
              {"mapping", to_string(spec.mapping.kind())},
              {"s", spec.mapping.scale()},
              {"c", spec.c},
              {"d", spec.d},
              {"r", spec.r},
              {"weighted_space", spec.weighted_space}};
}

SieveSpec spec_from_json(const json& j) {
  try {
    SieveSpec spec;
    spec.time_family = parse_basis_family(j.at("time_family").get<std::string>());
    spec.space_family = parse_basis_family(j.at("space_family").get<std::string>());
    spec.mapping = Mapping(parse_mapping_kind(j.at("mapping").get<std::string>()), j.at("s").get<double>());
    spec.c = j.at("c").get<int>();
    spec.d = j.at("d").get<int>();
    spec.r = j.at("r").get<int>();
    spec.weighted_space = j.value("weighted_space", false);
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed sieve spec: ") + e.what());
  }
}

json fit_to_json(const FitResult& fit) {
  json pi = json::array();
  for (Eigen::Index i = 0; i < fit.pi_hat.rows(); ++i) pi.push_back(vector_to_json(fit.pi_hat.row(i).transpose()));
  return json{{"schema_version", kSchemaVersion},
              {"beta", vector_to_json(fit.beta)},
              {"p", fit.p()},
              {"n", fit.n},
              {"r", fit.spec.r},
              {"c", fit.spec.c},
              {"d", fit.spec.d},
              {"condition", fit.condition},
              {"residual_sd", fit.residual_sd},
              {"spec", spec_to_json(fit.spec)},
              {"pi_hat", pi},
              {"residuals", vector_to_json(fit.residuals)}};
}

FitResult fit_from_json(const json& j) {
  try {
    FitResult fit;
    fit.spec = spec_from_json(j.at("spec"));
    fit.beta = vector_from_json(j, "beta");
    fit.residuals = vector_from_json(j, "residuals");
    fit.n = j.at("n").get<int>();
    fit.condition = j.at("condition").get<double>();
    fit.residual_sd = j.at("residual_sd").get<double>();
    const auto& pi = j.at("pi_hat");
    const auto p = static_cast<Eigen::Index>(fit.beta.size());
    if (fit.beta.size() != fit.spec.p() || static_cast<Eigen::Index>(pi.size()) != p) {
      throw DataError("fit JSON: beta / pi_hat sizes do not match the sieve orders");
    }
    fit.pi_hat.resize(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
      const auto row = pi.at(i).get<std::vector<double>>();
      if (static_cast<Eigen::Index>(row.size()) != p) throw DataError("fit JSON: pi_hat is not square");
      for (Eigen::Index k = 0; k < p; ++k) fit.pi_hat(i, k) = row[k];
    }
    return fit;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed fit JSON: ") + e.what());
  }
}

CsvTable scr_to_table(const ScrResult& band) {
  CsvTable table;
  table.header = {"t", "x", "mhat", "h", "lo", "hi"};
  table.values.resize(band.size(), 6);
  table.values << band.t, band.x, band.m_hat, band.h_hat, band.lower, band.upper;
  return table;
}

json scr_sidecar(const ScrResult& band) {
  return json{{"schema_version", kSchemaVersion},
              {"c_alpha", band.c_alpha},
              {"alpha", band.alpha},
              {"m", band.m},
              {"B", band.B},
              {"M", band.M},
              {"seed", band.seed},
              {"j", band.j},
              {"n", band.n},
              {"grid_t", band.grid_t},
              {"grid_y", band.grid_y},
              {"y", vector_to_json(band.y.head(band.grid_y))},
              {"sup_draws", vector_to_json(band.sup_draws)}};
}

ScrResult scr_from_files(const CsvTable& table, const json& sidecar) {
  try {
    ScrResult band;
    band.c_alpha = sidecar.at("c_alpha").get<double>();
    band.alpha = sidecar.at("alpha").get<double>();
    band.m = sidecar.at("m").get<int>();
    band.B = sidecar.at("B").get<int>();
    band.M = sidecar.at("M").get<int>();
    band.seed = sidecar.at("seed").get<std::uint64_t>();
    band.j = sidecar.at("j").get<int>();
    band.n = sidecar.at("n").get<int>();
    band.grid_t = sidecar.at("grid_t").get<int>();
    band.grid_y = sidecar.at("grid_y").get<int>();
    band.sup_draws = vector_from_json(sidecar, "sup_draws");
    const Eigen::VectorXd ys = vector_from_json(sidecar, "y");
    const Eigen::Index points = static_cast<Eigen::Index>(band.grid_t) * band.grid_y;
    const char* names[] = {"t", "x", "mhat", "h", "lo", "hi"};
    Eigen::VectorXd* targets[] = {&band.t, &band.x, &band.m_hat, &band.h_hat, &band.lower, &band.upper};
    if (table.values.rows() != points || ys.size() != band.grid_y) throw DataError("SCR CSV does not match its sidecar");
    for (int k = 0; k < 6; ++k) {
      const int col = table.column(names[k]);
      if (col < 0) throw DataError(std::string("SCR CSV lacks column '") + names[k] + "'");
      *targets[k] = table.values.col(col);
    }
    band.y.resize(points);
    for (Eigen::Index k = 0; k < points; ++k) band.y[k] = ys[k % band.grid_y];
    return band;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed SCR sidecar: ") + e.what());
  }
}

NullSurface surface_from_grid(const CsvTable& table) {
  const int tc = table.column("t");
  const int xc = table.column("x");
  const int vc = table.column("value");
  if (tc < 0 || xc < 0 || vc < 0) throw DataError("m0 grid CSV needs columns t,x,value");
  std::vector<double> ts(table.values.col(tc).begin(), table.values.col(tc).end());
  std::vector<double> xs(table.values.col(xc).begin(), table.values.col(xc).end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  if (ts.size() < 2 || xs.size() < 2) throw DataError("m0 grid needs at least two distinct t and x values");
  const auto nt = static_cast<Eigen::Index>(ts.size());
  const auto nx = static_cast<Eigen::Index>(xs.size());
  if (table.values.rows() != nt * nx) throw DataError("m0 grid is not a complete t x x lattice");
  Eigen::MatrixXd grid = Eigen::MatrixXd::Constant(nt, nx, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index row = 0; row < table.values.rows(); ++row) {
    const auto a = std::lower_bound(ts.begin(), ts.end(), table.values(row, tc)) - ts.begin();
    const auto b = std::lower_bound(xs.begin(), xs.end(), table.values(row, xc)) - xs.begin();
    grid(a, b) = table.values(row, vc);
  }
  if (!grid.allFinite()) throw DataError("m0 grid has duplicate or missing lattice points");

  // Locate the cell holding v and its fractional position, clamping at the edges.
  auto locate = [](const std::vector<double>& knots, double v) {
    const double clamped = std::clamp(v, knots.front(), knots.back());
    auto hi = std::upper_bound(knots.begin(), knots.end(), clamped) - knots.begin();
    hi = std::clamp<std::ptrdiff_t>(hi, 1, static_cast<std::ptrdiff_t>(knots.size()) - 1);
    const double frac = (clamped - knots[hi - 1]) / (knots[hi] - knots[hi - 1]);
    return std::pair<Eigen::Index, double>(hi - 1, frac);
  };
  return [ts, xs, grid, locate](double t, double x) {
    const auto [a, ft] = locate(ts, t);
    const auto [b, fx] = locate(xs, x);
    return (1 - ft) * ((1 - fx) * grid(a, b) + fx * grid(a, b + 1)) +
           ft * ((1 - fx) * grid(a + 1, b) + fx * grid(a + 1, b + 1));
  };
}

json test_to_json(const TestResult& result) {
  return json{{"schema_version", kSchemaVersion},
              {"kind", to_string(result.kind)},
              {"statistic", result.statistic},
              {"null_draws_count", result.null_draws_count},
              {"critical_value", result.critical_value},
              {"p_value", result.p_value},
              {"alpha", result.alpha},
              {"reject", result.reject}};
}

TestResult test_from_json(const json& j) {
  try {
    TestResult out;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "exact") out.kind = TestResult::Kind::ExactForm;
    else if (kind == "joint") out.kind = TestResult::Kind::ExactFormJoint;
    else if (kind == "stationarity") out.kind = TestResult::Kind::Stationarity;
    else if (kind == "separability") out.kind = TestResult::Kind::Separability;
    else throw DataError("unknown test kind '" + kind + "'");
    out.statistic = j.at("statistic").get<double>();
    out.null_draws_count = j.at("null_draws_count").get<int>();
    out.critical_value = j.at("critical_value").get<double>();
    out.p_value = j.at("p_value").get<double>();
    out.alpha = j.at("alpha").get<double>();
    out.reject = j.at("reject").get<bool>();
    return out;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed test JSON: ") + e.what());
  }
}

}  // namespace sievelab
