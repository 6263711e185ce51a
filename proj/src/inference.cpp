#include "sievelab/inference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sievelab/errors.hpp"
#include "sievelab/parallel.hpp"
#include "sievelab/quadrature.hpp"
#include "sievelab/rng.hpp"

namespace sievelab {

namespace {

// Draws are generated and reduced in fixed-size chunks so that every
// statistic is independent of the worker count.
constexpr int kChunk = 50;

void require_unweighted(const SieveSpec& spec) {
  if (spec.weighted_space) throw ConfigError("inference requires the unweighted space basis");
}

void check_fit_matches(const FitResult& fit, const Sample& sample) {
  if (sample.n() != fit.n || fit.residuals.size() != fit.n - fit.spec.r) {
    throw ConfigError("fit and sample do not belong together (length mismatch)");
  }
}

// Running mean / sum of squared deviations per row, merged in chunk order.
struct Moments {
  double count = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd m2;

  static Moments of(const Eigen::MatrixXd& values) {
    Moments out;
    out.count = static_cast<double>(values.cols());
    out.mean = values.rowwise().mean();
    out.m2 = (values.colwise() - out.mean).array().square().rowwise().sum().matrix();
    return out;
  }

  void merge(const Moments& other) {
    if (count == 0.0) {
      *this = other;
      return;
    }
    const double total = count + other.count;
    const Eigen::VectorXd delta = other.mean - mean;
    mean += delta * (other.count / total);
    m2 += other.m2 + delta.cwiseAbs2() * (count * other.count / total);
    count = total;
  }
};

int chunk_count(int draws) { return (draws + kChunk - 1) / kChunk; }

// Basis values on the SCR grid: column a*grid_y + b is a(t_a) (x) phi(y_b).
Eigen::MatrixXd grid_basis(const SieveSpec& spec, const ScrGrid& grid) {
  const Eigen::Index gt = grid.t.size();
  const Eigen::Index gy = grid.y.size();
  std::vector<Eigen::VectorXd> space(gy);
  for (Eigen::Index b = 0; b < gy; ++b) space[b] = spec.space_family.eval_all(grid.y[b], spec.d);
  Eigen::MatrixXd basis(spec.c * spec.d, gt * gy);
  for (Eigen::Index a = 0; a < gt; ++a) {
    const Eigen::VectorXd time = eval_time_all(spec, grid.t[a]);
    for (Eigen::Index b = 0; b < gy; ++b) basis.col(a * gy + b) = tensor_product(time, space[b]);
  }
  return basis;
}

// 1-D Gram matrix int_0^1 f f' of the first `count` functions of a family.
Eigen::MatrixXd family_gram(const BasisFamily& family, int count) {
  const QuadratureRule base = gauss_legendre_unit(64);
  // Wavelets are only piecewise smooth at scale 2^-Jn; integrate them panel by panel.
  const int panels = family.kind() == BasisFamily::Kind::Daubechies ? (1 << family.jn()) : 1;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(count, count);
  Eigen::VectorXd values(count);
  for (int panel = 0; panel < panels; ++panel) {
    for (Eigen::Index q = 0; q < base.nodes.size(); ++q) {
      const double t = (panel + base.nodes[q]) / panels;
      family.eval_all(t, values);
      gram.noalias() += (base.weights[q] / panels) * values * values.transpose();
    }
  }
  return 0.5 * (gram + gram.transpose());
}

std::string point_label(double t, double x) {
  std::ostringstream os;
  os.precision(10);
  os << "(t=" << t << ", x=" << x << ")";
  return os.str();
}

}  // namespace

void BootstrapConfig::validate(int n, int r) const {
  if (m < 1) throw ConfigError("block size m must be >= 1");
  if (m > n - r - 1) throw ConfigError("block size m must be <= n - r - 1 = " + std::to_string(n - r - 1));
  if (B < 1 || M < 1) throw ConfigError("bootstrap replication counts B and M must be >= 1");
  if (grid_t < 2 || grid_y < 2) throw ConfigError("evaluation grid sizes must be >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
}

Eigen::MatrixXd residual_block_sums(const FitResult& fit, const Sample& sample, int m) {
  check_fit_matches(fit, sample);
  const SieveSpec& spec = fit.spec;
  const int n = fit.n;
  const int r = spec.r;
  if (m < 1 || m > n - r - 1) throw ConfigError("block size m must lie in [1, n - r - 1]");
  const int rd = r * spec.d;
  // x_i = w_i e_i for i = r+1 .. n.
  Eigen::MatrixXd weighted(n - r, rd);
  for (int i = r + 1; i <= n; ++i) {
    weighted.row(i - r - 1) = (regressor_vector(sample, spec, i) * fit.residuals[i - r - 1]).transpose();
  }
  const int count = n - m - r;
  Eigen::MatrixXd sums(count, rd);
  Eigen::RowVectorXd window = weighted.topRows(m + 1).colwise().sum();
  for (int k = 0; k < count; ++k) {
    sums.row(k) = window;
    if (k + m + 1 < n - r) window += weighted.row(k + m + 1) - weighted.row(k);
  }
  return sums;
}

BootstrapContext::BootstrapContext(const FitResult& fit, const Sample& sample, int m) : m_(m) {
  const SieveSpec& spec = fit.spec;
  const Eigen::MatrixXd sums = residual_block_sums(fit, sample, m);
  const int count = static_cast<int>(sums.rows());
  const double scale = 1.0 / std::sqrt(static_cast<double>(count) * m);
  const IndexMap map = index_map(spec);
  G_.resize(count, spec.p());
  for (int k = 0; k < count; ++k) {
    const int i = spec.r + 1 + k;
    const Eigen::VectorXd a = eval_time_all(spec, static_cast<double>(i) / fit.n);
    for (int j = 1; j <= spec.r; ++j) {
      for (int l1 = 1; l1 <= spec.c; ++l1) {
        for (int l2 = 1; l2 <= spec.d; ++l2) {
          G_(k, map.flat(j, l1, l2)) = scale * sums(k, (j - 1) * spec.d + l2 - 1) * a[l1 - 1];
        }
      }
    }
  }
}

Eigen::VectorXd BootstrapContext::draw(std::uint64_t seed, const std::string& label, std::uint64_t index) const {
  Eigen::VectorXd multipliers(G_.rows());
  auto engine = make_stream(seed, label, index);
  fill_standard_normal(engine, multipliers);
  return G_.transpose() * multipliers;
}

Eigen::MatrixXd BootstrapContext::draw_batch(std::uint64_t seed, const std::string& label, std::uint64_t first,
                                             int count) const {
  Eigen::MatrixXd multipliers(G_.rows(), count);
  for (int k = 0; k < count; ++k) {
    auto engine = make_stream(seed, label, first + static_cast<std::uint64_t>(k));
    fill_standard_normal(engine, multipliers.col(k));
  }
  return G_.transpose() * multipliers;
}

Eigen::VectorXd draw_xi(const FitResult& fit, const Sample& sample, const BootstrapConfig& cfg, std::uint64_t stream) {
  cfg.validate(fit.n, fit.spec.r);
  return BootstrapContext(fit, sample, cfg.m).draw(cfg.seed, "xi", stream);
}

double t1_draw(const Eigen::Ref<const Eigen::VectorXd>& xi, const FitResult& fit, int j, double t, double x) {
  if (j < 1 || j > fit.spec.r) throw ConfigError("regression function index j out of range");
  const int cd = fit.spec.c * fit.spec.d;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(fit.p());
  b.segment((j - 1) * cd, cd) = eval_tensor_basis(fit.spec, t, x);
  return xi.dot(pi_inverse(fit) * b);
}

Eigen::MatrixXd compute_B_matrix(const SieveSpec& spec) {
  spec.validate();
  require_unweighted(spec);
  // The unit-square rule is a tensor product, so the Gram matrix factors.
  const Eigen::MatrixXd time_gram = family_gram(spec.time_family, spec.c);
  const Eigen::MatrixXd space_gram = family_gram(spec.space_family, spec.d);
  const int cd = spec.c * spec.d;
  Eigen::MatrixXd block(cd, cd);
  for (int a = 0; a < spec.c; ++a) {
    for (int b = 0; b < spec.c; ++b) block.block(a * spec.d, b * spec.d, spec.d, spec.d) = time_gram(a, b) * space_gram;
  }
  if ((block - Eigen::MatrixXd::Identity(cd, cd)).cwiseAbs().maxCoeff() < 1e-8) block.setIdentity();
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(spec.p(), spec.p());
  for (int j = 0; j < spec.r; ++j) full.block(j * cd, j * cd, cd, cd) = block;
  return full;
}

ScrGrid make_scr_grid(const SieveSpec& spec, int grid_t, int grid_y) {
  if (grid_t < 2 || grid_y < 2) throw ConfigError("evaluation grid sizes must be >= 2");
  ScrGrid grid;
  grid.t = Eigen::VectorXd::LinSpaced(grid_t, 0.0, 1.0);
  grid.y.resize(grid_y);
  grid.x.resize(grid_y);
  for (int b = 0; b < grid_y; ++b) {
    grid.y[b] = (b + 0.5) / grid_y;
    grid.x[b] = spec.mapping.from_unit(grid.y[b]);
  }
  return grid;
}

double empirical_quantile(const Eigen::Ref<const Eigen::VectorXd>& sorted, double alpha) {
  const Eigen::Index count = sorted.size();
  if (count == 0) throw ConfigError("empirical quantile of an empty sample");
  auto index = static_cast<Eigen::Index>(std::floor(static_cast<double>(count) * (1.0 - alpha)));
  index = std::clamp<Eigen::Index>(index, 1, count);
  return sorted[index - 1];
}

ScrResult scr(const FitResult& fit, const Sample& sample, const BootstrapConfig& cfg, int j) {
  const SieveSpec& spec = fit.spec;
  require_unweighted(spec);
  cfg.validate(fit.n, spec.r);
  if (cfg.B < 2) throw ConfigError("SCR needs B >= 2 draws for a standard deviation");
  if (j < 1 || j > spec.r) throw ConfigError("regression function index j out of range");

  const BootstrapContext ctx(fit, sample, cfg.m);
  const ScrGrid grid = make_scr_grid(spec, cfg.grid_t, cfg.grid_y);
  const Eigen::MatrixXd basis = grid_basis(spec, grid);
  const int cd = spec.c * spec.d;
  const Eigen::Index points = basis.cols();

  ScrResult out;
  out.j = j;
  out.grid_t = cfg.grid_t;
  out.grid_y = cfg.grid_y;
  out.t.resize(points);
  out.y.resize(points);
  out.x.resize(points);
  for (int a = 0; a < cfg.grid_t; ++a) {
    for (int b = 0; b < cfg.grid_y; ++b) {
      out.t[a * cfg.grid_y + b] = grid.t[a];
      out.y[a * cfg.grid_y + b] = grid.y[b];
      out.x[a * cfg.grid_y + b] = grid.x[b];
    }
  }
  out.m_hat = basis.transpose() * coefficient_block(fit, j);

  // T1 at every point for a batch of draws is loadings' * Xi.
  const Eigen::MatrixXd pi_inv = pi_inverse(fit);
  const Eigen::MatrixXd loadings = pi_inv.middleCols((j - 1) * cd, cd) * basis;

  const int sd_chunks = chunk_count(cfg.B);
  std::vector<Moments> partial(sd_chunks);
  parallel_for(sd_chunks, cfg.threads, [&](std::size_t c) {
    const int first = static_cast<int>(c) * kChunk;
    const int count = std::min(kChunk, cfg.B - first);
    const Eigen::MatrixXd xi = ctx.draw_batch(cfg.seed, "scr-sd", first, count);
    partial[c] = Moments::of(loadings.transpose() * xi);
  });
  Moments total;
  for (const auto& part : partial) total.merge(part);
  out.h_hat = (total.m2 / (total.count - 1.0)).cwiseSqrt();
  for (Eigen::Index k = 0; k < points; ++k) {
    if (!(out.h_hat[k] > 0.0) || !std::isfinite(out.h_hat[k])) {
      throw DegenerateVarianceError("bootstrap standard deviation is zero at grid point " +
                                        point_label(out.t[k], out.x[k]),
                                    out.t[k], out.x[k]);
    }
  }

  const Eigen::ArrayXd inv_h = out.h_hat.array().inverse();
  out.sup_draws.resize(cfg.M);
  parallel_for(chunk_count(cfg.M), cfg.threads, [&](std::size_t c) {
    const int first = static_cast<int>(c) * kChunk;
    const int count = std::min(kChunk, cfg.M - first);
    const Eigen::MatrixXd xi = ctx.draw_batch(cfg.seed, "scr-sup", first, count);
    const Eigen::MatrixXd t1 = loadings.transpose() * xi;
    for (int k = 0; k < count; ++k) out.sup_draws[first + k] = (t1.col(k).array().abs() * inv_h).maxCoeff();
  });
  std::sort(out.sup_draws.begin(), out.sup_draws.end());

  out.c_alpha = empirical_quantile(out.sup_draws, cfg.alpha);
  out.alpha = cfg.alpha;
  out.n = fit.n;
  out.m = cfg.m;
  out.B = cfg.B;
  out.M = cfg.M;
  out.seed = cfg.seed;
  const Eigen::VectorXd half = (out.c_alpha / std::sqrt(static_cast<double>(fit.n))) * out.h_hat;
  out.lower = out.m_hat - half;
  out.upper = out.m_hat + half;
  return out;
}

std::string to_string(TestResult::Kind kind) {
  switch (kind) {
    case TestResult::Kind::ExactForm: return "exact";
    case TestResult::Kind::ExactFormJoint: return "joint";
    case TestResult::Kind::Stationarity: return "stationarity";
    case TestResult::Kind::Separability: return "separability";
  }
  return "?";
}

namespace {

// n * int int (m_hat_j - m0)^2 over the unit square in (t, y), 64 x 64 Gauss-Legendre.
double l2_statistic(const FitResult& fit, int j, const NullSurface& m0) {
  const SieveSpec& spec = fit.spec;
  const QuadratureRule rule = gauss_legendre_unit(64);
  const Eigen::Index q = rule.nodes.size();
  Eigen::MatrixXd time(q, spec.c);
  Eigen::MatrixXd space(q, spec.d);
  Eigen::VectorXd xs(q);
  for (Eigen::Index k = 0; k < q; ++k) {
    time.row(k) = eval_time_all(spec, rule.nodes[k]).transpose();
    space.row(k) = spec.space_family.eval_all(rule.nodes[k], spec.d).transpose();
    xs[k] = spec.mapping.from_unit(rule.nodes[k]);
  }
  const Eigen::MatrixXd coef = coefficient_block(fit, j).reshaped<Eigen::RowMajor>(spec.c, spec.d);
  const Eigen::MatrixXd surface = time * coef * space.transpose();
  double acc = 0.0;
  for (Eigen::Index a = 0; a < q; ++a) {
    for (Eigen::Index b = 0; b < q; ++b) {
      const double diff = surface(a, b) - m0(rule.nodes[a], xs[b]);
      acc += rule.weights[a] * rule.weights[b] * diff * diff;
    }
  }
  return static_cast<double>(fit.n) * acc;
}

TestResult quadratic_form_test(const FitResult& fit, const Sample& sample, const BootstrapConfig& cfg,
                               const Eigen::MatrixXd& weight, double statistic, TestResult::Kind kind) {
  const BootstrapContext ctx(fit, sample, cfg.m);
  Eigen::VectorXd draws(cfg.B);
  parallel_for(chunk_count(cfg.B), cfg.threads, [&](std::size_t c) {
    const int first = static_cast<int>(c) * kChunk;
    const int count = std::min(kChunk, cfg.B - first);
    const Eigen::MatrixXd xi = ctx.draw_batch(cfg.seed, "exact-null", first, count);
    const Eigen::MatrixXd wx = weight * xi;
    for (int k = 0; k < count; ++k) draws[first + k] = xi.col(k).dot(wx.col(k));
  });
  std::sort(draws.begin(), draws.end());

  TestResult out;
  out.kind = kind;
  out.statistic = statistic;
  out.null_draws_count = cfg.B;
  out.alpha = cfg.alpha;
  const auto below = std::upper_bound(draws.begin(), draws.end(), statistic) - draws.begin();
  out.p_value = 1.0 - static_cast<double>(below) / cfg.B;
  out.critical_value = empirical_quantile(draws, cfg.alpha);
  out.reject = statistic > out.critical_value;
  return out;
}

}  // namespace

TestResult test_exact_form(const FitResult& fit, const Sample& sample, const BootstrapConfig& cfg, int j,
                           const NullSurface& m0) {
  const SieveSpec& spec = fit.spec;
  require_unweighted(spec);
  cfg.validate(fit.n, spec.r);
  if (j < 1 || j > spec.r) throw ConfigError("regression function index j out of range");
  if (!m0) throw ConfigError("null surface m0 is not set");
  const int cd = spec.c * spec.d;
  const Eigen::MatrixXd B = compute_B_matrix(spec);
  const Eigen::MatrixXd pi_inv = pi_inverse(fit);
  const Eigen::MatrixXd rows = pi_inv.middleRows((j - 1) * cd, cd);
  const Eigen::MatrixXd weight = rows.transpose() * B.block((j - 1) * cd, (j - 1) * cd, cd, cd) * rows;
  return quadratic_form_test(fit, sample, cfg, weight, l2_statistic(fit, j, m0), TestResult::Kind::ExactForm);
}

TestResult test_exact_form_joint(const FitResult& fit, const Sample& sample, const BootstrapConfig& cfg,
                                 const std::vector<NullSurface>& m0) {
  const SieveSpec& spec = fit.spec;
  require_unweighted(spec);
  cfg.validate(fit.n, spec.r);
  if (static_cast<int>(m0.size()) != spec.r) throw ConfigError("joint test needs one null surface per function");
  double statistic = 0.0;
  for (int j = 1; j <= spec.r; ++j) {
    if (!m0[j - 1]) throw ConfigError("null surface m0 is not set");
    statistic += l2_statistic(fit, j, m0[j - 1]);
  }
  const Eigen::MatrixXd pi_inv = pi_inverse(fit);
  const Eigen::MatrixXd weight = pi_inv * compute_B_matrix(spec) * pi_inv;
  return quadratic_form_test(fit, sample, cfg, weight, statistic, TestResult::Kind::ExactFormJoint);
}

Eigen::VectorXd stationary_restricted_coefficients(const FitResult& fit, const Sample& sample, int j) {
  check_fit_matches(fit, sample);
  const SieveSpec& spec = fit.spec;
  if (j < 1 || j > spec.r) throw ConfigError("regression function index j out of range");
  const DesignMatrix full = build_design(sample, spec, fit.n);
  const int cd = spec.c * spec.d;
  const Eigen::Index rows = full.W.rows();
  // Component j keeps only d columns varphi(X) with a constant time function.
  Eigen::MatrixXd restricted(rows, spec.p() - cd + spec.d);
  Eigen::Index col = 0;
  for (int jj = 1; jj <= spec.r; ++jj) {
    if (jj == j) {
      for (Eigen::Index row = 0; row < rows; ++row) {
        restricted.row(row).segment(col, spec.d) =
            regressor_vector(sample, spec, full.first_index + static_cast<int>(row)).segment((j - 1) * spec.d, spec.d);
      }
      col += spec.d;
    } else {
      restricted.middleCols(col, cd) = full.W.middleCols((jj - 1) * cd, cd);
      col += cd;
    }
  }
  // Same identification as the full fit: components after the first carry
  // no x-constant columns.
  const std::vector<bool> full_active = identified_columns(spec);
  std::vector<bool> active;
  for (int jj = 1; jj <= spec.r; ++jj) {
    if (jj == j) {
      for (int l2 = 1; l2 <= spec.d; ++l2) active.push_back(full_active[index_map(spec).flat(jj, 1, l2)]);
    } else {
      for (int k = 0; k < cd; ++k) active.push_back(full_active[(jj - 1) * cd + k]);
    }
  }
  const FitResult sub = ols_fit_active(restricted, full.response, full.n, active);
  Eigen::Index offset = 0;
  for (int jj = 1; jj < j; ++jj) offset += cd;
  return sub.beta.segment(offset, spec.d);
}

Eigen::VectorXd separable_restricted_coefficients(const FitResult& fit, int j) {
  const SieveSpec& spec = fit.spec;
  const Eigen::MatrixXd coef = coefficient_block(fit, j).reshaped<Eigen::RowMajor>(spec.c, spec.d);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(coef, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::MatrixXd rank1 =
      svd.singularValues()[0] * svd.matrixU().col(0) * svd.matrixV().col(0).transpose();
  return rank1.reshaped<Eigen::RowMajor>();
}

TestResult embed_in_scr(const ScrResult& band, const Eigen::Ref<const Eigen::VectorXd>& restricted,
                        TestResult::Kind kind) {
  if (restricted.size() != band.size()) throw ConfigError("restricted surface does not match the SCR grid");
  const double root_n = std::sqrt(static_cast<double>(band.n));
  const double statistic =
      root_n * ((restricted - band.m_hat).array().abs() / band.h_hat.array()).maxCoeff();
  TestResult out;
  out.kind = kind;
  out.statistic = statistic;
  out.null_draws_count = static_cast<int>(band.sup_draws.size());
  out.alpha = band.alpha;
  out.critical_value = band.c_alpha;
  const auto below = std::upper_bound(band.sup_draws.begin(), band.sup_draws.end(), statistic) - band.sup_draws.begin();
  out.p_value = 1.0 - static_cast<double>(below) / static_cast<double>(band.sup_draws.size());
  out.reject = statistic > band.c_alpha;
  return out;
}

TestResult test_stationarity(const FitResult& fit, const Sample& sample, const BootstrapConfig& cfg, int j) {
  const ScrResult band = scr(fit, sample, cfg, j);
  const Eigen::VectorXd gamma = stationary_restricted_coefficients(fit, sample, j);
  Eigen::VectorXd restricted(band.size());
  for (int b = 0; b < band.grid_y; ++b) {
    const double value = gamma.dot(fit.spec.space_family.eval_all(band.y[b], fit.spec.d));
    for (int a = 0; a < band.grid_t; ++a) restricted[a * band.grid_y + b] = value;
  }
  return embed_in_scr(band, restricted, TestResult::Kind::Stationarity);
}

TestResult test_separability(const FitResult& fit, const Sample& sample, const BootstrapConfig& cfg, int j) {
  const ScrResult band = scr(fit, sample, cfg, j);
  const Eigen::VectorXd coef = separable_restricted_coefficients(fit, j);
  const ScrGrid grid = make_scr_grid(fit.spec, band.grid_t, band.grid_y);
  const Eigen::VectorXd restricted = grid_basis(fit.spec, grid).transpose() * coef;
  return embed_in_scr(band, restricted, TestResult::Kind::Separability);
}

}  // namespace sievelab
