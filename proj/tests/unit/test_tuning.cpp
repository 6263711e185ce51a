#include <doctest.h>

#include <algorithm>
#include <random>

#include "sievelab/errors.hpp"
#include "sievelab/inference.hpp"
#include "sievelab/simulate.hpp"
#include "sievelab/tuning.hpp"

using namespace sievelab;

namespace {

SieveSpec template_spec(double s) {
  SieveSpec spec;
  spec.mapping = Mapping::algebraic(s);
  return spec;
}

/// Case 2 data from a c = 2, d = 3 surface with i.i.d. covariate and noise.
Sample low_order_sample(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  SieveSpec truth = template_spec(1.0);
  truth.c = 2;
  truth.d = 3;
  Eigen::VectorXd beta(6);
  beta << 1.0, -0.8, 0.6, 0.9, 0.5, -0.7;
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = normal(rng);
    y[i] = eval_tensor_basis(truth, static_cast<double>(i + 1) / n, x(i, 0)).dot(beta) + 0.3 * normal(rng);
  }
  return Sample::panel(y, x);
}

double validation_mse(const Sample& sample, SieveSpec spec, int c, int d, int len) {
  spec.c = c;
  spec.d = d;
  const int n = sample.n();
  const FitResult fit = fit_sieve(sample.head(n - len), spec, n);
  double sse = 0.0;
  for (int k = n - len + 1; k <= n; ++k) {
    const double e = sample.y[k - 1] - design_row(sample, spec, k, n).dot(fit.beta);
    sse += e * e;
  }
  return sse / len;
}

}  // namespace

TEST_CASE("default grid") {
  const TuneGrid grid = TuneGrid::defaults(500);
  CHECK(grid.c_candidates.front() == 2);
  CHECK(grid.c_candidates.back() == 13);
  CHECK(grid.d_candidates == grid.c_candidates);
  CHECK(grid.validation_length(500) == 26);
  CHECK(grid.h0 == 3);
  CHECK(grid.m_min == 1);
  CHECK(grid.m_max == 24 + 3);
}

TEST_CASE("grid validation") {
  TuneGrid grid = TuneGrid::defaults(100);
  grid.c_candidates = {3, 2};
  CHECK_THROWS_AS(grid.validate(100), ConfigError);
  grid.c_candidates = {};
  CHECK_THROWS_AS(grid.validate(100), ConfigError);
  grid = TuneGrid::defaults(100);
  grid.l = 50;
  CHECK_THROWS_AS(grid.validate(100), ConfigError);
}

TEST_CASE("single candidate is returned") {
  const Sample sample = low_order_sample(300, 1);
  TuneGrid grid = TuneGrid::defaults(300);
  grid.c_candidates = {4};
  grid.d_candidates = {1};
  const CdSelection sel = select_cd(sample, template_spec(1.0), grid);
  CHECK(sel.c == 4);
  CHECK(sel.d == 1);
  CHECK(sel.table.size() == 1);
}

TEST_CASE("select_cd picks the grid minimum and is near the true order") {
  const Sample sample = low_order_sample(600, 2);
  TuneGrid grid = TuneGrid::defaults(600);
  grid.c_candidates = {1, 2, 3, 4, 5};
  grid.d_candidates = {1, 2, 3, 4, 5};
  grid.threads = 1;
  const CdSelection sel = select_cd(sample, template_spec(1.0), grid);
  REQUIRE(sel.table.size() == 25);
  double minimum = std::numeric_limits<double>::infinity();
  for (const auto& cand : sel.table) {
    CHECK(cand.error.empty());
    minimum = std::min(minimum, cand.mse);
    CHECK(cand.mse == validation_mse(sample, template_spec(1.0), cand.c, cand.d, grid.validation_length(600)));
  }
  CHECK(sel.mse == minimum);
  CHECK(std::find(grid.c_candidates.begin(), grid.c_candidates.end(), sel.c) != grid.c_candidates.end());
  const double oracle_mse = validation_mse(sample, template_spec(1.0), 2, 3, grid.validation_length(600));
  CHECK(sel.mse <= 1.1 * oracle_mse);

  for (int threads : {2, 4}) {
    grid.threads = threads;
    const CdSelection again = select_cd(sample, template_spec(1.0), grid);
    CHECK(again.c == sel.c);
    CHECK(again.d == sel.d);
    CHECK(again.mse == sel.mse);
  }
}

TEST_CASE("select_cd reports when every candidate fails") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(200, 1, 0.5);
  const Sample sample = Sample::panel(Eigen::VectorXd::LinSpaced(200, 0, 1), x);
  TuneGrid grid = TuneGrid::defaults(200);
  grid.c_candidates = {2};
  grid.d_candidates = {2, 3};
  try {
    select_cd(sample, template_spec(1.0), grid);
    FAIL("expected a tuning failure");
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(c=2, d=2)") != std::string::npos);
    CHECK(msg.find("(c=2, d=3)") != std::string::npos);
  }
}

TEST_CASE("long-run covariance") {
  const Sample sample = Sample::series(
      simulate_series(RegressionModelSpec::model1(), ErrorProcessSpec::builtin(ErrorProcessSpec::Kind::TvAR2), 300, 3));
  SieveSpec spec = template_spec(default_mapping_scale(sample));
  spec.c = 2;
  spec.d = 3;
  const FitResult fit = fit_sieve(sample, spec);
  const int m = 7;
  const Eigen::MatrixXd omega = omega_hat(fit, sample, m);
  CHECK(omega == omega.transpose());

  // Direct evaluation of the defining sum.
  const int n = sample.n();
  const int r = spec.r;
  Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(6, 6);
  for (int i = r + 1; i <= n - m; ++i) {
    Eigen::VectorXd block = Eigen::VectorXd::Zero(spec.d);
    for (int j = i; j <= i + m; ++j) block += regressor_vector(sample, spec, j) * fit.residuals[j - r - 1];
    const Eigen::VectorXd v = tensor_product(eval_time_all(spec, static_cast<double>(i) / n), block);
    direct += v * v.transpose();
  }
  direct /= static_cast<double>((n - m - r + 1) * m);
  CHECK((omega - direct).cwiseAbs().maxCoeff() < 1e-10 * direct.cwiseAbs().maxCoeff());

  FitResult quiet = fit;
  quiet.residuals.setZero();
  CHECK(omega_hat(quiet, sample, m).isZero());
}

TEST_CASE("long-run covariance of i.i.d. residuals is their variance") {
  double ratio = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd y(4000);
    for (auto& v : y) v = 2.0 + 1.5 * normal(rng);
    const Sample sample = Sample::series(y);
    const FitResult fit = fit_sieve(sample, template_spec(1.0));
    const double var = fit.residuals.squaredNorm() / static_cast<double>(fit.residuals.size());
    ratio += omega_hat(fit, sample, 16)(0, 0) / var;
  }
  // Blocks hold m + 1 terms over sqrt(m), hence the (m + 1) / m factor.
  CHECK(ratio / 20.0 == doctest::Approx(17.0 / 16.0).epsilon(0.15));
}

TEST_CASE("minimum-volatility block size") {
  const Sample sample = Sample::series(
      simulate_series(RegressionModelSpec::model1(), ErrorProcessSpec::builtin(ErrorProcessSpec::Kind::TvAR2), 500, 4));
  SieveSpec spec = template_spec(default_mapping_scale(sample));
  spec.c = 3;
  spec.d = 3;
  const FitResult fit = fit_sieve(sample, spec);
  TuneGrid grid = TuneGrid::defaults(500);

  const MSelection sel = select_m(fit, sample, grid);
  REQUIRE(sel.se_table.size() == static_cast<std::size_t>(grid.m_max - grid.m_min - 2 * grid.h0 + 1));
  CHECK(sel.se_table.front().first == grid.m_min + grid.h0);
  CHECK(sel.se_table.back().first == grid.m_max - grid.h0);
  const auto best = std::min_element(sel.se_table.begin(), sel.se_table.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  CHECK(sel.m == best->first);

  FitResult quiet = fit;
  quiet.residuals.setZero();
  CHECK(select_m(quiet, sample, grid).m == grid.m_min + grid.h0);

  grid.m_min = 2;
  grid.m_max = 8;
  const MSelection one = select_m(fit, sample, grid);
  CHECK(one.m == 5);
  CHECK(one.se_table.size() == 1);

  grid.m_max = 7;
  CHECK_THROWS_AS(select_m(fit, sample, grid), ConfigError);
}
