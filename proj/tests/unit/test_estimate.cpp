#include <doctest.h>

#include <algorithm>
#include <random>

#include "../support/oracles.hpp"
#include "sievelab/errors.hpp"
#include "sievelab/estimate.hpp"
#include "sievelab/simulate.hpp"

using namespace sievelab;

namespace {

SieveSpec fourier_spec(int c, int d, double s = 1.0) {
  SieveSpec spec;
  spec.c = c;
  spec.d = d;
  spec.mapping = Mapping::algebraic(s);
  return spec;
}

Sample model1_sample(int n, std::uint64_t seed) {
  return Sample::series(simulate_series(RegressionModelSpec::model1(), ErrorProcessSpec::builtin(ErrorProcessSpec::Kind::TvAR2), n, seed));
}

}  // namespace

TEST_CASE("ols examples") {
  Eigen::MatrixXd W(3, 1);
  W << 1, 1, 1;
  Eigen::VectorXd Y(3);
  Y << 1, 2, 3;
  FitResult fit = ols_fit(W, Y);
  CHECK(fit.beta[0] == doctest::Approx(2.0));
  CHECK(fit.residuals.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  CHECK(fit.residual_sd == doctest::Approx(1.0));

  Eigen::MatrixXd W2(3, 2);
  W2 << 1, 0, 0, 1, 1, 1;
  Eigen::VectorXd Y2(3);
  Y2 << 1, 1, 2;
  fit = ols_fit(W2, Y2);
  CHECK(fit.beta[0] == doctest::Approx(1.0));
  CHECK(fit.beta[1] == doctest::Approx(1.0));
  CHECK(fit.residuals.norm() < 1e-14);
}

TEST_CASE("ols matches the normal equations and leaves orthogonal residuals") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd W(12, 4);
    Eigen::VectorXd Y(12);
    for (Eigen::Index k = 0; k < W.size(); ++k) W.data()[k] = normal(rng);
    for (Eigen::Index k = 0; k < Y.size(); ++k) Y[k] = normal(rng);
    const FitResult fit = ols_fit(W, Y);
    const Eigen::VectorXd expected = oracle::normal_equations(W, Y);
    CHECK((fit.beta - expected).norm() <= 1e-8 * expected.norm());
    CHECK((W.transpose() * fit.residuals).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(fit.pi_hat.isApprox(W.transpose() * W / 12.0));
    CHECK((fit.residuals - (Y - W * fit.beta)).norm() < 1e-12);
  }
}

TEST_CASE("fitted values are a projection") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd W(40, 6);
  Eigen::VectorXd Y(40);
  for (Eigen::Index k = 0; k < W.size(); ++k) W.data()[k] = normal(rng);
  for (Eigen::Index k = 0; k < Y.size(); ++k) Y[k] = normal(rng);
  const FitResult first = ols_fit(W, Y);
  const Eigen::VectorXd fitted = Y - first.residuals;
  const FitResult second = ols_fit(W, fitted);
  CHECK((second.beta - first.beta).norm() < 1e-12);
  CHECK(second.residuals.norm() < 1e-12);
}

TEST_CASE("fit_sieve rejects under-determined designs") {
  SieveSpec spec = fourier_spec(6, 10);
  CHECK_THROWS_AS(fit_sieve(Sample::series(Eigen::VectorXd::LinSpaced(10, -1, 1)), spec), ConfigError);
}

TEST_CASE("ols errors") {
  Eigen::MatrixXd W = Eigen::MatrixXd::Ones(3, 4);
  CHECK_THROWS_AS(ols_fit(W, Eigen::VectorXd::Ones(3)), ConfigError);
  Eigen::MatrixXd collinear(5, 2);
  collinear.col(0).setOnes();
  collinear.col(1).setConstant(2.0);
  try {
    ols_fit(collinear, Eigen::VectorXd::LinSpaced(5, 0, 1));
    FAIL("expected a singular design");
  } catch (const SingularDesignError& e) {
    CHECK(e.condition() > 1e10);
  }
}

TEST_CASE("design matrix examples") {
  Eigen::VectorXd y(4);
  y << 0.3, -1.2, 2.0, 0.7;
  const Sample sample = Sample::series(y);

  const DesignMatrix ones = build_design(sample, fourier_spec(1, 1));
  CHECK(ones.W.rows() == 3);
  CHECK(ones.W.cols() == 1);
  CHECK(ones.W.isOnes());
  CHECK(ones.response == y.tail(3));

  const SieveSpec spec = fourier_spec(2, 2);
  const DesignMatrix design = build_design(sample, spec);
  REQUIRE(design.W.rows() == 3);
  REQUIRE(design.W.cols() == 4);
  const double r2 = std::sqrt(2.0);
  for (int row = 0; row < 3; ++row) {
    const int i = row + 2;
    const double t = i / 4.0;
    const double x = y[i - 2];
    const double unit = (x / std::sqrt(x * x + 1.0) + 1.0) / 2.0;
    const double time[2] = {1.0, r2 * std::cos(2 * M_PI * t)};
    const double space[2] = {1.0, r2 * std::cos(2 * M_PI * unit)};
    for (int l1 = 0; l1 < 2; ++l1) {
      for (int l2 = 0; l2 < 2; ++l2) {
        CHECK(design.W(row, l1 * 2 + l2) == doctest::Approx(time[l1] * space[l2]).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("design rows are Kronecker products of the regressors and time basis") {
  const Sample sample = model1_sample(300, 4);
  SieveSpec spec = fourier_spec(3, 4, 2.0);
  spec.r = 2;
  const DesignMatrix design = build_design(sample, spec);
  const IndexMap map = index_map(spec);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pick(spec.r + 1, sample.n());
  for (int trial = 0; trial < 100; ++trial) {
    const int i = pick(rng);
    const double t = static_cast<double>(i) / sample.n();
    const Eigen::VectorXd w = regressor_vector(sample, spec, i);
    const Eigen::VectorXd a = eval_time_all(spec, t);
    REQUIRE(w.size() == spec.r * spec.d);
    const Eigen::VectorXd row = design.W.row(i - spec.r - 1).transpose();
    for (int j = 1; j <= spec.r; ++j) {
      for (int l1 = 1; l1 <= spec.c; ++l1) {
        for (int l2 = 1; l2 <= spec.d; ++l2) {
          CHECK(row[map.flat(j, l1, l2)] == doctest::Approx(a[l1 - 1] * w[(j - 1) * spec.d + l2 - 1]).epsilon(1e-14));
        }
      }
    }
    CHECK((design_row(sample, spec, i, sample.n()) - row).norm() < 1e-14);
  }
  SieveSpec flat = spec;
  flat.d = 1;
  CHECK(regressor_vector(sample, flat, 10).isOnes());
}

TEST_CASE("index map round trips") {
  const IndexMap map{3, 4, 5};
  for (int k = 0; k < map.size(); ++k) {
    const auto [j, l1, l2] = map.unflat(k);
    CHECK(map.flat(j, l1, l2) == k);
  }
  CHECK(map.flat(2, 1, 1) == 20);
}

TEST_CASE("data problems are reported") {
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(20, -1, 1);
  y[7] = std::nan("");
  CHECK_THROWS_AS(build_design(Sample::series(y), fourier_spec(2, 2)), DataError);
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(20, 1);
  CHECK_THROWS_AS(build_design(Sample::panel(Eigen::VectorXd::Ones(19), x), fourier_spec(1, 1)), DataError);
  SieveSpec two = fourier_spec(1, 1);
  two.r = 2;
  CHECK_THROWS_AS(build_design(Sample::panel(Eigen::VectorXd::Ones(20), x), two), ConfigError);
  CHECK_THROWS_AS(default_mapping_scale(Sample::series(Eigen::VectorXd::Ones(10))), DataError);
  SieveSpec half = fourier_spec(1, 2);
  half.mapping = Mapping::algebraic_half_line(1.0);
  CHECK_THROWS_AS(build_design(Sample::series(Eigen::VectorXd::LinSpaced(20, -1, 1)), half), DomainError);
}

TEST_CASE("predictions") {
  const Sample sample = model1_sample(200, 2);
  FitResult fit = fit_sieve(sample, fourier_spec(2, 3, 1.5));
  const Eigen::VectorXd b = eval_tensor_basis(fit.spec, 0.4, 0.9);
  CHECK(predict_m(fit, 1, 0.4, 0.9) == doctest::Approx(b.dot(fit.beta)).epsilon(1e-13));
  const double y = fit.spec.mapping.to_unit(0.9);
  CHECK(predict_m_unit(fit, 1, 0.4, y) == doctest::Approx(predict_m(fit, 1, 0.4, 0.9)).epsilon(1e-12));
  CHECK(coefficient_block(fit, 1) == fit.beta);

  fit.beta.setZero();
  CHECK(predict_m(fit, 1, 0.1, -3.0) == 0.0);

  FitResult constant = fit_sieve(sample, fourier_spec(1, 1));
  constant.beta[0] = 2.0;
  CHECK(predict_m(constant, 1, 0.9, 12.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(predict_m(constant, 2, 0.5, 0.0), ConfigError);
}

TEST_CASE("case 2 fit recovers an in-span surface") {
  const int n = 400;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, 2);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = normal(rng);
  SieveSpec spec = fourier_spec(2, 2, 1.0);
  spec.r = 2;
  Eigen::VectorXd beta(8);
  beta << 1.0, 0.5, -0.3, 0.2, 0.0, 0.7, 0.0, -0.4;
  const Sample probe = Sample::panel(Eigen::VectorXd::Zero(n), x);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (int i = spec.r + 1; i <= n; ++i) y[i - 1] = design_row(probe, spec, i, n).dot(beta);
  const FitResult fit = fit_sieve(Sample::panel(y, x), spec);
  CHECK((fit.beta - beta).norm() < 1e-10);
  CHECK(fit.residuals.norm() < 1e-10);
  CHECK(fit.n == n);

  // A time-only term in m_2 is not identified separately; it moves to m_1.
  Eigen::VectorXd shifted = beta;
  shifted[6] = 0.1;
  for (int i = spec.r + 1; i <= n; ++i) y[i - 1] = design_row(probe, spec, i, n).dot(shifted);
  const FitResult moved = fit_sieve(Sample::panel(y, x), spec);
  Eigen::VectorXd expected = beta;
  expected[2] += 0.1;
  CHECK((moved.beta - expected).norm() < 1e-10);

  const std::vector<bool> active = identified_columns(spec);
  CHECK(std::count(active.begin(), active.end(), false) == 2);
  const Eigen::MatrixXd inv = pi_inverse(fit);
  CHECK(inv.row(4).isZero());
  CHECK(inv.col(6).isZero());
}
