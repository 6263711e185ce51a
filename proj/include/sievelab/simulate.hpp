#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace sievelab {

using CoefficientFn = std::function<double(double)>;
using SurfaceFn = std::function<double(double, double)>;

/// Locally stationary error recursions driven by i.i.d. N(0,1) innovations eta.
///
///   TvAR2     e_i = a1(t) e_{i-1} + a2(t) e_{i-2} + eta_i
///   SETAR     e_i = a1(t) e_{i-1} + eta_i if e_{i-1} >= 0, a2(t) e_{i-1} + eta_i otherwise
///   Bilinear  e_i = (a1(t) eta_{i-1} + a2(t)) e_{i-1} + eta_i
///   TVTAR     e_i = a1(t) [e_{i-1}]^+ + a2(t) [-e_{i-1}]^+ + eta_i
struct ErrorProcessSpec {
  enum class Kind { TvAR2, SETAR, Bilinear, TVTAR };

  Kind kind = Kind::TvAR2;
  CoefficientFn a1 = [](double) { return 0.4; };
  CoefficientFn a2 = [](double t) { return 0.4 * std::sin(2.0 * std::numbers::pi * t); };
  int burn_in = 1000;

  /// The recursion with the default coefficient functions.
  static ErrorProcessSpec builtin(Kind kind);
  /// Throws ConfigError if the process is not usable (TVTAR contraction, burn-in < 0).
  void validate() const;
};

ErrorProcessSpec::Kind parse_error_kind(const std::string& name);
std::string to_string(ErrorProcessSpec::Kind kind);

/// The full recursion path of length burn_in + n; time is frozen at 0 during
/// burn-in, then step i of the kept stretch uses t = i/n.
Eigen::VectorXd gen_error_path(const ErrorProcessSpec& spec, int n, std::uint64_t seed);

/// The last n values of gen_error_path.
Eigen::VectorXd gen_error_process(const ErrorProcessSpec& spec, int n, std::uint64_t seed);

/// Drift and volatility of X_i = m(t, X_{i-1}) + sigma(t, X_{i-1}) e_i.
struct RegressionModelSpec {
  enum class Builtin { Model1, Model2, Model3, Custom };

  SurfaceFn m;
  SurfaceFn sigma;
  double delta = 0.0;
  Builtin builtin = Builtin::Custom;

  /// m = 5t + 4 cos(2 pi t x) + delta sin(2 pi t x); delta = 0 is the null model.
  static RegressionModelSpec model1(double delta = 0.0);
  /// m = (delta sin(2 pi t) + 1) exp(-x^2/2).
  static RegressionModelSpec model2(double delta);
  /// m = 4t (delta cos(2 pi t x) - exp(-x^2/2)/2), piecewise sigma.
  static RegressionModelSpec model3(double delta);
  static RegressionModelSpec custom(SurfaceFn m, SurfaceFn sigma);

  /// Checks sigma >= 0 on a 128 x 128 grid of [0,1] x [-10,10].
  void validate() const;
};

RegressionModelSpec builtin_model(const std::string& name, double delta);

/// Runs the regression recursion over `errors` starting from X_0 = 0. The
/// first `burn_in` steps use t = 0 and are dropped; the remaining
/// n = errors.size() - burn_in steps use t = i/n.
Eigen::VectorXd gen_regression_series(const RegressionModelSpec& model, const Eigen::Ref<const Eigen::VectorXd>& errors,
                                      int burn_in = 0);

/// Error path plus regression recursion over the same burn-in, n values kept.
Eigen::VectorXd simulate_series(const RegressionModelSpec& model, const ErrorProcessSpec& errors, int n,
                                std::uint64_t seed);

/// Y_i = sum_j [m_j(t_i, X_{j,i}) + sigma_j(t_i, X_{j,i}) e_{j,i}] with exogenous
/// covariates X_j drawn as independent error processes and independent noise
/// streams e_j.
struct Case2Spec {
  std::vector<RegressionModelSpec> components;
  std::vector<ErrorProcessSpec> covariates;
  ErrorProcessSpec noise;
};

/// n x (r+1) matrix with columns (Y, X_1, ..., X_r).
Eigen::MatrixXd gen_case2_panel(const Case2Spec& spec, int n, std::uint64_t seed);

}  // namespace sievelab
