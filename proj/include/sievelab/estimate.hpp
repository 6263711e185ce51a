#pragma once

#include <Eigen/Dense>
#include <tuple>

#include "sievelab/basis.hpp"

namespace sievelab {

/// Observed data. Case 1 is a single series regressed on its own lags;
/// Case 2 adds r exogenous covariate columns.
struct Sample {
  Eigen::VectorXd y;
  Eigen::MatrixXd covariates;

  static Sample series(Eigen::VectorXd y) { return {std::move(y), Eigen::MatrixXd()}; }
  static Sample panel(Eigen::VectorXd y, Eigen::MatrixXd covariates) { return {std::move(y), std::move(covariates)}; }

  bool exogenous() const noexcept { return covariates.cols() > 0; }
  int n() const noexcept { return static_cast<int>(y.size()); }

  /// Covariate of regression function j (1-based) at time index i (1-based):
  /// X_{i-j} in Case 1, X_{j,i} in Case 2.
  double covariate(int j, int i) const { return exogenous() ? covariates(i - 1, j - 1) : y[i - j - 1]; }

  /// First `length` observations.
  Sample head(int length) const;
};

/// Sample standard deviation of the covariate values (pooled over columns in
/// Case 2); the default mapping scale.
double default_mapping_scale(const Sample& sample);

/// Coefficient layout k = (j-1)cd + (l1-1)d + l2 (all 1-based); flat() and
/// unflat() use 0-based storage positions.
struct IndexMap {
  int r = 1;
  int c = 1;
  int d = 1;

  int size() const noexcept { return r * c * d; }
  int flat(int j, int l1, int l2) const noexcept { return (j - 1) * c * d + (l1 - 1) * d + (l2 - 1); }
  std::tuple<int, int, int> unflat(int k) const noexcept {
    return {k / (c * d) + 1, (k % (c * d)) / d + 1, k % d + 1};
  }
};

inline IndexMap index_map(const SieveSpec& spec) { return {spec.r, spec.c, spec.d}; }

/// Rows i = r+1 .. n of the sieve regression. Row i uses t_i = i / time_scale.
struct DesignMatrix {
  Eigen::MatrixXd W;
  Eigen::VectorXd response;
  int n = 0;
  int first_index = 0;
  double time_scale = 0.0;
};

/// Builds W. time_scale <= 0 means the sample length n.
DesignMatrix build_design(const Sample& sample, const SieveSpec& spec, double time_scale = 0.0);

/// One design row: b(t_i, .) over all r components, layout per IndexMap.
Eigen::VectorXd design_row(const Sample& sample, const SieveSpec& spec, int i, double time_scale);

/// w_i = (varphi(X_{1,i}), ..., varphi(X_{r,i})), length r*d.
Eigen::VectorXd regressor_vector(const Sample& sample, const SieveSpec& spec, int i);

struct FitResult {
  SieveSpec spec;
  Eigen::VectorXd beta;
  Eigen::MatrixXd pi_hat;
  Eigen::VectorXd residuals;
  int n = 0;
  double condition = 0.0;
  double residual_sd = 0.0;

  int p() const noexcept { return static_cast<int>(beta.size()); }
};

/// Least squares by column-pivoted QR. pi_hat = W'W / n_scale (n_scale <= 0
/// means rows(W)). Throws SingularDesignError when the numerical rank is
/// below p at relative threshold 1e-10, ConfigError when rows(W) < p.
FitResult ols_fit(const Eigen::Ref<const Eigen::MatrixXd>& W, const Eigen::Ref<const Eigen::VectorXd>& Y,
                  int n_scale = 0);

/// Columns kept in the fit. With r >= 2 and a space basis whose first
/// function is constant, the x-constant columns of components j >= 2 repeat
/// those of component 1; they are dropped, so the purely time-varying part of
/// the sum is carried by m_1.
std::vector<bool> identified_columns(const SieveSpec& spec);

/// Least squares on the active columns only. Inactive coefficients are zero
/// and pi_hat keeps the full p x p layout.
FitResult ols_fit_active(const Eigen::Ref<const Eigen::MatrixXd>& W, const Eigen::Ref<const Eigen::VectorXd>& Y,
                         int n_scale, const std::vector<bool>& active);

/// Inverse of pi_hat on the identified columns, zero elsewhere.
Eigen::MatrixXd pi_inverse(const FitResult& fit);

/// build_design + ols_fit with the sieve spec attached.
FitResult fit_sieve(const Sample& sample, const SieveSpec& spec, double time_scale = 0.0);

/// Coefficients of regression function j as a c*d vector (l1-major).
Eigen::VectorXd coefficient_block(const FitResult& fit, int j);

/// m_hat_j(t, x).
double predict_m(const FitResult& fit, int j, double t, double x);

/// m_hat_j in transformed coordinates, x = g(2y - 1; s).
double predict_m_unit(const FitResult& fit, int j, double t, double y);

/// b~(t, y) = a(t) (x) phi(y), the tensor basis in transformed coordinates.
Eigen::VectorXd tensor_basis_unit(const SieveSpec& spec, double t, double y);

}  // namespace sievelab
