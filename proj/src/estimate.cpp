#include "sievelab/estimate.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sievelab/errors.hpp"

namespace sievelab {

Sample Sample::head(int length) const {
  if (length < 0 || length > n()) throw ConfigError("sample prefix length out of range");
  if (exogenous()) return panel(y.head(length), covariates.topRows(length));
  return series(y.head(length));
}

double default_mapping_scale(const Sample& sample) {
  const Eigen::VectorXd values =
      sample.exogenous() ? Eigen::VectorXd(sample.covariates.reshaped()) : Eigen::VectorXd(sample.y);
  if (values.size() < 2) throw DataError("need at least two observations to estimate the mapping scale");
  const double mean = values.mean();
  const double sd = std::sqrt((values.array() - mean).square().sum() / static_cast<double>(values.size() - 1));
  if (!(sd > 0.0) || !std::isfinite(sd)) throw DataError("covariate has zero or non-finite spread; set s explicitly");
  return sd;
}

namespace {

void check_sample(const Sample& sample, const SieveSpec& spec) {
  spec.validate();
  if (sample.exogenous()) {
    if (sample.covariates.rows() != sample.n()) throw DataError("covariate rows do not match the response length");
    if (sample.covariates.cols() != spec.r) {
      throw ConfigError("r = " + std::to_string(spec.r) + " but the sample has " +
                        std::to_string(sample.covariates.cols()) + " covariate columns");
    }
  }
  for (int i = 0; i < sample.n(); ++i) {
    bool ok = std::isfinite(sample.y[i]);
    if (sample.exogenous()) ok = ok && sample.covariates.row(i).allFinite();
    if (!ok) throw DataError("non-finite value in data row " + std::to_string(i + 1));
  }
}

void space_block(const Sample& sample, const SieveSpec& spec, int i, Eigen::Ref<Eigen::VectorXd> out) {
  for (int j = 1; j <= spec.r; ++j) {
    try {
      eval_space_all(spec, sample.covariate(j, i), out.segment((j - 1) * spec.d, spec.d));
    } catch (const DomainError& e) {
      throw DomainError(std::string(e.what()) + " at data row " + std::to_string(i - (sample.exogenous() ? 0 : j)));
    }
  }
}

}  // namespace

Eigen::VectorXd regressor_vector(const Sample& sample, const SieveSpec& spec, int i) {
  if (i <= spec.r || i > sample.n()) throw ConfigError("regressor index must lie in (r, n]");
  Eigen::VectorXd w(spec.r * spec.d);
  space_block(sample, spec, i, w);
  return w;
}

Eigen::VectorXd design_row(const Sample& sample, const SieveSpec& spec, int i, double time_scale) {
  const Eigen::VectorXd a = eval_time_all(spec, static_cast<double>(i) / time_scale);
  const Eigen::VectorXd w = regressor_vector(sample, spec, i);
  const int cd = spec.c * spec.d;
  Eigen::VectorXd row(spec.p());
  for (int j = 0; j < spec.r; ++j) row.segment(j * cd, cd) = tensor_product(a, w.segment(j * spec.d, spec.d));
  return row;
}

DesignMatrix build_design(const Sample& sample, const SieveSpec& spec, double time_scale) {
  check_sample(sample, spec);
  const int n = sample.n();
  if (n <= spec.r) throw ConfigError("need n > r observations");
  const int rows = n - spec.r;
  DesignMatrix design;
  design.n = n;
  design.first_index = spec.r + 1;
  design.time_scale = time_scale > 0.0 ? time_scale : static_cast<double>(n);
  design.W.resize(rows, spec.p());
  design.response = sample.y.tail(rows);
  for (int row = 0; row < rows; ++row) {
    design.W.row(row) = design_row(sample, spec, row + spec.r + 1, design.time_scale).transpose();
  }
  return design;
}

FitResult ols_fit(const Eigen::Ref<const Eigen::MatrixXd>& W, const Eigen::Ref<const Eigen::VectorXd>& Y, int n_scale) {
  if (W.rows() != Y.size()) throw ConfigError("design rows and response length differ");
  const Eigen::Index p = W.cols();
  if (p == 0) throw ConfigError("design has no columns");
  if (W.rows() < p) {
    throw ConfigError("under-determined design: " + std::to_string(W.rows()) + " rows < p = " + std::to_string(p));
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(W);
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(R).singularValues();
  const double smax = sv[0];
  const double smin = sv[p - 1];
  const double condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(smax > 0.0) || !(smin > 1e-10 * smax)) {
    throw SingularDesignError("singular design: numerical rank below p = " + std::to_string(p) +
                                  " (condition estimate " + std::to_string(condition) + ")",
                              condition);
  }

  FitResult fit;
  fit.beta = qr.solve(Y);
  fit.residuals = Y - W * fit.beta;
  const double scale = n_scale > 0 ? n_scale : static_cast<double>(W.rows());
  fit.pi_hat = (W.transpose() * W) / scale;
  fit.pi_hat = 0.5 * (fit.pi_hat + fit.pi_hat.transpose()).eval();
  fit.n = static_cast<int>(scale);
  fit.condition = condition;
  const Eigen::Index dof = W.rows() - p;
  fit.residual_sd = dof > 0 ? std::sqrt(fit.residuals.squaredNorm() / static_cast<double>(dof)) : 0.0;
  return fit;
}

FitResult fit_sieve(const Sample& sample, const SieveSpec& spec, double time_scale) {
  const int rows = sample.n() - spec.r;
  if (rows < spec.p()) {
    throw ConfigError("under-determined design: n - r = " + std::to_string(rows) + " rows but p = r*c*d = " +
                      std::to_string(spec.p()) + " coefficients");
  }
  const DesignMatrix design = build_design(sample, spec, time_scale);
  FitResult fit = ols_fit_active(design.W, design.response, design.n, identified_columns(spec));
  fit.spec = spec;
  return fit;
}

std::vector<bool> identified_columns(const SieveSpec& spec) {
  std::vector<bool> active(spec.p(), true);
  const bool constant_first =
      !spec.weighted_space && (spec.space_family.kind() != BasisFamily::Kind::Daubechies || spec.space_family.j0() == 0);
  if (!constant_first) return active;
  const IndexMap map = index_map(spec);
  for (int j = 2; j <= spec.r; ++j) {
    for (int l1 = 1; l1 <= spec.c; ++l1) active[map.flat(j, l1, 1)] = false;
  }
  return active;
}

FitResult ols_fit_active(const Eigen::Ref<const Eigen::MatrixXd>& W, const Eigen::Ref<const Eigen::VectorXd>& Y,
                         int n_scale, const std::vector<bool>& active) {
  if (static_cast<Eigen::Index>(active.size()) != W.cols()) throw ConfigError("active mask does not match the design");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < W.cols(); ++k) {
    if (active[k]) keep.push_back(k);
  }
  if (static_cast<Eigen::Index>(keep.size()) == W.cols()) return ols_fit(W, Y, n_scale);
  const Eigen::MatrixXd reduced = W(Eigen::all, keep);
  FitResult sub = ols_fit(reduced, Y, n_scale);
  FitResult fit = sub;
  fit.beta = Eigen::VectorXd::Zero(W.cols());
  fit.beta(keep) = sub.beta;
  const double scale = n_scale > 0 ? n_scale : static_cast<double>(W.rows());
  fit.pi_hat = (W.transpose() * W) / scale;
  fit.pi_hat = 0.5 * (fit.pi_hat + fit.pi_hat.transpose()).eval();
  return fit;
}

Eigen::MatrixXd pi_inverse(const FitResult& fit) {
  const std::vector<bool> active = identified_columns(fit.spec);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < fit.pi_hat.rows(); ++k) {
    if (k >= static_cast<Eigen::Index>(active.size()) || active[k]) keep.push_back(k);
  }
  const Eigen::MatrixXd sub = fit.pi_hat(keep, keep);
  const Eigen::LLT<Eigen::MatrixXd> llt(sub);
  if (llt.info() != Eigen::Success) throw NumericalError("Pi_hat is not positive definite on the identified columns");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(fit.pi_hat.rows(), fit.pi_hat.cols());
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(sub.rows(), sub.cols()));
  out(keep, keep) = inv;
  return out;
}

Eigen::VectorXd coefficient_block(const FitResult& fit, int j) {
  const int cd = fit.spec.c * fit.spec.d;
  if (j < 1 || j > fit.spec.r) throw ConfigError("regression function index j out of range");
  return fit.beta.segment((j - 1) * cd, cd);
}

Eigen::VectorXd tensor_basis_unit(const SieveSpec& spec, double t, double y) {
  Eigen::VectorXd space = spec.space_family.eval_all(y, spec.d);
  if (spec.weighted_space) space *= std::sqrt(2.0 * spec.mapping.unit_derivative(spec.mapping.from_unit(y)));
  return tensor_product(eval_time_all(spec, t), space);
}

double predict_m(const FitResult& fit, int j, double t, double x) {
  return coefficient_block(fit, j).dot(eval_tensor_basis(fit.spec, t, x));
}

double predict_m_unit(const FitResult& fit, int j, double t, double y) {
  return coefficient_block(fit, j).dot(tensor_basis_unit(fit.spec, t, y));
}

}  // namespace sievelab
