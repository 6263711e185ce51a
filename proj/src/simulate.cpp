#include "sievelab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sievelab/errors.hpp"
#include "sievelab/rng.hpp"

namespace sievelab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double gaussian_bump(double x) { return std::exp(-0.5 * x * x); }

double logistic(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

[[noreturn]] void non_finite(const char* what, long step) {
  std::ostringstream os;
  os << what << ": non-finite value at step " << step;
  throw NumericalError(os.str());
}

}  // namespace

ErrorProcessSpec ErrorProcessSpec::builtin(Kind kind) {
  ErrorProcessSpec spec;
  spec.kind = kind;
  return spec;
}

void ErrorProcessSpec::validate() const {
  if (burn_in < 0) throw ConfigError("burn_in must be >= 0");
  if (!a1 || !a2) throw ConfigError("error process coefficient functions are not set");
  if (kind == Kind::TVTAR) {
    double worst = 0.0;
    for (int g = 0; g < 1024; ++g) {
      const double t = g / 1023.0;
      worst = std::max(worst, std::abs(a1(t)) + std::abs(a2(t)));
    }
    if (!(worst < 1.0)) throw ConfigError("TVTAR coefficients violate sup_t(|a(t)|+|b(t)|) < 1");
  }
}

ErrorProcessSpec::Kind parse_error_kind(const std::string& name) {
  if (name == "a" || name == "tvar2") return ErrorProcessSpec::Kind::TvAR2;
  if (name == "b" || name == "setar") return ErrorProcessSpec::Kind::SETAR;
  if (name == "c" || name == "bilinear") return ErrorProcessSpec::Kind::Bilinear;
  if (name == "tvtar") return ErrorProcessSpec::Kind::TVTAR;
  throw ConfigError("unknown error process '" + name + "' (expected a|b|c|tvar2|setar|bilinear|tvtar)");
}

std::string to_string(ErrorProcessSpec::Kind kind) {
  switch (kind) {
    case ErrorProcessSpec::Kind::TvAR2: return "tvar2";
    case ErrorProcessSpec::Kind::SETAR: return "setar";
    case ErrorProcessSpec::Kind::Bilinear: return "bilinear";
    case ErrorProcessSpec::Kind::TVTAR: return "tvtar";
  }
  return "?";
}

Eigen::VectorXd gen_error_path(const ErrorProcessSpec& spec, int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("series length n must be >= 1");
  spec.validate();
  const long total = static_cast<long>(spec.burn_in) + n;
  Eigen::VectorXd eta(total);
  auto engine = make_stream(seed, "innovation");
  fill_standard_normal(engine, eta);

  Eigen::VectorXd e(total);
  double prev1 = 0.0;
  double prev2 = 0.0;
  double prev_eta = 0.0;
  for (long s = 0; s < total; ++s) {
    const double t = s < spec.burn_in ? 0.0 : static_cast<double>(s - spec.burn_in + 1) / n;
    const double a1 = spec.a1(t);
    const double a2 = spec.a2(t);
    double value = 0.0;
    switch (spec.kind) {
      case ErrorProcessSpec::Kind::TvAR2:
        value = a1 * prev1 + a2 * prev2 + eta[s];
        break;
      case ErrorProcessSpec::Kind::SETAR:
        value = (prev1 >= 0.0 ? a1 : a2) * prev1 + eta[s];
        break;
      case ErrorProcessSpec::Kind::Bilinear:
        value = (a1 * prev_eta + a2) * prev1 + eta[s];
        break;
      case ErrorProcessSpec::Kind::TVTAR:
        value = a1 * std::max(prev1, 0.0) + a2 * std::max(-prev1, 0.0) + eta[s];
        break;
    }
    if (!std::isfinite(value)) non_finite("error process", s - spec.burn_in + 1);
    e[s] = value;
    prev2 = prev1;
    prev1 = value;
    prev_eta = eta[s];
  }
  return e;
}

Eigen::VectorXd gen_error_process(const ErrorProcessSpec& spec, int n, std::uint64_t seed) {
  return gen_error_path(spec, n, seed).tail(n);
}

RegressionModelSpec RegressionModelSpec::model1(double delta) {
  RegressionModelSpec spec;
  spec.delta = delta;
  spec.builtin = Builtin::Model1;
  spec.m = [delta](double t, double x) {
    return 5.0 * t + 4.0 * std::cos(kTwoPi * t * x) + delta * std::sin(kTwoPi * t * x);
  };
  spec.sigma = [](double t, double x) { return 1.5 * gaussian_bump(x) * (2.0 + std::sin(kTwoPi * t)); };
  return spec;
}

RegressionModelSpec RegressionModelSpec::model2(double delta) {
  RegressionModelSpec spec;
  spec.delta = delta;
  spec.builtin = Builtin::Model2;
  spec.m = [delta](double t, double x) { return (delta * std::sin(kTwoPi * t) + 1.0) * gaussian_bump(x); };
  spec.sigma = [](double t, double x) { return 1.5 * logistic(x) * (0.5 * std::cos(kTwoPi * t * x) + 1.0); };
  return spec;
}

RegressionModelSpec RegressionModelSpec::model3(double delta) {
  RegressionModelSpec spec;
  spec.delta = delta;
  spec.builtin = Builtin::Model3;
  spec.m = [delta](double t, double x) { return 4.0 * t * (delta * std::cos(kTwoPi * t * x) - 0.5 * gaussian_bump(x)); };
  spec.sigma = [](double t, double x) {
    if (std::abs(x) <= 1.0) return 0.7 * (1.0 + x * x);
    return t < 0.5 ? 1.4 : 2.0;
  };
  return spec;
}

RegressionModelSpec RegressionModelSpec::custom(SurfaceFn m, SurfaceFn sigma) {
  RegressionModelSpec spec;
  spec.m = std::move(m);
  spec.sigma = std::move(sigma);
  return spec;
}

void RegressionModelSpec::validate() const {
  if (!m || !sigma) throw ConfigError("regression model needs both m and sigma");
  for (int a = 0; a < 128; ++a) {
    for (int b = 0; b < 128; ++b) {
      const double t = a / 127.0;
      const double x = -10.0 + 20.0 * b / 127.0;
      if (!(sigma(t, x) >= 0.0)) throw ConfigError("sigma(t,x) must be >= 0 on [0,1] x [-10,10]");
    }
  }
}

RegressionModelSpec builtin_model(const std::string& name, double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) throw ConfigError("delta must lie in [0,1)");
  if (name == "model1") return RegressionModelSpec::model1(delta);
  if (name == "model2") return RegressionModelSpec::model2(delta);
  if (name == "model3") return RegressionModelSpec::model3(delta);
  throw ConfigError("unknown model '" + name + "' (expected model1|model2|model3)");
}

Eigen::VectorXd gen_regression_series(const RegressionModelSpec& model, const Eigen::Ref<const Eigen::VectorXd>& errors,
                                      int burn_in) {
  if (errors.size() == 0) throw ConfigError("error series is empty");
  if (burn_in < 0 || burn_in >= errors.size()) throw ConfigError("burn_in must lie in [0, len(errors))");
  if (!model.m || !model.sigma) throw ConfigError("regression model needs both m and sigma");
  const long total = errors.size();
  const long n = total - burn_in;
  Eigen::VectorXd x(n);
  double prev = 0.0;
  for (long s = 0; s < total; ++s) {
    const double t = s < burn_in ? 0.0 : static_cast<double>(s - burn_in + 1) / static_cast<double>(n);
    const double value = model.m(t, prev) + model.sigma(t, prev) * errors[s];
    if (!std::isfinite(value)) non_finite("regression recursion", s - burn_in + 1);
    if (s >= burn_in) x[s - burn_in] = value;
    prev = value;
  }
  return x;
}

Eigen::VectorXd simulate_series(const RegressionModelSpec& model, const ErrorProcessSpec& errors, int n,
                                std::uint64_t seed) {
  const Eigen::VectorXd path = gen_error_path(errors, n, seed);
  return gen_regression_series(model, path, errors.burn_in);
}

Eigen::MatrixXd gen_case2_panel(const Case2Spec& spec, int n, std::uint64_t seed) {
  const auto r = static_cast<Eigen::Index>(spec.components.size());
  if (r < 1) throw ConfigError("case 2 panel needs at least one component");
  if (static_cast<Eigen::Index>(spec.covariates.size()) != r) {
    throw ConfigError("case 2 panel needs one covariate process per component");
  }
  Eigen::MatrixXd panel(n, r + 1);
  panel.col(0).setZero();
  for (Eigen::Index j = 0; j < r; ++j) {
    const auto& comp = spec.components[j];
    if (!comp.m || !comp.sigma) throw ConfigError("case 2 component needs both m and sigma");
    panel.col(j + 1) = gen_error_process(spec.covariates[j], n, derive_seed(seed, "case2-covariate", j));
    const Eigen::VectorXd noise = gen_error_process(spec.noise, n, derive_seed(seed, "case2-noise", j));
    for (int i = 0; i < n; ++i) {
      const double t = static_cast<double>(i + 1) / n;
      const double xv = panel(i, j + 1);
      const double value = comp.m(t, xv) + comp.sigma(t, xv) * noise[i];
      if (!std::isfinite(value)) non_finite("case 2 response", i + 1);
      panel(i, 0) += value;
    }
  }
  return panel;
}

}  // namespace sievelab
