#include "sievelab/mapping.hpp"

#include <cmath>
#include <sstream>

#include "sievelab/errors.hpp"

namespace sievelab {

namespace {

[[noreturn]] void domain_fail(const char* what, double value) {
  std::ostringstream os;
  os.precision(17);
  os << what << " (value " << value << ")";
  throw DomainError(os.str());
}

double checked_open(double y, double x) {
  if (!(y > 0.0 && y < 1.0)) domain_fail("mapping: image of x is not strictly inside (0,1)", x);
  return y;
}

}  // namespace

Mapping::Mapping(Kind kind, double scale) : kind_(kind), scale_(scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("mapping scale s must be finite and > 0");
}

double Mapping::to_unit(double x) const {
  if (!std::isfinite(x)) domain_fail("mapping: non-finite covariate", x);
  const double s = scale_;
  switch (kind_) {
    case Kind::Identity:
      if (x < 0.0 || x > 1.0) domain_fail("identity mapping: x outside [0,1]", x);
      return x;
    case Kind::AlgebraicR: {
      // y = (1 + x / sqrt(x^2 + s^2)) / 2, written without cancellation on either tail.
      const double r = std::hypot(x, s);
      const double y = x >= 0.0 ? 1.0 - s / (2.0 * r) * (s / (r + x)) : s / (2.0 * r) * (s / (r - x));
      return checked_open(y, x);
    }
    case Kind::LogarithmicR: {
      // y = (1 + tanh(x/s)) / 2 = logistic(2x/s).
      const double z = 2.0 * x / s;
      const double y = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      return checked_open(y, x);
    }
    case Kind::AlgebraicRPlus: {
      if (!(x > 0.0)) domain_fail("half-line mapping: x must be > 0", x);
      return checked_open(x / (x + s), x);
    }
    case Kind::LogarithmicRPlus: {
      if (!(x > 0.0)) domain_fail("half-line mapping: x must be > 0", x);
      return checked_open(std::tanh(x / s), x);
    }
  }
  return 0.0;
}

double Mapping::from_unit(double y) const {
  const double s = scale_;
  if (kind_ == Kind::Identity) {
    if (!(y >= 0.0 && y <= 1.0)) domain_fail("identity mapping: y outside [0,1]", y);
    return y;
  }
  if (!(y > 0.0 && y < 1.0)) domain_fail("inverse mapping: y must lie in (0,1)", y);
  switch (kind_) {
    case Kind::AlgebraicR:
      // x = s u / sqrt(1 - u^2), u = 2y - 1, 1 - u^2 = 4 y (1 - y).
      return s * (2.0 * y - 1.0) / (2.0 * std::sqrt(y * (1.0 - y)));
    case Kind::LogarithmicR:
      return 0.5 * s * (std::log(y) - std::log1p(-y));
    case Kind::AlgebraicRPlus:
      return s * y / (1.0 - y);
    case Kind::LogarithmicRPlus:
      return s * std::atanh(y);
    case Kind::Identity:
      break;
  }
  return y;
}

double Mapping::unit_derivative(double x) const {
  const double s = scale_;
  switch (kind_) {
    case Kind::Identity:
      return 1.0;
    case Kind::AlgebraicR: {
      const double r = std::hypot(x, s);
      return 0.5 * (s / r) * (s / r) / r;
    }
    case Kind::LogarithmicR: {
      const double y = to_unit(x);
      return 2.0 / s * y * (1.0 - y);
    }
    case Kind::AlgebraicRPlus:
      return s / ((x + s) * (x + s));
    case Kind::LogarithmicRPlus: {
      const double th = std::tanh(x / s);
      return (1.0 - th * th) / s;
    }
  }
  return 0.0;
}

std::string to_string(Mapping::Kind kind) {
  switch (kind) {
    case Mapping::Kind::Identity: return "identity";
    case Mapping::Kind::AlgebraicR: return "algebraic";
    case Mapping::Kind::LogarithmicR: return "logarithmic";
    case Mapping::Kind::AlgebraicRPlus: return "algebraic+";
    case Mapping::Kind::LogarithmicRPlus: return "logarithmic+";
  }
  return "?";
}

Mapping::Kind parse_mapping_kind(std::string_view name) {
  if (name == "identity") return Mapping::Kind::Identity;
  if (name == "algebraic") return Mapping::Kind::AlgebraicR;
  if (name == "logarithmic") return Mapping::Kind::LogarithmicR;
  if (name == "algebraic+") return Mapping::Kind::AlgebraicRPlus;
  if (name == "logarithmic+") return Mapping::Kind::LogarithmicRPlus;
  throw ConfigError("unknown mapping '" + std::string(name) +
                    "' (expected identity|algebraic|logarithmic|algebraic+|logarithmic+)");
}

}  // namespace sievelab
