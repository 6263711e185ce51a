#pragma once

#include <string>
#include <string_view>

namespace sievelab {

/// Monotone change of variables from the covariate domain onto the unit
/// interval, y(x) = (u(x; s) + 1) / 2.
///
/// The real-line maps send R onto (0,1); the half-line maps send (0, inf)
/// onto (0,1). Identity is for data already on [0,1].
class Mapping {
 public:
  enum class Kind { Identity, AlgebraicR, LogarithmicR, AlgebraicRPlus, LogarithmicRPlus };

  Mapping() = default;
  Mapping(Kind kind, double scale);

  static Mapping identity() { return {Kind::Identity, 1.0}; }
  static Mapping algebraic(double s) { return {Kind::AlgebraicR, s}; }
  static Mapping logarithmic(double s) { return {Kind::LogarithmicR, s}; }
  static Mapping algebraic_half_line(double s) { return {Kind::AlgebraicRPlus, s}; }
  static Mapping logarithmic_half_line(double s) { return {Kind::LogarithmicRPlus, s}; }

  Kind kind() const noexcept { return kind_; }
  double scale() const noexcept { return scale_; }
  Mapping with_scale(double s) const { return {kind_, s}; }

  /// y(x), strictly inside (0,1) (closed [0,1] for Identity). Inputs whose
  /// image rounds onto an endpoint are rejected with DomainError.
  double to_unit(double x) const;

  /// Inverse map x = g(2y - 1; s).
  double from_unit(double y) const;

  /// dy/dx, used by the Jacobian-weighted variant of the space basis.
  double unit_derivative(double x) const;

 private:
  Kind kind_ = Kind::AlgebraicR;
  double scale_ = 1.0;
};

std::string to_string(Mapping::Kind kind);
Mapping::Kind parse_mapping_kind(std::string_view name);

}  // namespace sievelab
