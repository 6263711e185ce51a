#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "sievelab/mapping.hpp"

namespace sievelab {

/// A 1-D orthonormal family on [0,1], indexed from 1.
///
///   Fourier     1, sqrt2 cos 2pi t, sqrt2 sin 2pi t, sqrt2 cos 4pi t, ...
///   Legendre    sqrt(2k+1) P_k(2t-1)
///   Chebyshev1  T_k(2t-1) scaled to unit L2[0,1] norm
///   Jacobi      P_k^{(a,b)}(2t-1) scaled to unit L2[0,1] norm
///   Daubechies  2^J0 periodized scaling functions at level J0, then the
///               periodized wavelets psi_{j,k} for j = J0 .. Jn-1
///
/// Immutable; copies share the precomputed normalization data.
class BasisFamily {
 public:
  enum class Kind { Fourier, Legendre, Chebyshev1, Jacobi, Daubechies };

  /// Highest polynomial degree + 1 available for the polynomial families.
  static constexpr int kPolynomialCapacity = 128;

  static BasisFamily fourier();
  static BasisFamily legendre();
  static BasisFamily chebyshev1();
  static BasisFamily jacobi(double alpha, double beta);
  static BasisFamily daubechies(int order, int j0, int jn);

  BasisFamily() : BasisFamily(fourier()) {}

  Kind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  int wavelet_order() const noexcept { return order_; }
  int j0() const noexcept { return j0_; }
  int jn() const noexcept { return jn_; }

  /// Number of functions this family can produce.
  int capacity() const noexcept;

  /// phi_index(t), index in [1, capacity()], t in [0,1].
  double eval(int index, double t) const;

  /// The first out.size() functions at t.
  void eval_all(double t, Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::VectorXd eval_all(double t, int count) const;

  std::string name() const;

  friend bool operator==(const BasisFamily& a, const BasisFamily& b) {
    return a.kind_ == b.kind_ && a.alpha_ == b.alpha_ && a.beta_ == b.beta_ && a.order_ == b.order_ &&
           a.j0_ == b.j0_ && a.jn_ == b.jn_;
  }

 private:
  BasisFamily(Kind kind, double alpha, double beta, int order, int j0, int jn);

  Kind kind_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  int order_ = 0;
  int j0_ = 0;
  int jn_ = 0;
  std::shared_ptr<const std::vector<double>> norms_;
};

/// Parses "fourier", "legendre", "chebyshev1", "jacobi:a,b", "db<N>:<J0>,<Jn>"
/// (also "daubechies:N,J0,Jn").
BasisFamily parse_basis_family(const std::string& text);

/// Everything that defines a sieve: the two families, the covariate mapping,
/// truncation orders and the number of regression functions.
struct SieveSpec {
  BasisFamily time_family = BasisFamily::fourier();
  BasisFamily space_family = BasisFamily::fourier();
  Mapping mapping = Mapping::algebraic(1.0);
  int c = 1;
  int d = 1;
  int r = 1;
  /// Multiply the space basis by sqrt(u'(x)). Off for estimation.
  bool weighted_space = false;

  int p() const { return r * c * d; }

  /// Throws ConfigError when orders are out of range for the families.
  void validate() const;
};

/// phi_index(t) of the time family.
double eval_time_basis(const BasisFamily& family, int index, double t);

/// varphi_index(x) = phi_index(y(x)) of the mapped space family.
double eval_space_basis(const SieveSpec& spec, int index, double x);

/// (varphi_1(x), ..., varphi_d(x)).
void eval_space_all(const SieveSpec& spec, double x, Eigen::Ref<Eigen::VectorXd> out);
Eigen::VectorXd eval_space_all(const SieveSpec& spec, double x);

/// a(t) = (phi_1(t), ..., phi_c(t)).
Eigen::VectorXd eval_time_all(const SieveSpec& spec, double t);

/// b(t,x), length c*d, entry (l1-1)*d + (l2-1) holds phi_l1(t) varphi_l2(x).
Eigen::VectorXd eval_tensor_basis(const SieveSpec& spec, double t, double x);

/// Tensor product of two already evaluated factor vectors, same layout as above.
Eigen::VectorXd tensor_product(const Eigen::Ref<const Eigen::VectorXd>& time_values,
                               const Eigen::Ref<const Eigen::VectorXd>& space_values);

}  // namespace sievelab
