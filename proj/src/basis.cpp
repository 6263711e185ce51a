#include "sievelab/basis.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sievelab/errors.hpp"
#include "sievelab/quadrature.hpp"
#include "sievelab/wavelet.hpp"

namespace sievelab {

namespace {

void check_unit(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "basis argument " << t << " outside [0,1]";
    throw DomainError(os.str());
  }
}

// Unnormalized P_k(z) for k = 0..out.size()-1 by the three-term recurrence.
void jacobi_raw(double alpha, double beta, double z, Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index count = out.size();
  if (count == 0) return;
  out[0] = 1.0;
  if (count == 1) return;
  out[1] = (alpha + 1.0) + (alpha + beta + 2.0) * (z - 1.0) / 2.0;
  const double ab = alpha + beta;
  const double a2b2 = alpha * alpha - beta * beta;
  for (Eigen::Index n = 1; n + 1 < count; ++n) {
    const double dn = static_cast<double>(n);
    const double s = 2.0 * dn + ab;
    const double lead = 2.0 * (dn + 1.0) * (dn + ab + 1.0) * s;
    const double mid = (s + 1.0) * ((s + 2.0) * s * z + a2b2);
    const double back = 2.0 * (dn + alpha) * (dn + beta) * (s + 2.0);
    out[n + 1] = (mid * out[n] - back * out[n - 1]) / lead;
  }
}

void chebyshev_raw(double z, Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index count = out.size();
  if (count == 0) return;
  out[0] = 1.0;
  if (count == 1) return;
  out[1] = z;
  for (Eigen::Index n = 1; n + 1 < count; ++n) out[n + 1] = 2.0 * z * out[n] - out[n - 1];
}

// Reciprocal L2[0,1] norms of the raw polynomials, by Gauss-Legendre exact
// for the squared degree.
template <typename Raw>
std::shared_ptr<const std::vector<double>> numeric_norms(Raw&& raw) {
  const int cap = BasisFamily::kPolynomialCapacity;
  const QuadratureRule rule = gauss_legendre_unit(cap + 8);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(cap);
  Eigen::VectorXd vals(cap);
  for (Eigen::Index q = 0; q < rule.nodes.size(); ++q) {
    raw(2.0 * rule.nodes[q] - 1.0, vals);
    sq += rule.weights[q] * vals.cwiseAbs2();
  }
  auto norms = std::make_shared<std::vector<double>>(cap);
  for (int k = 0; k < cap; ++k) (*norms)[k] = 1.0 / std::sqrt(sq[k]);
  return norms;
}

double fourier_entry(int index, double t) {
  if (index == 1) return 1.0;
  const int freq = index / 2;
  const double arg = 2.0 * std::numbers::pi * freq * t;
  return std::numbers::sqrt2 * (index % 2 == 0 ? std::cos(arg) : std::sin(arg));
}

double wavelet_entry(const DaubechiesTable& table, int j0, int index, double t) {
  const int zero_based = index - 1;
  const int coarse = 1 << j0;
  if (zero_based < coarse) return periodized_scaling(table, j0, zero_based, t);
  // Wavelets at level j occupy slots [2^j, 2^{j+1}).
  int level = j0;
  while ((2 << level) <= zero_based) ++level;
  return periodized_wavelet(table, level, zero_based - (1 << level), t);
}

}  // namespace

BasisFamily::BasisFamily(Kind kind, double alpha, double beta, int order, int j0, int jn)
    : kind_(kind), alpha_(alpha), beta_(beta), order_(order), j0_(j0), jn_(jn) {}

BasisFamily BasisFamily::fourier() { return {Kind::Fourier, 0, 0, 0, 0, 0}; }

BasisFamily BasisFamily::legendre() { return {Kind::Legendre, 0, 0, 0, 0, 0}; }

BasisFamily BasisFamily::chebyshev1() {
  static const auto norms = numeric_norms([](double z, Eigen::Ref<Eigen::VectorXd> out) { chebyshev_raw(z, out); });
  BasisFamily family{Kind::Chebyshev1, 0, 0, 0, 0, 0};
  family.norms_ = norms;
  return family;
}

BasisFamily BasisFamily::jacobi(double alpha, double beta) {
  if (!(alpha > -1.0) || !(beta > -1.0)) throw ConfigError("Jacobi family requires alpha > -1 and beta > -1");
  BasisFamily family{Kind::Jacobi, alpha, beta, 0, 0, 0};
  family.norms_ =
      numeric_norms([alpha, beta](double z, Eigen::Ref<Eigen::VectorXd> out) { jacobi_raw(alpha, beta, z, out); });
  return family;
}

BasisFamily BasisFamily::daubechies(int order, int j0, int jn) {
  if (order < 2 || order > 10) throw ConfigError("Daubechies order N must lie in [2, 10]");
  if (j0 < 0 || jn <= j0 || jn > 20) throw ConfigError("Daubechies levels need 0 <= J0 < Jn <= 20");
  daubechies_table(order);
  return {Kind::Daubechies, 0, 0, order, j0, jn};
}

int BasisFamily::capacity() const noexcept {
  switch (kind_) {
    case Kind::Fourier: return 1 << 20;
    case Kind::Daubechies: return 1 << jn_;
    default: return kPolynomialCapacity;
  }
}

void BasisFamily::eval_all(double t, Eigen::Ref<Eigen::VectorXd> out) const {
  check_unit(t);
  const Eigen::Index count = out.size();
  if (count > capacity()) throw ConfigError("basis index beyond family capacity " + std::to_string(capacity()));
  const double z = 2.0 * t - 1.0;
  switch (kind_) {
    case Kind::Fourier:
      for (Eigen::Index k = 0; k < count; ++k) out[k] = fourier_entry(static_cast<int>(k) + 1, t);
      return;
    case Kind::Legendre:
      jacobi_raw(0.0, 0.0, z, out);
      for (Eigen::Index k = 0; k < count; ++k) out[k] *= std::sqrt(2.0 * static_cast<double>(k) + 1.0);
      return;
    case Kind::Chebyshev1:
      chebyshev_raw(z, out);
      for (Eigen::Index k = 0; k < count; ++k) out[k] *= (*norms_)[k];
      return;
    case Kind::Jacobi:
      jacobi_raw(alpha_, beta_, z, out);
      for (Eigen::Index k = 0; k < count; ++k) out[k] *= (*norms_)[k];
      return;
    case Kind::Daubechies: {
      const DaubechiesTable& table = daubechies_table(order_);
      for (Eigen::Index k = 0; k < count; ++k) out[k] = wavelet_entry(table, j0_, static_cast<int>(k) + 1, t);
      return;
    }
  }
}

Eigen::VectorXd BasisFamily::eval_all(double t, int count) const {
  Eigen::VectorXd out(count);
  eval_all(t, out);
  return out;
}

double BasisFamily::eval(int index, double t) const {
  if (index < 1 || index > capacity()) {
    throw ConfigError("basis index " + std::to_string(index) + " outside [1, " + std::to_string(capacity()) + "]");
  }
  check_unit(t);
  switch (kind_) {
    case Kind::Fourier: return fourier_entry(index, t);
    case Kind::Daubechies: return wavelet_entry(daubechies_table(order_), j0_, index, t);
    default: break;
  }
  // Polynomials: the recurrence has to run up to the requested degree anyway.
  Eigen::VectorXd all(index);
  eval_all(t, all);
  return all[index - 1];
}

std::string BasisFamily::name() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::Fourier: return "fourier";
    case Kind::Legendre: return "legendre";
    case Kind::Chebyshev1: return "chebyshev1";
    case Kind::Jacobi: os << "jacobi:" << alpha_ << "," << beta_; return os.str();
    case Kind::Daubechies: os << "db" << order_ << ":" << j0_ << "," << jn_; return os.str();
  }
  return "?";
}

namespace {

std::vector<double> parse_numbers(const std::string& text, const std::string& whole) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("malformed basis family '" + whole + "'");
    }
  }
  return values;
}

}  // namespace

BasisFamily parse_basis_family(const std::string& text) {
  if (text == "fourier") return BasisFamily::fourier();
  if (text == "legendre") return BasisFamily::legendre();
  if (text == "chebyshev1") return BasisFamily::chebyshev1();
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string tail = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "jacobi") {
    const auto v = parse_numbers(tail, text);
    if (v.size() != 2) throw ConfigError("jacobi family needs 'jacobi:alpha,beta'");
    return BasisFamily::jacobi(v[0], v[1]);
  }
  if (head == "daubechies") {
    const auto v = parse_numbers(tail, text);
    if (v.size() != 3) throw ConfigError("daubechies family needs 'daubechies:N,J0,Jn'");
    return BasisFamily::daubechies(static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]));
  }
  if (head.size() > 2 && head.compare(0, 2, "db") == 0) {
    int order = 0;
    const auto [ptr, ec] = std::from_chars(head.data() + 2, head.data() + head.size(), order);
    if (ec != std::errc() || ptr != head.data() + head.size()) throw ConfigError("malformed basis family '" + text + "'");
    int j0 = 0;
    int jn = 4;
    if (!tail.empty()) {
      const auto v = parse_numbers(tail, text);
      if (v.size() != 2) throw ConfigError("wavelet family needs 'db<N>:J0,Jn'");
      j0 = static_cast<int>(v[0]);
      jn = static_cast<int>(v[1]);
    }
    return BasisFamily::daubechies(order, j0, jn);
  }
  throw ConfigError("unknown basis family '" + text +
                    "' (expected fourier|legendre|chebyshev1|jacobi:a,b|db<N>:J0,Jn)");
}

void SieveSpec::validate() const {
  if (c < 1 || d < 1 || r < 1) throw ConfigError("sieve orders c, d and r must all be >= 1");
  if (c > time_family.capacity()) {
    throw ConfigError("c = " + std::to_string(c) + " exceeds time family capacity " +
                      std::to_string(time_family.capacity()));
  }
  if (d > space_family.capacity()) {
    throw ConfigError("d = " + std::to_string(d) + " exceeds space family capacity " +
                      std::to_string(space_family.capacity()));
  }
  const long long p = static_cast<long long>(r) * c * d;
  if (p > (1LL << 24)) throw ConfigError("sieve dimension r*c*d is too large");
}

double eval_time_basis(const BasisFamily& family, int index, double t) { return family.eval(index, t); }

double eval_space_basis(const SieveSpec& spec, int index, double x) {
  const double y = spec.mapping.to_unit(x);
  double value = spec.space_family.eval(index, y);
  if (spec.weighted_space) value *= std::sqrt(2.0 * spec.mapping.unit_derivative(x));
  return value;
}

void eval_space_all(const SieveSpec& spec, double x, Eigen::Ref<Eigen::VectorXd> out) {
  spec.space_family.eval_all(spec.mapping.to_unit(x), out);
  if (spec.weighted_space) out *= std::sqrt(2.0 * spec.mapping.unit_derivative(x));
}

Eigen::VectorXd eval_space_all(const SieveSpec& spec, double x) {
  Eigen::VectorXd out(spec.d);
  eval_space_all(spec, x, out);
  return out;
}

Eigen::VectorXd eval_time_all(const SieveSpec& spec, double t) { return spec.time_family.eval_all(t, spec.c); }

Eigen::VectorXd tensor_product(const Eigen::Ref<const Eigen::VectorXd>& time_values,
                               const Eigen::Ref<const Eigen::VectorXd>& space_values) {
  const Eigen::Index c = time_values.size();
  const Eigen::Index d = space_values.size();
  Eigen::VectorXd out(c * d);
  for (Eigen::Index l1 = 0; l1 < c; ++l1) out.segment(l1 * d, d) = time_values[l1] * space_values;
  return out;
}

Eigen::VectorXd eval_tensor_basis(const SieveSpec& spec, double t, double x) {
  return tensor_product(eval_time_all(spec, t), eval_space_all(spec, x));
}

}  // namespace sievelab
