#include "sievelab/wavelet.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <memory>
#include <mutex>

#include "sievelab/detail/daubechies_filters.hpp"
#include "sievelab/errors.hpp"

namespace sievelab {

namespace {

// phi at the integers 0..2N-1 is the eigenvector of A_{a,b} = sqrt(2) h_{2a-b}
// for eigenvalue 1, normalized so the values sum to one.
Eigen::VectorXd scaling_at_integers(std::span<const double> h) {
  const int len = static_cast<int>(h.size());
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(len + 1, len);
  for (int a = 0; a < len; ++a) {
    for (int b = 0; b < len; ++b) {
      const int idx = 2 * a - b;
      if (idx >= 0 && idx < len) system(a, b) = std::sqrt(2.0) * h[idx];
    }
    system(a, a) -= 1.0;
  }
  system.row(len).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(len + 1);
  rhs[len] = 1.0;
  return system.colPivHouseholderQr().solve(rhs);
}

}  // namespace

DaubechiesTable::DaubechiesTable(int n) : n_(n) {
  const auto h = daubechies_filter(n);
  if (h.empty()) throw ConfigError("Daubechies order N must lie in [2, 10]");
  const int taps = static_cast<int>(h.size());
  const int span = support();
  const int points = span * kResolution + 1;
  phi_.assign(points, 0.0);

  const Eigen::VectorXd base = scaling_at_integers(h);
  for (int i = 0; i <= span; ++i) phi_[i * kResolution] = base[i];

  // Two-scale refinement: values at odd multiples of 2^-level come from the
  // previous level through phi(x) = sqrt(2) sum_k h_k phi(2x - k).
  for (int level = 1; level <= kDepth; ++level) {
    const int stride = kResolution >> level;
    for (int i = stride; i < points - 1; i += 2 * stride) {
      double acc = 0.0;
      for (int k = 0; k < taps; ++k) {
        const int arg = 2 * i - k * kResolution;
        if (arg >= 0 && arg < points) acc += h[k] * phi_[arg];
      }
      phi_[i] = std::sqrt(2.0) * acc;
    }
  }

  psi_.assign(points, 0.0);
  for (int i = 0; i < points; ++i) {
    double acc = 0.0;
    for (int k = 0; k < taps; ++k) {
      const int arg = 2 * i - k * kResolution;
      if (arg < 0 || arg >= points) continue;
      const double g = (k % 2 == 0 ? 1.0 : -1.0) * h[taps - 1 - k];
      acc += g * phi_[arg];
    }
    psi_[i] = std::sqrt(2.0) * acc;
  }
}

double DaubechiesTable::interpolate(const std::vector<double>& values, double x) const {
  if (!(x > 0.0) || !(x < support())) return 0.0;
  const double pos = x * kResolution;
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= values.size()) return values.back();
  return values[i] + frac * (values[i + 1] - values[i]);
}

std::span<const double> daubechies_filter(int n) { return detail::daubechies_filter(n); }

const DaubechiesTable& daubechies_table(int n) {
  if (n < 2 || n > 10) throw ConfigError("Daubechies order N must lie in [2, 10]");
  static std::array<std::once_flag, 11> flags;
  static std::array<std::unique_ptr<DaubechiesTable>, 11> tables;
  std::call_once(flags[n], [n] { tables[n] = std::make_unique<DaubechiesTable>(n); });
  return *tables[n];
}

namespace {

template <typename F>
double periodize(const DaubechiesTable& table, int j, int k, double t, F&& f) {
  const double scale = std::ldexp(1.0, j);
  const double u = scale * t - k;
  const int span = table.support();
  const long lo = static_cast<long>(std::ceil(-u / scale));
  const long hi = static_cast<long>(std::floor((span - u) / scale));
  double acc = 0.0;
  for (long l = lo; l <= hi; ++l) acc += f(scale * static_cast<double>(l) + u);
  return std::sqrt(scale) * acc;
}

}  // namespace

double periodized_scaling(const DaubechiesTable& table, int j, int k, double t) {
  return periodize(table, j, k, t, [&](double x) { return table.phi(x); });
}

double periodized_wavelet(const DaubechiesTable& table, int j, int k, double t) {
  return periodize(table, j, k, t, [&](double x) { return table.psi(x); });
}

}  // namespace sievelab
