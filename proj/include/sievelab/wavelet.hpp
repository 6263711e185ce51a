#pragma once

#include <span>
#include <vector>

namespace sievelab {

/// Tabulated Daubechies scaling function phi and mother wavelet psi for the
/// filter dbN, both supported on [0, 2N-1], sampled on the dyadic grid of
/// spacing 2^-kDepth and linearly interpolated in between.
class DaubechiesTable {
 public:
  static constexpr int kDepth = 16;
  static constexpr int kResolution = 1 << kDepth;

  explicit DaubechiesTable(int n);

  int order() const noexcept { return n_; }
  int support() const noexcept { return 2 * n_ - 1; }
  double phi(double x) const { return interpolate(phi_, x); }
  double psi(double x) const { return interpolate(psi_, x); }

  /// Grid values, entry i at x = i / kResolution.
  const std::vector<double>& phi_grid() const noexcept { return phi_; }
  const std::vector<double>& psi_grid() const noexcept { return psi_; }

 private:
  double interpolate(const std::vector<double>& values, double x) const;

  int n_;
  std::vector<double> phi_;
  std::vector<double> psi_;
};

/// Low-pass filter of dbN (taps sum to sqrt(2)); empty for unsupported N.
std::span<const double> daubechies_filter(int n);

/// Shared, lazily built table for dbN, N in [2, 10].
const DaubechiesTable& daubechies_table(int n);

/// 2^{j/2} sum_l phi(2^j (t + l) - k), the 1-periodic scaling function.
double periodized_scaling(const DaubechiesTable& table, int j, int k, double t);

/// 2^{j/2} sum_l psi(2^j (t + l) - k), the 1-periodic wavelet.
double periodized_wavelet(const DaubechiesTable& table, int j, int k, double t);

}  // namespace sievelab
