#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sievelab/estimate.hpp"

namespace sievelab {

struct TuneGrid {
  std::vector<int> c_candidates;
  std::vector<int> d_candidates;
  /// Validation length; <= 0 means floor(3 log2 n).
  int l = 0;
  /// Full block-size range [m_min, m_max] including the h0 margins on both
  /// sides; the candidates are [m_min + h0, m_max - h0].
  int m_min = 1;
  int m_max = 0;
  int h0 = 3;
  /// Worker threads for the candidate sweep; <= 0 uses the default.
  int threads = 0;

  /// c, d in {2, ..., ceil(2 ln n)}; m candidates {h0+1, ..., ceil(3 n^{1/3})}.
  static TuneGrid defaults(int n);

  int validation_length(int n) const;
  void validate(int n) const;
};

struct CdCandidate {
  int c = 0;
  int d = 0;
  double mse = 0.0;
  /// Empty when the fit succeeded.
  std::string error;
};

struct CdSelection {
  int c = 0;
  int d = 0;
  double mse = 0.0;
  /// True when the chosen c or d is the largest candidate, a hint that the
  /// grid may be too small to undersmooth.
  bool at_grid_edge = false;
  std::vector<CdCandidate> table;
};

/// Fits every (c, d) on the first n - l points (time scale n) and scores the
/// one-step-ahead forecasts of the last l points. Ties go to the smaller p,
/// then the smaller c.
CdSelection select_cd(const Sample& sample, const SieveSpec& spec_template, const TuneGrid& grid);

/// Block-sum long-run covariance
///   (1/((n-m-r+1) m)) sum_{i=r+1}^{n-m} [S_i (x) a(i/n)] [S_i (x) a(i/n)]'.
Eigen::MatrixXd omega_hat(const FitResult& fit, const Sample& sample, int m);

struct MSelection {
  int m = 0;
  /// (candidate m, se(m)) pairs.
  std::vector<std::pair<int, double>> se_table;
};

/// Minimum-volatility choice of m with Frobenius-norm se(m).
MSelection select_m(const FitResult& fit, const Sample& sample, const TuneGrid& grid);

}  // namespace sievelab
