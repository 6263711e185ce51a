#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sievelab/estimate.hpp"

namespace sievelab {

struct BootstrapConfig {
  int m = 8;
  int B = 1000;
  int M = 1000;
  int grid_t = 100;
  int grid_y = 100;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  /// Worker threads; <= 0 uses default_thread_count().
  int threads = 0;

  /// Throws ConfigError unless 1 <= m <= n - r - 1, B, M >= 1, grids >= 2
  /// and 0 < alpha < 1.
  void validate(int n, int r) const;
};

/// Precomputed pieces of the multiplier statistic
///   Xi = (n-m-r)^{-1/2} m^{-1/2} sum_{i=r+1}^{n-m} [(sum_{j=i}^{i+m} x_j) (x) a(t_i)] R_i,
/// x_j = w_j e_j, stored as the (n-m-r) x p matrix G with Xi = G' R.
class BootstrapContext {
 public:
  BootstrapContext(const FitResult& fit, const Sample& sample, int m);

  int m() const noexcept { return m_; }
  int p() const noexcept { return static_cast<int>(G_.cols()); }
  int multipliers() const noexcept { return static_cast<int>(G_.rows()); }
  const Eigen::MatrixXd& loadings() const noexcept { return G_; }

  /// Draw number `index` of the stream family (seed, label).
  Eigen::VectorXd draw(std::uint64_t seed, const std::string& label, std::uint64_t index) const;

  /// Draws index first .. first+count-1 as the columns of a p x count matrix.
  Eigen::MatrixXd draw_batch(std::uint64_t seed, const std::string& label, std::uint64_t first, int count) const;

 private:
  int m_;
  Eigen::MatrixXd G_;
};

/// Block sums S_i = sum_{j=i}^{i+m} w_j e_j for i = r+1 .. n-m, one per row (r*d columns).
Eigen::MatrixXd residual_block_sums(const FitResult& fit, const Sample& sample, int m);

/// One multiplier draw Xi, reproducible from (cfg.seed, stream).
Eigen::VectorXd draw_xi(const FitResult& fit, const Sample& sample, const BootstrapConfig& cfg, std::uint64_t stream);

/// Xi' Pi^{-1} (b(t,x) embedded in block j).
double t1_draw(const Eigen::Ref<const Eigen::VectorXd>& xi, const FitResult& fit, int j, double t, double x);

/// Gram matrix of the tensor basis over the unit square in (t, y), p x p,
/// block diagonal with one c*d block per regression function. Snapped to
/// the identity when within 1e-8 of it.
Eigen::MatrixXd compute_B_matrix(const SieveSpec& spec);

/// Evaluation grid: t_a = a/(grid_t-1), y_b = (b+1/2)/grid_y, x_b = g(2 y_b - 1; s).
struct ScrGrid {
  Eigen::VectorXd t;
  Eigen::VectorXd y;
  Eigen::VectorXd x;
};
ScrGrid make_scr_grid(const SieveSpec& spec, int grid_t, int grid_y);

struct ScrResult {
  int j = 1;
  int grid_t = 0;
  int grid_y = 0;
  /// Per point, t-major: point a*grid_y + b sits at (t[a], x[b]).
  Eigen::VectorXd t;
  Eigen::VectorXd y;
  Eigen::VectorXd x;
  Eigen::VectorXd m_hat;
  Eigen::VectorXd h_hat;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double c_alpha = 0.0;
  double alpha = 0.05;
  int n = 0;
  int m = 0;
  int B = 0;
  int M = 0;
  std::uint64_t seed = 0;
  /// Sorted sup-statistic draws, kept for test inversion.
  Eigen::VectorXd sup_draws;

  Eigen::Index size() const noexcept { return m_hat.size(); }
};

/// Order statistic with 1-based index floor(count * (1 - alpha)), clamped to [1, count].
double empirical_quantile(const Eigen::Ref<const Eigen::VectorXd>& sorted, double alpha);

/// Simultaneous confidence region for m_j over the grid.
ScrResult scr(const FitResult& fit, const Sample& sample, const BootstrapConfig& cfg, int j);

struct TestResult {
  enum class Kind { ExactForm, ExactFormJoint, Stationarity, Separability };
  Kind kind = Kind::ExactForm;
  double statistic = 0.0;
  int null_draws_count = 0;
  double critical_value = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;
};

std::string to_string(TestResult::Kind kind);

/// Null hypothesis surface m0(t, x).
using NullSurface = std::function<double(double, double)>;

/// L2 test of H0: m_j = m0 with statistic n * int int (m_hat - m0)^2 dt dy.
TestResult test_exact_form(const FitResult& fit, const Sample& sample, const BootstrapConfig& cfg, int j,
                           const NullSurface& m0);

/// Joint version over all r functions.
TestResult test_exact_form_joint(const FitResult& fit, const Sample& sample, const BootstrapConfig& cfg,
                                 const std::vector<NullSurface>& m0);

/// Coefficients of m_j refitted with a time-constant basis (length d).
Eigen::VectorXd stationary_restricted_coefficients(const FitResult& fit, const Sample& sample, int j);

/// Best rank-1 approximation of the c x d coefficient matrix of m_j (length c*d).
Eigen::VectorXd separable_restricted_coefficients(const FitResult& fit, int j);

/// H0: m_j(t,x) = m_j(x), by checking whether the restricted surface leaves the SCR.
TestResult test_stationarity(const FitResult& fit, const Sample& sample, const BootstrapConfig& cfg, int j);

/// H0: m_j(t,x) = f(t) g(x), same embedding.
TestResult test_separability(const FitResult& fit, const Sample& sample, const BootstrapConfig& cfg, int j);

/// Structural test decision against an existing SCR: statistic
/// sup sqrt(n) |restricted - m_hat| / h_hat over the grid.
TestResult embed_in_scr(const ScrResult& band, const Eigen::Ref<const Eigen::VectorXd>& restricted,
                        TestResult::Kind kind);

}  // namespace sievelab
