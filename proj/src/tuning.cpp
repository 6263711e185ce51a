#include "sievelab/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sievelab/errors.hpp"
#include "sievelab/inference.hpp"
#include "sievelab/parallel.hpp"

namespace sievelab {

TuneGrid TuneGrid::defaults(int n) {
  TuneGrid grid;
  const int top = std::max(2, static_cast<int>(std::ceil(2.0 * std::log(static_cast<double>(n)))));
  for (int v = 2; v <= top; ++v) {
    grid.c_candidates.push_back(v);
    grid.d_candidates.push_back(v);
  }
  const int upper = std::max(grid.h0 + 1, static_cast<int>(std::ceil(3.0 * std::cbrt(static_cast<double>(n)))));
  grid.m_min = 1;
  grid.m_max = upper + grid.h0;
  return grid;
}

int TuneGrid::validation_length(int n) const {
  return l > 0 ? l : static_cast<int>(std::floor(3.0 * std::log2(static_cast<double>(n))));
}

void TuneGrid::validate(int n) const {
  if (c_candidates.empty() || d_candidates.empty()) throw ConfigError("c and d candidate lists must be nonempty");
  if (!std::is_sorted(c_candidates.begin(), c_candidates.end()) ||
      !std::is_sorted(d_candidates.begin(), d_candidates.end())) {
    throw ConfigError("c and d candidate lists must be sorted ascending");
  }
  if (c_candidates.front() < 1 || d_candidates.front() < 1) throw ConfigError("c and d candidates must be >= 1");
  const int len = validation_length(n);
  if (len < 1 || 2 * len >= n) throw ConfigError("validation length l must satisfy 1 <= l < n/2");
  if (h0 < 1) throw ConfigError("h0 must be >= 1");
  if (m_min < 1) throw ConfigError("m range must start at >= 1");
}

CdSelection select_cd(const Sample& sample, const SieveSpec& spec_template, const TuneGrid& grid) {
  const int n = sample.n();
  grid.validate(n);
  const int len = grid.validation_length(n);
  const Sample train = sample.head(n - len);

  std::vector<CdCandidate> table;
  for (int c : grid.c_candidates) {
    for (int d : grid.d_candidates) table.push_back({c, d, 0.0, {}});
  }
  parallel_for(table.size(), grid.threads, [&](std::size_t idx) {
    CdCandidate& cand = table[idx];
    SieveSpec spec = spec_template;
    spec.c = cand.c;
    spec.d = cand.d;
    try {
      const FitResult fit = fit_sieve(train, spec, n);
      double sse = 0.0;
      for (int k = n - len + 1; k <= n; ++k) {
        const double forecast = design_row(sample, spec, k, n).dot(fit.beta);
        const double err = sample.y[k - 1] - forecast;
        sse += err * err;
      }
      cand.mse = sse / len;
      if (!std::isfinite(cand.mse)) cand.error = "non-finite validation MSE";
    } catch (const Error& e) {
      cand.error = e.what();
    }
  });

  const CdCandidate* best = nullptr;
  auto better = [&](const CdCandidate& a, const CdCandidate& b) {
    if (a.mse != b.mse) return a.mse < b.mse;
    const long pa = static_cast<long>(a.c) * a.d;
    const long pb = static_cast<long>(b.c) * b.d;
    if (pa != pb) return pa < pb;
    return a.c < b.c;
  };
  for (const auto& cand : table) {
    if (!cand.error.empty()) continue;
    if (best == nullptr || better(cand, *best)) best = &cand;
  }
  if (best == nullptr) {
    std::string msg = "tuning failed: every (c,d) candidate errored";
    for (const auto& cand : table) {
      msg += "\n  (c=" + std::to_string(cand.c) + ", d=" + std::to_string(cand.d) + "): " + cand.error;
    }
    throw NumericalError(msg);
  }
  CdSelection out;
  out.c = best->c;
  out.d = best->d;
  out.mse = best->mse;
  out.at_grid_edge = out.c == grid.c_candidates.back() || out.d == grid.d_candidates.back();
  out.table = std::move(table);
  return out;
}

Eigen::MatrixXd omega_hat(const FitResult& fit, const Sample& sample, int m) {
  const BootstrapContext ctx(fit, sample, m);
  const Eigen::MatrixXd& g = ctx.loadings();
  // Loadings carry 1/sqrt((n-m-r) m); rescale to the (n-m-r+1) m normalization.
  const double count = static_cast<double>(g.rows());
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(g.cols(), g.cols());
  omega.selfadjointView<Eigen::Lower>().rankUpdate(g.transpose(), count / (count + 1.0));
  return omega.selfadjointView<Eigen::Lower>();
}

MSelection select_m(const FitResult& fit, const Sample& sample, const TuneGrid& grid) {
  const int h0 = grid.h0;
  if (h0 < 1) throw ConfigError("h0 must be >= 1");
  const int lo = grid.m_min;
  const int hi = grid.m_max;
  if (lo < 1) throw ConfigError("m range must start at >= 1");
  if (hi - lo + 1 < 2 * h0 + 1) throw ConfigError("m range must contain at least 2*h0 + 1 values");
  if (hi > fit.n - fit.spec.r - 1) throw ConfigError("m range exceeds n - r - 1");

  std::vector<Eigen::MatrixXd> omegas(hi - lo + 1);
  parallel_for(omegas.size(), grid.threads,
               [&](std::size_t k) { omegas[k] = omega_hat(fit, sample, lo + static_cast<int>(k)); });

  MSelection out;
  double best = std::numeric_limits<double>::infinity();
  for (int m = lo + h0; m <= hi - h0; ++m) {
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(omegas[0].rows(), omegas[0].cols());
    for (int k = -h0; k <= h0; ++k) mean += omegas[m + k - lo];
    mean /= (2.0 * h0 + 1.0);
    double acc = 0.0;
    for (int k = -h0; k <= h0; ++k) acc += (mean - omegas[m + k - lo]).squaredNorm();
    const double se = std::sqrt(acc / (2.0 * h0));
    out.se_table.emplace_back(m, se);
    if (se < best) {
      best = se;
      out.m = m;
    }
  }
  return out;
}

}  // namespace sievelab
