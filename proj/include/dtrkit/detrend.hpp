#pragma once

#include "dtrkit/ingest.hpp"
#include "dtrkit/linalg.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <vector>

namespace dtrkit {

/// (sum of top-k sigma) / (sum of all sigma).
double cumulative_share(const Eigen::VectorXd& sigma, Eigen::Index k);

template <typename Scalar>
double cumulative_share(const SvdFactorization<Scalar>& f, Eigen::Index k) {
  return cumulative_share(f.sigma.template cast<double>().eval(), k);
}

/// Sample autocorrelations r_0..r_max_lag, r_0 = 1.
Eigen::VectorXd acf(std::span<const double> series, Eigen::Index max_lag);

struct TrimReport {
  Eigen::Index k = 0;
  double cumulative_share = 0.0;
  Eigen::Index max_lag = 0;
  Eigen::MatrixXd acf;  // (max_lag + 1) x columns; empty when max_lag = 0
};

struct TrimResult {
  Panel trimmed;
  TrimReport report;
  SvdFactorization<double> factors;  // of the input panel
};

/// S = D - sum_{i<=k} sigma_i u_i v_i^T. ACF curves of the trimmed columns
/// are included when max_lag > 0.
TrimResult trim_svd(const Panel& D, Eigen::Index k, Eigen::Index max_lag = 0);

/// Same as trim_svd with a precomputed factorization of D.
TrimResult trim_svd(const Panel& D, const SvdFactorization<double>& f, Eigen::Index k,
                    Eigen::Index max_lag = 0);

struct TrimSweepRow {
  Eigen::Index k = 0;
  double cumulative_share = 0.0;
  double fraction_within_band = 0.0;  // columns with max |acf(1..L)| < band
};

/// For k = 1..k_max: cumulative share and the fraction of trimmed columns
/// whose autocorrelations at lags 1..max_lag all stay below
/// band_z / sqrt(n).
std::vector<TrimSweepRow> trim_sweep(const Panel& D, Eigen::Index k_max, Eigen::Index max_lag,
                                     double band_z = 1.96);

struct Decomposition {
  Eigen::VectorXd trend;     // NaN where the moving average is undefined
  Eigen::VectorXd seasonal;
  Eigen::VectorXd residual;  // NaN where trend is undefined
  Eigen::Index first_valid = 0;
  Eigen::Index last_valid = 0;  // exclusive
};

/// Additive classical decomposition: centered moving average of width
/// `period` (half weights at the ends for even periods), seasonal means
/// re-centered to sum to zero over one period, residual = rest. `phase`
/// optionally assigns each point its seasonal slot in [0, period); the
/// default is i mod period.
Decomposition classical_decompose(std::span<const double> series, int period,
                                  std::span<const int> phase = {});

/// Column-wise classical residuals of a daily panel with period 365 and
/// Feb 29 folded onto Feb 28. Rows where the trend is undefined are dropped.
Panel build_T(const Panel& D, int period = 365);

void write_trim_report(std::ostream& shares, std::ostream& acfs, const TrimReport& report,
                       const Eigen::VectorXd& sigma, const std::vector<std::string>& grid_ids);

}  // namespace dtrkit
