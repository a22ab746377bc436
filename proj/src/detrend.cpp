#include "dtrkit/detrend.hpp"

#include "dtrkit/csv.hpp"
#include "dtrkit/error.hpp"
#include "dtrkit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace dtrkit {

double cumulative_share(const Eigen::VectorXd& sigma, Eigen::Index k) {
  if (k < 0 || k > sigma.size()) throw UsageError("cumulative_share: k out of range");
  const double total = sigma.sum();
  if (!(total > 0.0)) throw NumericalError("cumulative_share: all-zero spectrum");
  return sigma.head(k).sum() / total;
}

Eigen::VectorXd acf(std::span<const double> series, Eigen::Index max_lag) {
  const auto n = static_cast<Eigen::Index>(series.size());
  if (max_lag < 0 || n <= max_lag) throw UsageError("acf: series must be longer than max_lag");
  const Eigen::Map<const Eigen::VectorXd> x(series.data(), n);
  const Eigen::VectorXd c = x.array() - x.mean();
  const double denom = c.squaredNorm();
  if (!(denom > 0.0)) throw NumericalError("acf: constant series");
  Eigen::VectorXd r(max_lag + 1);
  for (Eigen::Index lag = 0; lag <= max_lag; ++lag)
    r(lag) = c.head(n - lag).dot(c.tail(n - lag)) / denom;
  return r;
}

TrimResult trim_svd(const Panel& D, Eigen::Index k, Eigen::Index max_lag) {
  return trim_svd(D, svd(D.values), k, max_lag);
}

TrimResult trim_svd(const Panel& D, const SvdFactorization<double>& f, Eigen::Index k, Eigen::Index max_lag) {
  if (k < 1 || k > f.sigma.size()) throw UsageError("trim_svd: k must lie in 1..min(n, p)");
  TrimResult out;
  out.trimmed = D;
  out.trimmed.values.noalias() -= f.partial_sum(k);
  out.report.k = k;
  out.report.cumulative_share = cumulative_share(f.sigma, k);
  out.report.max_lag = max_lag;
  if (max_lag > 0) {
    const auto& S = out.trimmed.values;
    out.report.acf.resize(max_lag + 1, S.cols());
    parallel_for(static_cast<std::size_t>(S.cols()), [&](std::size_t j) {
      const auto col = static_cast<Eigen::Index>(j);
      const Eigen::VectorXd c = S.col(col);
      double scale = c.cwiseAbs().maxCoeff();
      if ((c.array() - c.mean()).matrix().norm() <= 1e-12 * std::max(1.0, scale))
        out.report.acf.col(col).setConstant(std::numeric_limits<double>::quiet_NaN());
      else
        out.report.acf.col(col) = acf({c.data(), static_cast<std::size_t>(c.size())}, max_lag);
    });
  }
  out.factors = f;
  return out;
}

std::vector<TrimSweepRow> trim_sweep(const Panel& D, Eigen::Index k_max, Eigen::Index max_lag, double band_z) {
  const auto f = svd(D.values);
  if (k_max < 1 || k_max > f.sigma.size()) throw UsageError("trim_sweep: k_max out of range");
  const double band = band_z / std::sqrt(static_cast<double>(D.n_days()));
  std::vector<TrimSweepRow> rows;
  for (Eigen::Index k = 1; k <= k_max; ++k) {
    const auto t = trim_svd(D, f, k, max_lag);
    Eigen::Index within = 0;
    for (Eigen::Index j = 0; j < t.report.acf.cols(); ++j) {
      const auto lags = t.report.acf.col(j).tail(max_lag);
      if (lags.allFinite() && lags.cwiseAbs().maxCoeff() < band) ++within;
    }
    rows.push_back({k, t.report.cumulative_share,
                    static_cast<double>(within) / static_cast<double>(std::max<Eigen::Index>(1, D.n_grids()))});
  }
  return rows;
}

Decomposition classical_decompose(std::span<const double> series, int period, std::span<const int> phase) {
  if (period < 2) throw UsageError("classical_decompose: period must be at least 2");
  const auto n = static_cast<Eigen::Index>(series.size());
  if (n < 2 * period) throw UsageError("classical_decompose: series shorter than two periods");
  if (!phase.empty() && static_cast<Eigen::Index>(phase.size()) != n)
    throw UsageError("classical_decompose: phase length mismatch");
  const Eigen::Map<const Eigen::VectorXd> x(series.data(), n);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  Decomposition d;
  d.trend = Eigen::VectorXd::Constant(n, nan);
  const Eigen::Index half = period / 2;
  d.first_valid = half;
  d.last_valid = n - half;
  for (Eigen::Index t = half; t < n - half; ++t) {
    if (period % 2 == 1) {
      d.trend(t) = x.segment(t - half, period).mean();
    } else {
      const double inner = x.segment(t - half + 1, period - 1).sum();
      d.trend(t) = (inner + 0.5 * (x(t - half) + x(t + half))) / period;
    }
  }

  auto slot = [&](Eigen::Index t) {
    const int s = phase.empty() ? static_cast<int>(t % period) : phase[static_cast<std::size_t>(t)];
    if (s < 0 || s >= period) throw UsageError("classical_decompose: phase outside [0, period)");
    return s;
  };

  Eigen::VectorXd sums = Eigen::VectorXd::Zero(period);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(period);
  for (Eigen::Index t = d.first_valid; t < d.last_valid; ++t) {
    sums(slot(t)) += x(t) - d.trend(t);
    counts(slot(t)) += 1.0;
  }
  if ((counts.array() == 0.0).any()) throw UsageError("classical_decompose: a seasonal slot has no data");
  Eigen::VectorXd means = sums.cwiseQuotient(counts);
  means.array() -= means.mean();

  d.seasonal.resize(n);
  d.residual.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    d.seasonal(t) = means(slot(t));
    d.residual(t) = x(t) - d.trend(t) - d.seasonal(t);
  }
  return d;
}

Panel build_T(const Panel& D, int period) {
  const auto n = D.n_days();
  std::vector<int> phase;
  if (period == 365 && static_cast<Eigen::Index>(D.calendar.n_days()) == n) {
    for (const auto& t : D.calendar.tags()) phase.push_back(t.phase365);
  }
  Eigen::MatrixXd resid(n, D.n_grids());
  for (Eigen::Index j = 0; j < D.n_grids(); ++j) {
    const Eigen::VectorXd c = D.values.col(j);
    if ((c.array() - c.mean()).matrix().norm() == 0.0)
      throw DataError("build_T: constant series for grid " + D.grids[static_cast<std::size_t>(j)].grid_id);
  }
  parallel_for(static_cast<std::size_t>(D.n_grids()), [&](std::size_t j) {
    const auto col = static_cast<Eigen::Index>(j);
    const Eigen::VectorXd c = D.values.col(col);
    const auto dec = classical_decompose({c.data(), static_cast<std::size_t>(n)}, period, phase);
    resid.col(col) = dec.residual;
  });
  std::vector<std::size_t> rows;
  for (Eigen::Index t = period / 2; t < n - period / 2; ++t) rows.push_back(static_cast<std::size_t>(t));
  Panel withresid = D;
  withresid.values = resid;
  return select_rows(withresid, rows);
}

void write_trim_report(std::ostream& shares, std::ostream& acfs, const TrimReport& report,
                       const Eigen::VectorXd& sigma, const std::vector<std::string>& grid_ids) {
  shares << "k,cumulative_share\n";
  for (Eigen::Index k = 1; k <= sigma.size(); ++k)
    shares << k << ',' << csv::format_double(cumulative_share(sigma, k)) << '\n';
  acfs << "grid_id,lag,acf\n";
  for (Eigen::Index j = 0; j < report.acf.cols(); ++j)
    for (Eigen::Index lag = 0; lag < report.acf.rows(); ++lag)
      acfs << grid_ids[static_cast<std::size_t>(j)] << ',' << lag << ','
           << csv::format_double(report.acf(lag, j)) << '\n';
}

}  // namespace dtrkit
