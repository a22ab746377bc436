#include "dtrkit/rmt.hpp"

#include "dtrkit/csv.hpp"
#include "dtrkit/error.hpp"
#include "dtrkit/linalg.hpp"
#include "dtrkit/parallel.hpp"
#include "dtrkit/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

namespace dtrkit {

double esd_cdf(const Eigen::VectorXd& eigenvalues, double x) {
  if (eigenvalues.size() == 0) throw UsageError("esd: empty eigenvalue list");
  const auto count = (eigenvalues.array() <= x).count();
  return static_cast<double>(count) / static_cast<double>(eigenvalues.size());
}

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) throw UsageError("quantile of empty sequence");
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

MpSupport mp_support(double y) {
  if (!(y > 0.0) || !std::isfinite(y)) throw UsageError("mp_support: aspect ratio must be positive");
  const double s = std::sqrt(y);
  return {(1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s)};
}

double mp_density_raw(double x, double y) {
  const auto [lo, hi] = mp_support(y);
  if (x <= lo || x >= hi) return 0.0;
  return std::sqrt((hi - x) * (x - lo)) / (2.0 * std::numbers::pi);
}

double mp_density(double x, double y) {
  if (x <= 0.0) return 0.0;
  return mp_density_raw(x, y) / (x * y);
}

double mp_point_mass(double y) {
  if (!(y > 0.0)) throw UsageError("mp_point_mass: aspect ratio must be positive");
  return y > 1.0 ? 1.0 - 1.0 / y : 0.0;
}

SpectralSummary summarize_spectrum(const Eigen::VectorXd& eigenvalues, Eigen::Index n_obs, Eigen::Index p_dim) {
  if (eigenvalues.size() == 0) throw UsageError("spectral summary of empty spectrum");
  if (n_obs < 1 || p_dim < 1) throw UsageError("spectral summary needs positive dimensions");
  SpectralSummary s;
  std::vector<double> desc(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
  std::sort(desc.begin(), desc.end(), std::greater<>());
  s.eigenvalues = Eigen::Map<Eigen::VectorXd>(desc.data(), static_cast<Eigen::Index>(desc.size()));
  s.n_obs = n_obs;
  s.p_dim = p_dim;
  std::vector<double> asc(desc.rbegin(), desc.rend());
  for (int k = 0; k <= 10; ++k) s.quantiles.push_back(quantile_sorted(asc, k / 10.0));
  s.significant = significant_eigs(s);
  s.significant_count = static_cast<Eigen::Index>(s.significant.size());
  return s;
}

std::vector<Eigen::Index> significant_eigs(const SpectralSummary& summary) {
  const auto [lo, hi] = mp_support(summary.aspect());
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < summary.eigenvalues.size(); ++i) {
    const double l = summary.eigenvalues(i);
    if (l > hi || l < lo) idx.push_back(i);
  }
  return idx;
}

Denoised denoise(const Eigen::MatrixXd& R, const std::vector<Eigen::Index>& retained) {
  const auto eig = sym_eigen(R);
  Denoised out;
  out.matrix = Eigen::MatrixXd::Zero(R.rows(), R.cols());
  out.empty = retained.empty();
  for (auto j : retained) {
    if (j < 0 || j >= eig.values.size()) throw UsageError("denoise: eigen index out of range");
    out.matrix.noalias() += eig.values(j) * eig.vectors.col(j) * eig.vectors.col(j).transpose();
  }
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
  return out;
}

std::string_view to_string(NullKind k) {
  switch (k) {
    case NullKind::SingularValues: return "sv";
    case NullKind::GsvSimulated: return "gsv-sim";
    case NullKind::GsvPermuted: return "gsv-perm";
  }
  return "?";
}

PermutationScheme parse_permutation_scheme(std::string_view s) {
  if (s == "within-column") return PermutationScheme::WithinColumn;
  if (s == "independent-rows") return PermutationScheme::IndependentRows;
  if (s == "joint-rows") return PermutationScheme::JointRows;
  throw UsageError("unknown permutation scheme '" + std::string(s) + "'");
}

double order_statistic_quantile(const std::vector<double>& v, double q) {
  if (v.empty()) throw UsageError("quantile of empty pool");
  const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[k == 0 ? 0 : std::min(k, v.size()) - 1];
}

void EmpiricalNull::finalize(double lvl) {
  if (!(lvl > 0.0 && lvl < 1.0)) throw UsageError("significance level must lie in (0, 1)");
  level = lvl;
  pooled.assign(samples.data(), samples.data() + samples.size());
  std::sort(pooled.begin(), pooled.end());
  lower = order_statistic_quantile(pooled, level / 2.0);
  upper = order_statistic_quantile(pooled, 1.0 - level / 2.0);
}

double EmpiricalNull::log_lower() const { return std::log(lower); }
double EmpiricalNull::log_upper() const { return std::log(upper); }

double EmpiricalNull::fraction_outside(const Eigen::VectorXd& values) const {
  if (values.size() == 0) return 0.0;
  const auto out = (values.array() < lower || values.array() > upper).count();
  return static_cast<double>(out) / static_cast<double>(values.size());
}

void standardize_columns(Eigen::MatrixXd& m) {
  if (m.rows() < 2) throw DataError("standardize_columns: need at least two rows");
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    auto c = m.col(j);
    c.array() -= c.mean();
    const double sd = std::sqrt(c.squaredNorm() / static_cast<double>(c.size() - 1));
    if (!(sd > 0.0)) throw DataError("constant column " + std::to_string(j + 1));
    c /= sd;
  }
}

EmpiricalNull simulate_sv_null(Eigen::Index n, Eigen::Index p, std::size_t reps, std::uint64_t seed, double level,
                               bool standardize) {
  if (p < 1 || n < p) throw UsageError("simulate_sv_null: requires n >= p >= 1");
  if (reps < 1) throw UsageError("simulate_sv_null: reps must be positive");
  EmpiricalNull null;
  null.kind = NullKind::SingularValues;
  null.rows1 = n;
  null.cols = p;
  null.reps = reps;
  null.seed = seed;
  null.samples.resize(static_cast<Eigen::Index>(reps), p);
  parallel_for(reps, [&](std::size_t r) {
    RandomStream rng(seed, r);
    Eigen::MatrixXd X = rng.normal_matrix(n, p);
    if (standardize) standardize_columns(X);
    Eigen::BDCSVD<Eigen::MatrixXd> s(X);
    null.samples.row(static_cast<Eigen::Index>(r)) = s.singularValues().transpose();
  });
  null.finalize(level);
  return null;
}

EmpiricalNull simulate_gsv_null(Eigen::Index n1, Eigen::Index n2, Eigen::Index p, std::size_t reps,
                                std::uint64_t seed, double level, bool standardize) {
  if (p < 1 || std::min(n1, n2) < p) throw UsageError("simulate_gsv_null: requires min(n1, n2) >= p >= 1");
  if (reps < 1) throw UsageError("simulate_gsv_null: reps must be positive");
  EmpiricalNull null;
  null.kind = NullKind::GsvSimulated;
  null.rows1 = n1;
  null.rows2 = n2;
  null.cols = p;
  null.reps = reps;
  null.seed = seed;
  null.samples.resize(static_cast<Eigen::Index>(reps), p);
  parallel_for(reps, [&](std::size_t r) {
    RandomStream rng(seed, r);
    Eigen::MatrixXd A = rng.normal_matrix(n1, p);
    Eigen::MatrixXd B = rng.normal_matrix(n2, p);
    if (standardize) {
      standardize_columns(A);
      standardize_columns(B);
    }
    null.samples.row(static_cast<Eigen::Index>(r)) = gsv_values(A, B).transpose();
  });
  null.finalize(level);
  return null;
}

namespace {

std::vector<Eigen::Index> shuffled(Eigen::Index n, std::mt19937_64& eng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // Fisher-Yates with explicit uniform draws; std::shuffle's exact draw
  // sequence is implementation-defined.
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(idx[i - 1], idx[pick(eng)]);
  }
  return idx;
}

Eigen::MatrixXd permute(const Eigen::MatrixXd& D, PermutationScheme scheme, std::mt19937_64& eng,
                        const std::vector<Eigen::Index>* shared_rows) {
  if (scheme == PermutationScheme::WithinColumn) {
    Eigen::MatrixXd out(D.rows(), D.cols());
    for (Eigen::Index j = 0; j < D.cols(); ++j) out.col(j) = D.col(j)(shuffled(D.rows(), eng));
    return out;
  }
  if (shared_rows) return D(*shared_rows, Eigen::all);
  return D(shuffled(D.rows(), eng), Eigen::all);
}

}  // namespace

EmpiricalNull permutation_gsv_null(const Eigen::MatrixXd& D1, const Eigen::MatrixXd& D2, std::size_t reps,
                                   std::uint64_t seed, double level, PermutationScheme scheme) {
  if (D1.cols() != D2.cols() || D1.cols() < 1 || std::min(D1.rows(), D2.rows()) < D1.cols())
    throw UsageError("permutation_gsv_null: requires min(N1, N2) >= M >= 1");
  if (scheme == PermutationScheme::JointRows && D1.rows() != D2.rows())
    throw UsageError("permutation_gsv_null: joint row permutation needs equal row counts");
  if (reps < 1) throw UsageError("permutation_gsv_null: reps must be positive");
  EmpiricalNull null;
  null.kind = NullKind::GsvPermuted;
  null.rows1 = D1.rows();
  null.rows2 = D2.rows();
  null.cols = D1.cols();
  null.reps = reps;
  null.seed = seed;
  null.samples.resize(static_cast<Eigen::Index>(reps), D1.cols());
  parallel_for(reps, [&](std::size_t r) {
    RandomStream rng(seed, r);
    auto& eng = rng.engine();
    std::vector<Eigen::Index> joint;
    if (scheme == PermutationScheme::JointRows) joint = shuffled(D1.rows(), eng);
    const auto* shared = scheme == PermutationScheme::JointRows ? &joint : nullptr;
    const Eigen::MatrixXd A = permute(D1, scheme, eng, shared);
    const Eigen::MatrixXd B = permute(D2, scheme, eng, shared);
    null.samples.row(static_cast<Eigen::Index>(r)) = gsv_values(A, B).transpose();
  });
  null.finalize(level);
  return null;
}

double ks_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw UsageError("ks_distance: empty sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

void write_null_table(std::ostream& os, const EmpiricalNull& null) {
  os << "replicate,index,value\n";
  for (Eigen::Index r = 0; r < null.samples.rows(); ++r)
    for (Eigen::Index k = 0; k < null.samples.cols(); ++k)
      os << r + 1 << ',' << k + 1 << ',' << csv::format_double(null.samples(r, k)) << '\n';
}

void write_critical_values(std::ostream& os, const EmpiricalNull& null) {
  os << "level,lower,upper\n"
     << csv::format_double(null.level) << ',' << csv::format_double(null.lower) << ','
     << csv::format_double(null.upper) << '\n';
}

}  // namespace dtrkit
