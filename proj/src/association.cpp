#include "dtrkit/association.hpp"

#include "dtrkit/csv.hpp"
#include "dtrkit/error.hpp"
#include "dtrkit/gridorder.hpp"
#include "dtrkit/linalg.hpp"
#include "dtrkit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <tuple>

namespace dtrkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_constant(const Eigen::Ref<const Eigen::VectorXd>& c) { return c.maxCoeff() == c.minCoeff(); }

}  // namespace

Eigen::MatrixXd pearson_corr(const Eigen::MatrixXd& X) {
  if (X.rows() < 2) throw DataError("pearson_corr: need at least two rows");
  require_finite(X, "pearson_corr");
  Eigen::MatrixXd C = X.rowwise() - X.colwise().mean();
  for (Eigen::Index j = 0; j < C.cols(); ++j) {
    if (is_constant(X.col(j))) throw DataError("pearson_corr: constant column " + std::to_string(j));
    C.col(j).normalize();
  }
  Eigen::MatrixXd R = C.transpose() * C;
  R = (0.5 * (R + R.transpose())).cwiseMax(-1.0).cwiseMin(1.0);
  R.diagonal().setOnes();
  return R;
}

CorrelationMatrix pearson_corr(const Panel& panel) {
  for (Eigen::Index j = 0; j < panel.n_grids(); ++j)
    if (panel.n_days() >= 1 && is_constant(panel.values.col(j)))
      throw DataError("pearson_corr: constant column for grid " + panel.grids[static_cast<std::size_t>(j)].grid_id);
  CorrelationMatrix out;
  out.values = pearson_corr(panel.values);
  out.kind = CorrKind::Pearson;
  out.grid_ids = panel.grid_ids();
  out.provenance = "pearson/" + panel.order_tag;
  return out;
}

// ---------------------------------------------------------------------------
// Bergsma
// ---------------------------------------------------------------------------

namespace {

/// Pairwise absolute differences of one sample, upper triangle packed
/// row-major, with row sums and the grand total.
struct DistanceFeatures {
  Eigen::VectorXd packed;
  Eigen::VectorXd row_sums;
  double total = 0.0;
};

Eigen::Index packed_size(Eigen::Index n) { return n * (n - 1) / 2; }

void fill_distances(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> packed,
                    Eigen::Ref<Eigen::VectorXd> row_sums) {
  const Eigen::Index n = x.size();
  row_sums.setZero();
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j, ++k) {
      const double d = std::abs(x(i) - x(j));
      packed(k) = d;
      row_sums(i) += d;
      row_sums(j) += d;
    }
  }
}

DistanceFeatures features(const Eigen::Ref<const Eigen::VectorXd>& x) {
  DistanceFeatures f;
  f.packed.resize(packed_size(x.size()));
  f.row_sums.resize(x.size());
  fill_distances(x, f.packed, f.row_sums);
  f.total = f.row_sums.sum();
  return f;
}

/// Combines sum_{i != j} a_ij b_ij, sum_i a_i. b_i. and a.. b.. into kappa.
double kappa_from_sums(double cross, double rows, double totals, Eigen::Index n_, BergsmaEstimator est) {
  const double n = static_cast<double>(n_);
  if (est == BergsmaEstimator::Unbiased) {
    const double dcov = (cross - 2.0 * rows / (n - 2.0) + totals / ((n - 1.0) * (n - 2.0))) / (n * (n - 3.0));
    return dcov / 4.0;
  }
  const double dcov = cross / (n * n) - 2.0 * rows / (n * n * n) + totals / (n * n * n * n);
  return dcov / 4.0;
}

double kappa(const DistanceFeatures& a, const DistanceFeatures& b, Eigen::Index n, BergsmaEstimator est) {
  return kappa_from_sums(2.0 * a.packed.dot(b.packed), a.row_sums.dot(b.row_sums), a.total * b.total, n, est);
}

void check_sample(std::span<const double> x, std::span<const double> y, const BergsmaOptions& opts) {
  if (x.size() != y.size()) throw UsageError("bergsma: samples differ in length");
  if (x.size() < 4) throw UsageError("bergsma: need at least 4 observations");
  if (static_cast<Eigen::Index>(x.size()) > opts.max_n)
    throw UsageError("bergsma: sample length " + std::to_string(x.size()) + " exceeds max_n " +
                     std::to_string(opts.max_n));
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw NumericalError("bergsma: non-finite value");
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> s) {
  return {s.data(), static_cast<Eigen::Index>(s.size())};
}

double rho_from_kappas(double kxy, double kxx, double kyy) {
  if (!(kxx > 0.0) || !(kyy > 0.0)) return kNaN;
  return kxy / std::sqrt(kxx * kyy);
}

}  // namespace

double bergsma_kappa(std::span<const double> x, std::span<const double> y, const BergsmaOptions& opts) {
  check_sample(x, y, opts);
  const auto fx = features(as_vector(x));
  const auto fy = features(as_vector(y));
  return kappa(fx, fy, static_cast<Eigen::Index>(x.size()), opts.estimator);
}

double bergsma_rho(std::span<const double> x, std::span<const double> y, const BergsmaOptions& opts) {
  check_sample(x, y, opts);
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto fx = features(as_vector(x));
  const auto fy = features(as_vector(y));
  const double r = rho_from_kappas(kappa(fx, fy, n, opts.estimator), kappa(fx, fx, n, opts.estimator),
                                   kappa(fy, fy, n, opts.estimator));
  if (std::isnan(r)) throw NumericalError("bergsma_rho: degenerate (constant) sample");
  return r;
}

Eigen::MatrixXd bergsma_kappa_matrix(const Eigen::MatrixXd& X, const BergsmaOptions& opts) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (n < 4) throw UsageError("bergsma: need at least 4 observations");
  if (n > opts.max_n)
    throw UsageError("bergsma: sample length " + std::to_string(n) + " exceeds max_n " + std::to_string(opts.max_n));
  require_finite(X, "bergsma");
  const Eigen::Index m = packed_size(n);

  Eigen::MatrixXd row_sums(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::VectorXd scratch(m);
    fill_distances(X.col(j), scratch, row_sums.col(j));
  }
  const Eigen::VectorXd totals = row_sums.colwise().sum().transpose();
  const Eigen::MatrixXd rows = row_sums.transpose() * row_sums;

  const auto per_col = static_cast<std::size_t>(m) * sizeof(double);
  const Eigen::Index block = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(opts.block_bytes / (2 * std::max<std::size_t>(per_col, 1))), 1, p);

  auto build = [&](Eigen::Index start, Eigen::Index count) {
    Eigen::MatrixXd P(m, count);
    Eigen::VectorXd rs(n);
    for (Eigen::Index j = 0; j < count; ++j) fill_distances(X.col(start + j), P.col(j), rs);
    return P;
  };

  Eigen::MatrixXd cross(p, p);
  for (Eigen::Index bi = 0; bi < p; bi += block) {
    const Eigen::Index ni = std::min(block, p - bi);
    const Eigen::MatrixXd Pi = build(bi, ni);
    cross.block(bi, bi, ni, ni) = Pi.transpose() * Pi;
    for (Eigen::Index bj = bi + ni; bj < p; bj += block) {
      const Eigen::Index nj = std::min(block, p - bj);
      const Eigen::MatrixXd Pj = build(bj, nj);
      cross.block(bi, bj, ni, nj) = Pi.transpose() * Pj;
      cross.block(bj, bi, nj, ni) = cross.block(bi, bj, ni, nj).transpose();
    }
  }

  Eigen::MatrixXd K(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i; j < p; ++j)
      K(i, j) = K(j, i) = kappa_from_sums(2.0 * cross(i, j), rows(i, j), totals(i) * totals(j), n, opts.estimator);
  return K;
}

namespace {

CorrelationMatrix rho_matrix_from_kappa(const Eigen::MatrixXd& K) {
  const Eigen::Index p = K.rows();
  CorrelationMatrix out;
  out.kind = CorrKind::Bergsma;
  out.values.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) {
      double r = i == j ? (K(i, i) > 0.0 ? 1.0 : kNaN) : rho_from_kappas(K(i, j), K(i, i), K(j, j));
      out.values(i, j) = out.values(j, i) = r;
      if (std::isnan(r)) out.failed.emplace_back(i, j);
    }
  }
  return out;
}

}  // namespace

CorrelationMatrix bergsma_corr_matrix(const Panel& panel, const BergsmaOptions& opts) {
  auto out = rho_matrix_from_kappa(bergsma_kappa_matrix(panel.values, opts));
  out.grid_ids = panel.grid_ids();
  out.provenance = "bergsma/" + panel.order_tag;
  return out;
}

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

std::string_view to_string(WeightKind k) {
  return k == WeightKind::Lag1Adjacency ? "lag1-adjacency" : "exp-decay";
}

void row_standardize(WeightMatrix& W) {
  W.isolated.clear();
  for (Eigen::Index i = 0; i < W.w.rows(); ++i) {
    const double s = W.w.row(i).sum();
    if (s > 0.0)
      W.w.row(i) /= s;
    else
      W.isolated.push_back(i);
  }
  W.row_standardized = true;
}

WeightMatrix adjacency_weights(const GridSet& grids, Neighborhood nb) {
  const auto li = lattice_index(grids);
  const auto p = static_cast<Eigen::Index>(grids.size());
  WeightMatrix W;
  W.kind = WeightKind::Lag1Adjacency;
  W.w = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (i == j) continue;
      const int dr = std::abs(li.row[static_cast<std::size_t>(i)] - li.row[static_cast<std::size_t>(j)]);
      const int dc = std::abs(li.col[static_cast<std::size_t>(i)] - li.col[static_cast<std::size_t>(j)]);
      const bool adjacent = nb == Neighborhood::Rook ? dr + dc == 1 : std::max(dr, dc) == 1;
      if (adjacent) W.w(i, j) = 1.0;
    }
  }
  row_standardize(W);
  return W;
}

WeightMatrix expdecay_weights(const GridSet& grids, double scale) {
  if (!(scale > 0.0)) throw UsageError("expdecay_weights: scale must be positive");
  const auto p = static_cast<Eigen::Index>(grids.size());
  WeightMatrix W;
  W.kind = WeightKind::ExpDecay;
  W.scale = scale;
  W.w = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (i == j) continue;
      const auto& a = grids[static_cast<std::size_t>(i)];
      const auto& b = grids[static_cast<std::size_t>(j)];
      W.w(i, j) = std::exp(-std::hypot(a.lat - b.lat, a.lon - b.lon) / scale);
    }
  }
  row_standardize(W);
  return W;
}

WeightMatrix restrict_weights(const WeightMatrix& W, const std::vector<Eigen::Index>& indices) {
  WeightMatrix out;
  out.kind = W.kind;
  out.scale = W.scale;
  out.w = W.w(indices, indices);
  row_standardize(out);
  return out;
}

// ---------------------------------------------------------------------------
// Spatial Bergsma
// ---------------------------------------------------------------------------

SbResult spatial_bergsma_from_similarity(const Eigen::MatrixXd& sim, const WeightMatrix& W) {
  const Eigen::Index p = W.w.rows();
  if (sim.rows() != p || sim.cols() != p) throw UsageError("spatial_bergsma: dimension mismatch");
  SbResult r;
  r.weight_kind = W.kind;
  r.p = p;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const double w = W.w(i, j) + W.w(j, i);
      if (w == 0.0) continue;
      if (std::isnan(sim(i, j))) {
        ++r.dropped_pairs;
        continue;
      }
      sum += w * sim(i, j);
    }
  }
  r.value = p > 0 ? sum / static_cast<double>(p) : 0.0;
  return r;
}

SbResult spatial_bergsma(const Panel& panel, const WeightMatrix& W, const BergsmaOptions& opts) {
  const Eigen::Index p = panel.n_grids();
  const Eigen::Index n = panel.n_days();
  if (W.w.rows() != p || W.w.cols() != p) throw UsageError("spatial_bergsma: weight matrix does not match panel");
  if (n < 4) throw UsageError("bergsma: need at least 4 observations");
  if (n > opts.max_n)
    throw UsageError("bergsma: sample length " + std::to_string(n) + " exceeds max_n " + std::to_string(opts.max_n));
  require_finite(panel.values, "spatial_bergsma");

  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j)
      if (W.w(i, j) + W.w(j, i) != 0.0) pairs.emplace_back(i, j);

  Eigen::MatrixXd sim = Eigen::MatrixXd::Zero(p, p);
  if (static_cast<Eigen::Index>(pairs.size()) > p) {
    sim = rho_matrix_from_kappa(bergsma_kappa_matrix(panel.values, opts)).values;
  } else if (!pairs.empty()) {
    std::vector<DistanceFeatures> feats(static_cast<std::size_t>(p));
    parallel_for(static_cast<std::size_t>(p), [&](std::size_t j) {
      feats[j] = features(panel.values.col(static_cast<Eigen::Index>(j)));
    });
    Eigen::VectorXd self(p);
    for (Eigen::Index j = 0; j < p; ++j) self(j) = kappa(feats[static_cast<std::size_t>(j)], feats[static_cast<std::size_t>(j)], n, opts.estimator);
    parallel_for(pairs.size(), [&](std::size_t k) {
      const auto [i, j] = pairs[k];
      const double kij = kappa(feats[static_cast<std::size_t>(i)], feats[static_cast<std::size_t>(j)], n, opts.estimator);
      sim(i, j) = sim(j, i) = rho_from_kappas(kij, self(i), self(j));
    });
  }
  return spatial_bergsma_from_similarity(sim, W);
}

SbResult spatial_bergsma_subset(const Panel& panel, const WeightMatrix& W, const std::vector<Eigen::Index>& indices,
                                const BergsmaOptions& opts) {
  if (W.w.rows() != panel.n_grids()) throw UsageError("spatial_bergsma: weight matrix does not match panel");
  return spatial_bergsma(select_columns(panel, indices), restrict_weights(W, indices), opts);
}

std::vector<SbResult> sb_series(const Panel& panel, const WeightMatrix& W, SbSliceBy by, const BergsmaOptions& opts) {
  struct Slice {
    std::string label;
    std::vector<std::size_t> rows;
    std::vector<Eigen::Index> cols;
  };
  std::vector<Slice> slices;
  std::map<std::pair<int, unsigned>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < panel.calendar.n_days(); ++i) {
    const auto& t = panel.calendar[i];
    groups[{t.year, by == SbSliceBy::YearMonth ? t.month : 0u}].push_back(i);
  }
  std::map<int, std::vector<Eigen::Index>> zones;
  for (std::size_t j = 0; j < panel.grids.size(); ++j) zones[panel.grids[j].zone].push_back(static_cast<Eigen::Index>(j));
  std::vector<Eigen::Index> all(static_cast<std::size_t>(panel.n_grids()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});

  for (const auto& [key, rows] : groups) {
    std::string label = std::to_string(key.first);
    if (by == SbSliceBy::YearMonth) label += (key.second < 10 ? "-0" : "-") + std::to_string(key.second);
    if (by == SbSliceBy::YearZone) {
      for (const auto& [zone, cols] : zones) slices.push_back({label + "/zone" + std::to_string(zone), rows, cols});
    } else {
      slices.push_back({label, rows, all});
    }
  }

  std::vector<SbResult> out(slices.size());
  for (std::size_t s = 0; s < slices.size(); ++s) {
    const auto& sl = slices[s];
    try {
      const Panel rows = select_rows(panel, sl.rows);
      out[s] = sl.cols.size() == all.size() ? spatial_bergsma(rows, W, opts)
                                            : spatial_bergsma_subset(rows, W, sl.cols, opts);
    } catch (const std::exception& e) {
      out[s].weight_kind = W.kind;
      out[s].p = static_cast<Eigen::Index>(sl.cols.size());
      out[s].value = kNaN;
      out[s].error = e.what();
    }
    out[s].slice = sl.label;
  }
  return out;
}

void write_sb_series(std::ostream& os, const std::vector<SbResult>& series) {
  os << "slice,weight_kind,value,p,dropped_pairs\n";
  for (const auto& r : series)
    os << r.slice << ',' << to_string(r.weight_kind) << ',' << csv::format_double(r.value) << ',' << r.p << ','
       << r.dropped_pairs << '\n';
}

// ---------------------------------------------------------------------------
// Pattern summaries
// ---------------------------------------------------------------------------

MaxCorrTable max_corr_neighbor(const Eigen::MatrixXd& R, const GridSet& grids) {
  const auto p = static_cast<Eigen::Index>(grids.size());
  if (p < 2) throw UsageError("max_corr_neighbor: need at least two grids");
  if (R.rows() != p || R.cols() != p) throw UsageError("max_corr_neighbor: dimension mismatch");
  MaxCorrTable t;
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto& gi = grids[static_cast<std::size_t>(i)];
    Eigen::Index best = -1;
    auto dist = [&](Eigen::Index j) {
      const auto& g = grids[static_cast<std::size_t>(j)];
      return std::hypot(g.lat - gi.lat, g.lon - gi.lon);
    };
    for (Eigen::Index j = 0; j < p; ++j) {
      if (j == i || std::isnan(R(i, j))) continue;
      if (best < 0) {
        best = j;
        continue;
      }
      const auto key_j = std::make_tuple(-R(i, j), dist(j), grids[static_cast<std::size_t>(j)].grid_id);
      const auto key_b = std::make_tuple(-R(i, best), dist(best), grids[static_cast<std::size_t>(best)].grid_id);
      if (key_j < key_b) best = j;
    }
    if (best < 0) throw NumericalError("max_corr_neighbor: no finite correlation for grid " + gi.grid_id);
    const auto& gb = grids[static_cast<std::size_t>(best)];
    MaxCorrNeighbor row{gi.grid_id, gb.grid_id, R(i, best), gb.lat - gi.lat, gb.lon - gi.lon};
    ++t.dlat_hist[row.dlat];
    ++t.dlon_hist[row.dlon];
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<FieldPoint> corr_field(const Eigen::MatrixXd& R, const std::string& grid_id, const GridSet& grids) {
  const auto it = std::find_if(grids.begin(), grids.end(), [&](const GridCell& g) { return g.grid_id == grid_id; });
  if (it == grids.end()) throw DataError("corr_field: unknown grid_id " + grid_id);
  if (R.rows() != static_cast<Eigen::Index>(grids.size())) throw UsageError("corr_field: dimension mismatch");
  const auto i = static_cast<Eigen::Index>(it - grids.begin());
  std::vector<FieldPoint> field;
  for (std::size_t j = 0; j < grids.size(); ++j)
    field.push_back({grids[j].lat, grids[j].lon, grids[j].grid_id,
                     static_cast<Eigen::Index>(j) == i ? 1.0 : R(i, static_cast<Eigen::Index>(j))});
  std::sort(field.begin(), field.end(),
            [](const FieldPoint& a, const FieldPoint& b) { return std::tie(a.lat, a.lon) < std::tie(b.lat, b.lon); });
  return field;
}

}  // namespace dtrkit
