#pragma once

#include "dtrkit/ingest.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dtrkit {

enum class CorrKind { Pearson, Bergsma };

struct CorrelationMatrix {
  Eigen::MatrixXd values;
  CorrKind kind = CorrKind::Pearson;
  std::vector<std::string> grid_ids;
  std::string provenance;
  // Pairs whose entry could not be computed; those entries are NaN.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> failed;
};

/// Sample Pearson correlations between panel columns. Throws DataError
/// naming the first constant column.
CorrelationMatrix pearson_corr(const Panel& panel);
Eigen::MatrixXd pearson_corr(const Eigen::MatrixXd& X);

// ---------------------------------------------------------------------------
// Bergsma's dependence coefficient
// ---------------------------------------------------------------------------

/// Unbiased: the order-4 U-statistic of the double-centered distance kernel.
/// Plugin: the V-statistic (all index tuples, repetitions allowed).
enum class BergsmaEstimator { Unbiased, Plugin };

struct BergsmaOptions {
  BergsmaEstimator estimator = BergsmaEstimator::Unbiased;
  // Largest sample length accepted per pair; the cost and memory grow with n^2.
  Eigen::Index max_n = 2000;
  // Memory budget for the packed distance blocks used by matrix evaluation.
  std::size_t block_bytes = std::size_t{256} << 20;
};

/// Estimate of kappa = E[h(X1,X2) h(Y1,Y2)] for the kernel
/// h(x1,x2) = -|x1-x2|/2 + E|x1-X|/2 + E|x2-X|/2 - E|X-X'|/2, in O(n^2).
double bergsma_kappa(std::span<const double> x, std::span<const double> y, const BergsmaOptions& opts = {});

/// kappa(x,y) / sqrt(kappa(x,x) kappa(y,y)); throws NumericalError for a
/// degenerate (constant) sample.
double bergsma_rho(std::span<const double> x, std::span<const double> y, const BergsmaOptions& opts = {});

/// kappa for all column pairs of X.
Eigen::MatrixXd bergsma_kappa_matrix(const Eigen::MatrixXd& X, const BergsmaOptions& opts = {});

/// Pairwise rho over all column pairs; degenerate columns give NaN entries
/// recorded in `failed`.
CorrelationMatrix bergsma_corr_matrix(const Panel& panel, const BergsmaOptions& opts = {});

// ---------------------------------------------------------------------------
// Spatial weights
// ---------------------------------------------------------------------------

enum class WeightKind { Lag1Adjacency, ExpDecay };
enum class Neighborhood { Rook, Queen };

std::string_view to_string(WeightKind k);

struct WeightMatrix {
  Eigen::MatrixXd w;
  WeightKind kind = WeightKind::Lag1Adjacency;
  bool row_standardized = false;
  double scale = 0.0;  // exp-decay only
  std::vector<Eigen::Index> isolated;  // rows without any neighbor
};

/// Divides every nonzero row by its sum; all-zero rows are listed in
/// `isolated`.
void row_standardize(WeightMatrix& W);

/// w_ij = 1 for lattice neighbors, zero diagonal, row-standardized.
WeightMatrix adjacency_weights(const GridSet& grids, Neighborhood nb = Neighborhood::Rook);

/// w_ij = exp(-d_ij / scale) with d_ij the Euclidean (lat, lon) distance in
/// degrees, zero diagonal, row-standardized.
WeightMatrix expdecay_weights(const GridSet& grids, double scale = 1.0);

/// Sub-matrix on `indices`, re-standardized.
WeightMatrix restrict_weights(const WeightMatrix& W, const std::vector<Eigen::Index>& indices);

// ---------------------------------------------------------------------------
// Spatial Bergsma statistic
// ---------------------------------------------------------------------------

struct SbResult {
  std::string slice;
  WeightKind weight_kind = WeightKind::Lag1Adjacency;
  double value = 0.0;
  Eigen::Index p = 0;
  std::size_t dropped_pairs = 0;
  std::string error;  // non-empty when the slice could not be evaluated

  bool ok() const { return error.empty(); }
};

/// p^{-1} sum_{i<j} (w_ij + w_ji) sim_ij, skipping pairs of zero weight and
/// pairs whose similarity is NaN (counted in dropped_pairs).
SbResult spatial_bergsma_from_similarity(const Eigen::MatrixXd& sim, const WeightMatrix& W);

SbResult spatial_bergsma(const Panel& panel, const WeightMatrix& W, const BergsmaOptions& opts = {});

/// Evaluates the statistic on the columns in `indices` only, with W
/// restricted to them and re-standardized; p is the subset size.
SbResult spatial_bergsma_subset(const Panel& panel, const WeightMatrix& W, const std::vector<Eigen::Index>& indices,
                                const BergsmaOptions& opts = {});

enum class SbSliceBy { Year, YearMonth, YearZone };

/// One result per slice in calendar (then zone) order. Failing slices carry
/// an error message and the series continues.
std::vector<SbResult> sb_series(const Panel& panel, const WeightMatrix& W, SbSliceBy by,
                                const BergsmaOptions& opts = {});

/// CSV `slice,weight_kind,value,p,dropped_pairs`.
void write_sb_series(std::ostream& os, const std::vector<SbResult>& series);

// ---------------------------------------------------------------------------
// Spatial pattern summaries
// ---------------------------------------------------------------------------

struct MaxCorrNeighbor {
  std::string grid_id;
  std::string partner_id;
  double corr = 0.0;
  double dlat = 0.0;  // partner minus grid
  double dlon = 0.0;
};

struct MaxCorrTable {
  std::vector<MaxCorrNeighbor> rows;
  std::map<double, std::size_t> dlat_hist;
  std::map<double, std::size_t> dlon_hist;
};

/// For every grid, the off-diagonal partner with the largest correlation.
/// Ties go to the smaller Euclidean distance, then the smaller grid_id.
MaxCorrTable max_corr_neighbor(const Eigen::MatrixXd& R, const GridSet& grids);

struct FieldPoint {
  double lat = 0.0;
  double lon = 0.0;
  std::string grid_id;
  double value = 0.0;
};

/// Row of R for `grid_id`, keyed by position and sorted by (lat, lon).
std::vector<FieldPoint> corr_field(const Eigen::MatrixXd& R, const std::string& grid_id, const GridSet& grids);

}  // namespace dtrkit
