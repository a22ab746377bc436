#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dtrkit {

/// F(x) = #{lambda_i <= x} / n.
double esd_cdf(const Eigen::VectorXd& eigenvalues, double x);

/// Linear-interpolation sample quantile (type 7) of an ascending sequence.
double quantile_sorted(const std::vector<double>& ascending, double q);

struct MpSupport {
  double lower = 0.0;
  double upper = 0.0;
};

/// ((1 - sqrt(y))^2, (1 + sqrt(y))^2) for aspect ratio y = p/n > 0.
MpSupport mp_support(double y);

/// The displayed edge-zero formula sqrt((y+ - x)(x - y-)) / (2 pi) on
/// [y-, y+], zero elsewhere. Its integral is y.
double mp_density_raw(double x, double y);

/// Marcenko-Pastur density of the continuous part, normalized so that its
/// mass plus mp_point_mass(y) is one: the raw formula divided by x y.
double mp_density(double x, double y);

/// Atom at zero, 1 - 1/y when y > 1 and 0 otherwise.
double mp_point_mass(double y);

struct SpectralSummary {
  Eigen::VectorXd eigenvalues;  // non-increasing
  Eigen::Index n_obs = 0;
  Eigen::Index p_dim = 0;
  std::vector<double> quantiles;  // at 0, 10, ..., 100 percent
  std::vector<Eigen::Index> significant;
  Eigen::Index significant_count = 0;

  double aspect() const { return static_cast<double>(p_dim) / static_cast<double>(n_obs); }
  double cdf(double x) const { return esd_cdf(eigenvalues, x); }
  double median() const { return quantiles[5]; }
};

/// Builds the summary, including the MP significance flags.
SpectralSummary summarize_spectrum(const Eigen::VectorXd& eigenvalues, Eigen::Index n_obs, Eigen::Index p_dim);

/// Indices (in the summary's eigenvalue order) of eigenvalues strictly
/// outside the MP support for y = p_dim / n_obs.
std::vector<Eigen::Index> significant_eigs(const SpectralSummary& summary);

struct Denoised {
  Eigen::MatrixXd matrix;
  bool empty = false;  // no component retained; matrix is zero
};

/// sum over retained j of lambda_j e_j e_j^T, with indices into the
/// non-increasing eigen order of R.
Denoised denoise(const Eigen::MatrixXd& R, const std::vector<Eigen::Index>& retained);

enum class NullKind { SingularValues, GsvSimulated, GsvPermuted };

std::string_view to_string(NullKind k);

enum class PermutationScheme {
  WithinColumn,     // each column of each matrix shuffled independently
  IndependentRows,  // rows of each matrix shuffled independently
  JointRows,        // one row shuffle shared by both matrices (needs N1 == N2)
};

PermutationScheme parse_permutation_scheme(std::string_view s);

/// Pooled replicate values with two-sided critical values. `samples` holds
/// one row per replicate in replicate order; `pooled` is sorted ascending.
struct EmpiricalNull {
  NullKind kind = NullKind::SingularValues;
  Eigen::Index rows1 = 0, rows2 = 0, cols = 0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  double level = 0.05;
  Eigen::MatrixXd samples;
  std::vector<double> pooled;
  double lower = 0.0;
  double upper = 0.0;

  /// Recomputes pooled/lower/upper from samples at the given level.
  void finalize(double level);

  /// Critical values on the log scale (meaningful for gsv pools).
  double log_lower() const;
  double log_upper() const;
  double fraction_outside(const Eigen::VectorXd& values) const;
};

/// Empirical quantile that is always a pool member: the smallest value whose
/// ECDF reaches q.
double order_statistic_quantile(const std::vector<double>& ascending, double q);

/// Centers each column and scales it to unit sample standard deviation.
/// Throws DataError on a constant column.
void standardize_columns(Eigen::MatrixXd& m);

/// With `standardize`, every simulated matrix is passed through
/// standardize_columns first, matching data that were standardized the same
/// way.
EmpiricalNull simulate_sv_null(Eigen::Index n, Eigen::Index p, std::size_t reps, std::uint64_t seed,
                               double level = 0.05, bool standardize = false);

EmpiricalNull simulate_gsv_null(Eigen::Index n1, Eigen::Index n2, Eigen::Index p, std::size_t reps,
                                std::uint64_t seed, double level = 0.05, bool standardize = false);

EmpiricalNull permutation_gsv_null(const Eigen::MatrixXd& D1, const Eigen::MatrixXd& D2, std::size_t reps,
                                   std::uint64_t seed, double level = 0.05,
                                   PermutationScheme scheme = PermutationScheme::WithinColumn);

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b| of ascending samples.
double ks_distance(const std::vector<double>& a_sorted, const std::vector<double>& b_sorted);

/// CSV `replicate,index,value` (1-based).
void write_null_table(std::ostream& os, const EmpiricalNull& null);
/// CSV `level,lower,upper`.
void write_critical_values(std::ostream& os, const EmpiricalNull& null);

}  // namespace dtrkit
