#pragma once

#include "dtrkit/association.hpp"
#include "dtrkit/config.hpp"
#include "dtrkit/ingest.hpp"
#include "dtrkit/linalg.hpp"
#include "dtrkit/rmt.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dtrkit {

struct LoadedPanel {
  Panel panel;  // complete grids only, in the configured order
  std::vector<std::string> dropped;
};

/// Grid metadata, daily values, complete-grid selection and ordering.
LoadedPanel load_panel(const RunConfig& cfg);

/// Daily-values CSV (`date,grid_id,value`); NaN cells are skipped.
void write_panel_values(std::ostream& os, const Panel& panel);

// ---------------------------------------------------------------------------
// Yearly spectra
// ---------------------------------------------------------------------------

struct YearSpectrum {
  int year = 0;
  std::optional<SpectralSummary> summary;
  std::string error;
};

struct YearlySpectralSeries {
  std::vector<YearSpectrum> years;

  /// Scalar track over years: "median", "top" or "q10" ... "q90". Failed
  /// years give NaN.
  std::vector<double> track(const std::string& name) const;
  std::vector<std::string> labels() const;
};

/// Per-year Pearson correlation matrix, eigenvalues and summary. Years that
/// fail (e.g. a constant column) carry an error and the series continues.
YearlySpectralSeries run_yearly_esd(const Panel& panel);

/// CSV `year,n_obs,p_dim,significant,median,top,q0,...,q100,error`.
void write_yearly_esd(std::ostream& os, const YearlySpectralSeries& series);
void plot_yearly_esd(std::ostream& os, const std::string& title, const YearlySpectralSeries& series);

// ---------------------------------------------------------------------------
// GSVD sweeps
// ---------------------------------------------------------------------------

enum class SweepMode { YearPairs, TransposedHalfYears };

std::string_view to_string(SweepMode m);
SweepMode parse_sweep_mode(std::string_view s);

struct GsvdPair {
  std::string label;
  Eigen::Index rows1 = 0, rows2 = 0, cols = 0;
  Eigen::VectorXd gsv;
  double log_lower = 0.0;
  double log_upper = 0.0;
  double fraction_outside = 0.0;
  std::string error;

  bool ok() const { return error.empty(); }
};

struct GsvdSweepOptions {
  std::size_t null_reps = 200;
  std::uint64_t seed = 1;
  double level = 0.05;
  // Column-standardize each block before decomposition so that blocks are
  // comparable with the standard-normal null.
  bool standardize = true;
};

struct GsvdSweep {
  SweepMode mode = SweepMode::YearPairs;
  std::vector<GsvdPair> pairs;
  std::vector<EmpiricalNull> nulls;  // one per distinct block shape
};

/// Year-pair blocks (y, y+1), or each year split at mid-year and transposed
/// to grids x days. Leap years split 1-183 / 184-366; other years 1-182 /
/// 184-365 with day 183 dropped.
GsvdSweep run_gsvd_sweep(const Panel& panel, SweepMode mode, const GsvdSweepOptions& opts = {});

/// Row positions of the two half-year blocks of a year of `n_days` days.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> half_year_rows(std::size_t first_row, std::size_t n_days);

/// CSV `pair,index,gsv,log_gsv,theta,outside` for successful pairs plus a
/// `pair,rows1,rows2,cols,log_lower,log_upper,fraction_outside,error` summary.
void write_gsvd_sweep(std::ostream& values, std::ostream& summary, const GsvdSweep& sweep);
void plot_gsvd_sweep(std::ostream& os, const std::string& title, const GsvdSweep& sweep);

// ---------------------------------------------------------------------------
// Change summary
// ---------------------------------------------------------------------------

/// Best single split of a track by pooled within-segment least squares.
/// Descriptive only.
struct ChangeSplit {
  std::string track;
  std::optional<std::size_t> split;  // index of the first point after the change
  std::string split_label = "none";
  double ratio = 0.0;  // between-segment SS / within-segment SS
  double mean_before = 0.0;
  double mean_after = 0.0;
  std::size_t n = 0;
};

/// NaN points are skipped; needs at least 8 finite points and segments of
/// at least 2.
ChangeSplit change_summary(const std::string& track, const std::vector<double>& values,
                           const std::vector<std::string>& labels);

std::vector<ChangeSplit> run_change_summary(const YearlySpectralSeries& series);
std::vector<ChangeSplit> run_change_summary(const std::vector<SbResult>& series);

void write_change_summary(std::ostream& os, const std::vector<ChangeSplit>& rows);

// ---------------------------------------------------------------------------
// ENSO stratification
// ---------------------------------------------------------------------------

struct PhaseSummary {
  EnsoPhase phase = EnsoPhase::Neutral;
  std::size_t count = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  std::vector<double> values;
};

/// Groups successful slices by the ENSO phase of their year (the leading
/// four digits of the slice label). Throws DataError for a year without a
/// phase.
std::vector<PhaseSummary> run_enso_stratification(const std::vector<SbResult>& series, const EnsoTable& enso);

void write_enso_summary(std::ostream& os, const std::vector<PhaseSummary>& groups);
void plot_enso_summary(std::ostream& os, const std::string& title, const std::vector<PhaseSummary>& groups);

// ---------------------------------------------------------------------------
// Left singular-vector strata
// ---------------------------------------------------------------------------

struct StratumRow {
  int component = 1;  // 1-based
  std::string group;
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  std::vector<double> values;
};

struct SingularVectorStrata {
  std::vector<StratumRow> by_month;         // groups "01".."12"
  std::vector<StratumRow> by_year_daytype;  // groups "1951/weekday", "1951/weekend"
};

SingularVectorStrata run_singular_vector_strata(const SvdFactorization<double>& f, const CalendarIndex& calendar,
                                                Eigen::Index components = 6);

void write_strata(std::ostream& os, const std::vector<StratumRow>& rows);
void plot_strata(std::ostream& os, const std::string& title, const std::vector<StratumRow>& rows, int component);

// ---------------------------------------------------------------------------
// Miscellaneous writers
// ---------------------------------------------------------------------------

/// CSV `index,eigenvalue,significant` followed by nothing else; MP edges go
/// to `edges` as `quantity,value`.
void write_spectrum(std::ostream& eigs, std::ostream& edges, const SpectralSummary& s);

void write_max_corr(std::ostream& os, const MaxCorrTable& t);

WeightMatrix make_weights(const GridSet& grids, const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Full run
// ---------------------------------------------------------------------------

/// Every stage on the configured inputs, written under cfg.out with a
/// manifest. Outputs depend only on the inputs and the result-affecting
/// configuration.
void run_report(const RunConfig& cfg);

}  // namespace dtrkit
