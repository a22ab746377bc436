#pragma once

#include "dtrkit/association.hpp"
#include "dtrkit/rmt.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace dtrkit {

/// Run settings. Precedence: command line > config file > defaults.
struct RunConfig {
  std::string grids_path;
  std::string values_path;
  std::string enso_path;  // optional
  std::string start = "1951-01-01";
  std::string end = "2022-12-31";
  bool december_with_next_year = true;

  std::string order = "spiral";
  Eigen::Index trim_k = 12;
  Eigen::Index max_lag = 30;
  int period = 365;

  double level = 0.05;
  std::size_t null_reps = 200;
  std::uint64_t seed = 20240101;
  PermutationScheme permutation = PermutationScheme::WithinColumn;

  WeightKind weight_kind = WeightKind::Lag1Adjacency;
  Neighborhood neighborhood = Neighborhood::Rook;
  double weight_scale = 1.0;
  BergsmaEstimator estimator = BergsmaEstimator::Unbiased;

  // Also write S and T in the daily-values format.
  bool export_panels = false;

  std::string out = "out";
  std::size_t threads = 0;
  std::string log_level = "info";

  /// Sets one key; throws UsageError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);

  /// Canonical `key = value` listing of every field, sorted by key.
  std::string to_text() const;

  /// Range checks; with `require_inputs`, the grid and value files must
  /// exist.
  void validate(bool require_inputs) const;
};

/// Flat `key = value` lines; `#` starts a comment.
std::map<std::string, std::string> read_settings(const std::string& path);

RunConfig load_config(const std::string& path, const std::map<std::string, std::string>& overrides = {});

}  // namespace dtrkit
