#pragma once

#include "dtrkit/ingest.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>

namespace dtrkit {

/// Synthetic daily panel on a regular lattice: seasonal cycle plus AR(1)
/// noise, with an optional common factor whose loading switches on at
/// `switch_year`.
struct SynthSpec {
  int lattice_rows = 4;
  int lattice_cols = 5;
  double first_lat = 20.0;
  double first_lon = 75.0;
  int first_year = 1951;
  int n_years = 6;
  std::uint64_t seed = 1;

  double seasonal_amplitude = 3.0;
  double ar_coefficient = 0.3;
  double noise_sd = 1.0;
  // Common-factor loading before and from `switch_year` on.
  std::optional<int> switch_year;
  double loading_before = 0.0;
  double loading_after = 1.0;
  // Number of grids that get a short gap and are dropped by select_complete.
  int gappy_grids = 1;
};

struct SynthData {
  GridSet grids;
  Panel panel;
  EnsoTable enso;
};

SynthData synthesize(const SynthSpec& spec);

/// Writes grids.csv, values.csv, enso.csv and config.txt into `dir`.
void write_synth(const SynthData& data, const std::filesystem::path& dir);

}  // namespace dtrkit
