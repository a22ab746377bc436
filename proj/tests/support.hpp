#pragma once

#include "dtrkit/ingest.hpp"
#include "dtrkit/random.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace dtrkit::testing {

inline Eigen::MatrixXd seeded_normal(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  return rng.normal_matrix(rows, cols);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dtrkit_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream(path) << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Full rows x cols lattice at 1 degree spacing starting at (10, 70), all in
/// `zone`.
inline GridSet lattice_grids(int rows, int cols, int zone = 1) {
  GridSet g;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      g.push_back({"g" + std::to_string(r) + "_" + std::to_string(c), 10.0 + r, 70.0 + c, zone, true});
  return g;
}

/// Panel over the given calendar window filled with `values`.
inline Panel make_panel(const Eigen::MatrixXd& values, const CalendarIndex& cal, const GridSet& grids) {
  Panel p;
  p.values = values;
  p.calendar = cal;
  p.grids = grids;
  return p;
}

}  // namespace dtrkit::testing
