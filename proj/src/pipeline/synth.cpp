#include "dtrkit/synth.hpp"

#include "dtrkit/csv.hpp"
#include "dtrkit/error.hpp"
#include "dtrkit/random.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace dtrkit {

SynthData synthesize(const SynthSpec& spec) {
  if (spec.lattice_rows < 1 || spec.lattice_cols < 1 || spec.n_years < 1)
    throw UsageError("synthesize: empty lattice or window");
  SynthData d;
  for (int r = 0; r < spec.lattice_rows; ++r)
    for (int c = 0; c < spec.lattice_cols; ++c) {
      GridCell g;
      g.grid_id = "G" + std::to_string(r * spec.lattice_cols + c + 1);
      g.lat = spec.first_lat + r;
      g.lon = spec.first_lon + c;
      g.zone = 1 + (r * 6) / spec.lattice_rows;
      d.grids.push_back(std::move(g));
    }
  const int last_year = spec.first_year + spec.n_years - 1;
  const auto cal = CalendarIndex::build(std::chrono::year{spec.first_year} / 1 / 1,
                                        std::chrono::year{last_year} / 12 / 31);
  const auto n = static_cast<Eigen::Index>(cal.n_days());
  const auto p = static_cast<Eigen::Index>(d.grids.size());

  RandomStream rng(spec.seed, 0);
  const Eigen::MatrixXd shocks = rng.normal_matrix(n, p);
  const Eigen::MatrixXd factor = rng.normal_matrix(n, 1);
  const double innov = spec.noise_sd * std::sqrt(1.0 - spec.ar_coefficient * spec.ar_coefficient);

  Eigen::MatrixXd v(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& g = d.grids[static_cast<std::size_t>(j)];
    const double base = 10.0 + 0.2 * (g.lat - spec.first_lat);
    const double shift = 0.05 * (g.lon - spec.first_lon);
    double ar = shocks(0, j) * spec.noise_sd;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i > 0) ar = spec.ar_coefficient * ar + innov * shocks(i, j);
      const auto& t = cal[static_cast<std::size_t>(i)];
      const double load = spec.switch_year && t.year >= *spec.switch_year ? spec.loading_after : spec.loading_before;
      const double season = spec.seasonal_amplitude * std::sin(2 * std::numbers::pi * t.phase365 / 365.0 + shift);
      v(i, j) = base + season + ar + load * factor(i, 0);
    }
  }
  for (int k = 0; k < std::min<int>(spec.gappy_grids, static_cast<int>(p)); ++k) {
    const Eigen::Index j = p - 1 - k;
    for (Eigen::Index i = 40 + 7 * k; i < std::min<Eigen::Index>(n, 45 + 7 * k); ++i)
      v(i, j) = std::numeric_limits<double>::quiet_NaN();
  }
  d.panel.values = std::move(v);
  d.panel.calendar = cal;
  d.panel.grids = d.grids;
  for (Eigen::Index j = 0; j < p; ++j)
    d.panel.grids[static_cast<std::size_t>(j)].complete = !d.panel.values.col(j).array().isNaN().any();

  static const EnsoPhase cycle[] = {EnsoPhase::Neutral, EnsoPhase::ElNino, EnsoPhase::Neutral, EnsoPhase::LaNina};
  for (int y = spec.first_year; y <= last_year; ++y) d.enso[y] = cycle[(y - spec.first_year) % 4];
  return d;
}

void write_synth(const SynthData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "grids.csv", std::ios::binary);
    os << "grid_id,lat,lon,zone\n";
    for (const auto& g : data.grids)
      os << g.grid_id << ',' << csv::format_double(g.lat) << ',' << csv::format_double(g.lon) << ',' << g.zone << '\n';
  }
  {
    std::ofstream os(dir / "values.csv", std::ios::binary);
    os << "date,grid_id,value\n";
    const auto& p = data.panel;
    for (Eigen::Index i = 0; i < p.n_days(); ++i) {
      const auto date = p.calendar.iso(static_cast<std::size_t>(i));
      for (Eigen::Index j = 0; j < p.n_grids(); ++j)
        if (!std::isnan(p.values(i, j)))
          os << date << ',' << p.grids[static_cast<std::size_t>(j)].grid_id << ','
             << csv::format_double(p.values(i, j)) << '\n';
    }
  }
  {
    std::ofstream os(dir / "enso.csv", std::ios::binary);
    os << "year,phase\n";
    for (const auto& [y, ph] : data.enso) os << y << ',' << to_string(ph) << '\n';
  }
  {
    std::ofstream os(dir / "config.txt", std::ios::binary);
    const auto& cal = data.panel.calendar;
    os << "grids = grids.csv\nvalues = values.csv\nenso = enso.csv\n";
    os << "start = " << cal.iso(0) << "\nend = " << cal.iso(cal.n_days() - 1) << '\n';
  }
}

}  // namespace dtrkit
