#include "dtrkit/ingest.hpp"

#include "dtrkit/csv.hpp"
#include "dtrkit/error.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>
#include <utility>

namespace dtrkit {

namespace chr = std::chrono;

std::vector<std::string> Panel::grid_ids() const {
  std::vector<std::string> ids;
  ids.reserve(grids.size());
  for (const auto& g : grids) ids.push_back(g.grid_id);
  return ids;
}

Eigen::Index Panel::missing_count() const { return values.array().isNaN().count(); }

std::string_view to_string(EnsoPhase p) {
  switch (p) {
    case EnsoPhase::ElNino: return "ElNino";
    case EnsoPhase::LaNina: return "LaNina";
    case EnsoPhase::Neutral: return "Neutral";
  }
  return "?";
}

EnsoPhase parse_enso_phase(std::string_view s) {
  if (s == "ElNino") return EnsoPhase::ElNino;
  if (s == "LaNina") return EnsoPhase::LaNina;
  if (s == "Neutral") return EnsoPhase::Neutral;
  throw DataError("unknown ENSO phase '" + std::string(s) + "'");
}

CalendarIndex build_calendar(std::string_view start_date, std::string_view end_date,
                             bool december_with_next_year) {
  return CalendarIndex::build(parse_iso_date(start_date), parse_iso_date(end_date),
                              december_with_next_year);
}

void validate_grids(const GridSet& grids) {
  std::set<std::string> ids;
  std::set<std::pair<double, double>> coords;
  for (const auto& g : grids) {
    if (g.zone < 1 || g.zone > 6)
      throw DataError("grid " + g.grid_id + ": zone " + std::to_string(g.zone) + " outside 1..6");
    if (!ids.insert(g.grid_id).second) throw DataError("duplicate grid_id " + g.grid_id);
    if (!coords.insert({g.lat, g.lon}).second)
      throw DataError("duplicate coordinates for grid " + g.grid_id);
  }
}

GridSet load_grid_metadata(const std::string& path) {
  const auto rows = csv::read_table(path, {"grid_id", "lat", "lon", "zone"});
  if (rows.empty()) throw DataError(path + ": no grid rows");
  GridSet grids;
  grids.reserve(rows.size());
  for (const auto& r : rows) {
    if (r[0].empty()) throw DataError(path + ": empty grid_id");
    grids.push_back({r[0], csv::parse_double(r[1]), csv::parse_double(r[2]),
                     static_cast<int>(csv::parse_int(r[3])), true});
  }
  validate_grids(grids);
  return grids;
}

Panel load_daily_values(const std::string& path, const GridSet& grids, const CalendarIndex& calendar) {
  std::unordered_map<std::string, Eigen::Index> col_of;
  for (std::size_t j = 0; j < grids.size(); ++j) col_of.emplace(grids[j].grid_id, static_cast<Eigen::Index>(j));
  std::unordered_map<int, Eigen::Index> row_of;
  for (std::size_t i = 0; i < calendar.n_days(); ++i)
    row_of.emplace(static_cast<int>(chr::sys_days{calendar.date(i)}.time_since_epoch().count()),
                   static_cast<Eigen::Index>(i));

  Panel p;
  p.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(calendar.n_days()),
                                       static_cast<Eigen::Index>(grids.size()),
                                       std::numeric_limits<double>::quiet_NaN());
  p.calendar = calendar;
  p.grids = grids;

  const auto rows = csv::read_table(path, {"date", "grid_id", "value"});
  for (const auto& r : rows) {
    const auto day = chr::sys_days{parse_iso_date(r[0])}.time_since_epoch().count();
    const auto ri = row_of.find(static_cast<int>(day));
    if (ri == row_of.end()) throw DataError(path + ": date " + r[0] + " outside the study window");
    const auto ci = col_of.find(r[1]);
    if (ci == col_of.end()) throw DataError(path + ": unknown grid_id " + r[1]);
    double& cell = p.values(ri->second, ci->second);
    if (!std::isnan(cell)) throw DataError(path + ": duplicate row for " + r[0] + "," + r[1]);
    cell = csv::parse_double(r[2]);
  }
  for (Eigen::Index j = 0; j < p.values.cols(); ++j)
    p.grids[static_cast<std::size_t>(j)].complete = !p.values.col(j).array().isNaN().any();
  return p;
}

CompleteSelection select_complete(const Panel& raw) {
  std::vector<Eigen::Index> keep;
  CompleteSelection out;
  for (Eigen::Index j = 0; j < raw.values.cols(); ++j) {
    if (raw.values.col(j).array().isNaN().any())
      out.dropped.push_back(raw.grids[static_cast<std::size_t>(j)].grid_id);
    else
      keep.push_back(j);
  }
  out.panel = select_columns(raw, keep);
  for (auto& g : out.panel.grids) g.complete = true;
  return out;
}

Panel select_rows(const Panel& panel, const std::vector<std::size_t>& rows) {
  Panel out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), panel.values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.values.row(static_cast<Eigen::Index>(i)) = panel.values.row(static_cast<Eigen::Index>(rows[i]));
  out.calendar = panel.calendar.subset(rows);
  out.grids = panel.grids;
  out.order_tag = panel.order_tag;
  return out;
}

Panel select_columns(const Panel& panel, const std::vector<Eigen::Index>& cols) {
  Panel out;
  out.values = panel.values(Eigen::all, cols);
  out.calendar = panel.calendar;
  out.grids.reserve(cols.size());
  for (auto c : cols) out.grids.push_back(panel.grids.at(static_cast<std::size_t>(c)));
  out.order_tag = panel.order_tag;
  return out;
}

Panel slice(const Panel& panel, const Selector& sel) {
  if (sel.month && (*sel.month < 1 || *sel.month > 12))
    throw UsageError("month selector outside 1..12");
  if (sel.zone && (*sel.zone < 1 || *sel.zone > 6)) throw UsageError("zone selector outside 1..6");

  Panel out = panel;
  if (sel.year || sel.month || sel.season) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < panel.calendar.n_days(); ++i) {
      const auto& t = panel.calendar[i];
      if (sel.year && t.year != *sel.year) continue;
      if (sel.month && t.month != *sel.month) continue;
      if (sel.season && t.season != *sel.season) continue;
      rows.push_back(i);
    }
    if (rows.empty()) throw DataError("temporal selection is empty");
    out = select_rows(panel, rows);
  }
  if (sel.zone) {
    std::vector<Eigen::Index> cols;
    for (std::size_t j = 0; j < out.grids.size(); ++j)
      if (out.grids[j].zone == *sel.zone) cols.push_back(static_cast<Eigen::Index>(j));
    if (cols.empty()) throw DataError("no grids in zone " + std::to_string(*sel.zone));
    out = select_columns(out, cols);
  }
  return out;
}

std::vector<GroupMean> group_average(const Panel& panel, GroupBy by) {
  const bool seasonal = by == GroupBy::YearSeason || by == GroupBy::YearSeasonZone;
  const bool zonal = by == GroupBy::YearZone || by == GroupBy::YearSeasonZone;

  // Ordered group keys -> day rows.
  std::map<std::pair<int, int>, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < panel.calendar.n_days(); ++i) {
    const auto& t = panel.calendar[i];
    if (seasonal) {
      if (t.season_year == 0) continue;
      groups[{t.season_year, static_cast<int>(t.season)}].push_back(static_cast<Eigen::Index>(i));
    } else {
      groups[{t.year, -1}].push_back(static_cast<Eigen::Index>(i));
    }
  }

  std::vector<Eigen::Index> col_order(static_cast<std::size_t>(panel.n_grids()));
  for (std::size_t j = 0; j < col_order.size(); ++j) col_order[j] = static_cast<Eigen::Index>(j);
  if (zonal)
    std::stable_sort(col_order.begin(), col_order.end(), [&](auto a, auto b) {
      return panel.grids[static_cast<std::size_t>(a)].zone < panel.grids[static_cast<std::size_t>(b)].zone;
    });

  std::vector<GroupMean> out;
  out.reserve(groups.size() * col_order.size());
  for (const auto& [key, rows] : groups) {
    for (auto j : col_order) {
      const auto col = panel.values(rows, j);
      double sum = 0.0;
      std::size_t n = 0;
      for (Eigen::Index k = 0; k < col.size(); ++k) {
        if (std::isnan(col(k))) continue;
        sum += col(k);
        ++n;
      }
      GroupMean g;
      g.year = key.first;
      if (seasonal) g.season = static_cast<Season>(key.second);
      const auto& cell = panel.grids[static_cast<std::size_t>(j)];
      if (zonal) g.zone = cell.zone;
      g.grid_id = cell.grid_id;
      g.n = n;
      g.mean = n > 0 ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
      out.push_back(std::move(g));
    }
  }
  return out;
}

EnsoTable load_enso(const std::string& path, int first_year, int last_year) {
  const auto rows = csv::read_table(path, {"year", "phase"});
  EnsoTable table;
  for (const auto& r : rows) {
    const int y = static_cast<int>(csv::parse_int(r[0]));
    if (!table.emplace(y, parse_enso_phase(r[1])).second)
      throw DataError(path + ": duplicate year " + r[0]);
  }
  for (int y = first_year; y <= last_year; ++y)
    if (!table.contains(y)) throw DataError(path + ": missing ENSO phase for year " + std::to_string(y));
  return table;
}

}  // namespace dtrkit
