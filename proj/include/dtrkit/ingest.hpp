#pragma once

#include "dtrkit/calendar.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dtrkit {

struct GridCell {
  std::string grid_id;
  double lat = 0.0;
  double lon = 0.0;
  int zone = 1;  // climate-zone code 1..6
  bool complete = true;
};

using GridSet = std::vector<GridCell>;

/// Throws DataError on duplicate ids, duplicate coordinates or zone codes
/// outside 1..6.
void validate_grids(const GridSet& grids);

/// Day x grid matrix. Missing cells are stored as NaN; a panel returned by
/// select_complete has none.
struct Panel {
  Eigen::MatrixXd values;
  CalendarIndex calendar;
  GridSet grids;
  std::string order_tag = "input";

  Eigen::Index n_days() const { return values.rows(); }
  Eigen::Index n_grids() const { return values.cols(); }
  std::vector<std::string> grid_ids() const;
  Eigen::Index missing_count() const;
};

enum class EnsoPhase { ElNino, LaNina, Neutral };

std::string_view to_string(EnsoPhase p);
EnsoPhase parse_enso_phase(std::string_view s);

using EnsoTable = std::map<int, EnsoPhase>;

CalendarIndex build_calendar(std::string_view start_date, std::string_view end_date,
                             bool december_with_next_year = true);

GridSet load_grid_metadata(const std::string& path);

Panel load_daily_values(const std::string& path, const GridSet& grids, const CalendarIndex& calendar);

struct CompleteSelection {
  Panel panel;
  std::vector<std::string> dropped;
  bool empty() const { return panel.n_grids() == 0; }
};

CompleteSelection select_complete(const Panel& raw);

/// Row or column selector for slice(). Exactly one field should be set;
/// setting several intersects them.
struct Selector {
  std::optional<int> year;
  std::optional<unsigned> month;
  std::optional<Season> season;
  std::optional<int> zone;

  static Selector of_year(int y) {
    Selector s;
    s.year = y;
    return s;
  }
  static Selector of_month(unsigned m) {
    Selector s;
    s.month = m;
    return s;
  }
  static Selector of_season(Season season) {
    Selector s;
    s.season = season;
    return s;
  }
  static Selector of_zone(int z) {
    Selector s;
    s.zone = z;
    return s;
  }
};

/// Temporal selectors restrict rows (season matches the calendar tag of the
/// day, regardless of season-year attribution); the zone selector restricts
/// columns. Throws DataError on an empty selection.
Panel slice(const Panel& panel, const Selector& selector);

Panel select_rows(const Panel& panel, const std::vector<std::size_t>& rows);
Panel select_columns(const Panel& panel, const std::vector<Eigen::Index>& cols);

enum class GroupBy { Year, YearSeason, YearZone, YearSeasonZone };

struct GroupMean {
  int year = 0;
  std::optional<Season> season;
  std::optional<int> zone;
  std::string grid_id;
  double mean = 0.0;
  std::size_t n = 0;
};

/// One mean per (group, grid), over the non-missing days of the group.
/// Seasonal groups use the calendar's season-year; days without one are
/// skipped.
std::vector<GroupMean> group_average(const Panel& panel, GroupBy by);

EnsoTable load_enso(const std::string& path, int first_year, int last_year);

}  // namespace dtrkit
