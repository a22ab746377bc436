#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dtrkit {

enum class Season : std::uint8_t { DJF = 0, MAM = 1, JJA = 2, SON = 3 };

std::string_view to_string(Season s);
Season parse_season(std::string_view s);
Season season_of_month(unsigned month);

struct DayTag {
  int year = 0;
  unsigned month = 0;  // 1..12
  unsigned day = 0;    // 1..31
  Season season = Season::DJF;
  // Year the day's season is attributed to; 0 when the day belongs to a
  // season that falls outside the window (trailing December).
  int season_year = 0;
  bool weekend = false;
  // 0..364, Feb 29 shares Feb 28's index.
  int phase365 = 0;
};

/// Day-by-day calendar over a closed date window.
class CalendarIndex {
 public:
  CalendarIndex() = default;

  /// December is attributed to the following year's DJF when
  /// `december_with_next_year` is set; otherwise to the same year's DJF.
  static CalendarIndex build(std::chrono::year_month_day start, std::chrono::year_month_day end,
                             bool december_with_next_year = true);
  static CalendarIndex from_tags(std::vector<DayTag> tags);

  std::size_t n_days() const { return tags_.size(); }
  const DayTag& operator[](std::size_t i) const { return tags_[i]; }
  const std::vector<DayTag>& tags() const { return tags_; }

  std::chrono::year_month_day date(std::size_t i) const;
  std::string iso(std::size_t i) const;
  std::vector<int> years() const;

  /// Calendar restricted to the given (ascending) day positions.
  CalendarIndex subset(const std::vector<std::size_t>& rows) const;

 private:
  std::vector<DayTag> tags_;
};

std::chrono::year_month_day parse_iso_date(std::string_view s);
std::string format_iso_date(std::chrono::year_month_day d);

}  // namespace dtrkit
