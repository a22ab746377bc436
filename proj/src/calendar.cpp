#include "dtrkit/calendar.hpp"

#include "dtrkit/error.hpp"

#include <charconv>
#include <cstdio>

namespace dtrkit {

namespace chr = std::chrono;

std::string_view to_string(Season s) {
  switch (s) {
    case Season::DJF: return "DJF";
    case Season::MAM: return "MAM";
    case Season::JJA: return "JJA";
    case Season::SON: return "SON";
  }
  return "?";
}

Season parse_season(std::string_view s) {
  if (s == "DJF") return Season::DJF;
  if (s == "MAM") return Season::MAM;
  if (s == "JJA") return Season::JJA;
  if (s == "SON") return Season::SON;
  throw UsageError("unknown season '" + std::string(s) + "'");
}

Season season_of_month(unsigned month) {
  switch (month) {
    case 12: case 1: case 2: return Season::DJF;
    case 3: case 4: case 5: return Season::MAM;
    case 6: case 7: case 8: return Season::JJA;
    default: return Season::SON;
  }
}

chr::year_month_day parse_iso_date(std::string_view s) {
  auto bad = [&] { return DataError("invalid date '" + std::string(s) + "'"); };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw bad();
  int y = 0;
  unsigned m = 0, d = 0;
  auto num = [&](std::size_t off, std::size_t len, auto& out) {
    auto [ptr, ec] = std::from_chars(s.data() + off, s.data() + off + len, out);
    if (ec != std::errc() || ptr != s.data() + off + len) throw bad();
  };
  num(0, 4, y);
  num(5, 2, m);
  num(8, 2, d);
  const chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
  if (!ymd.ok()) throw bad();
  return ymd;
}

std::string format_iso_date(chr::year_month_day d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

namespace {

int phase_index(chr::year_month_day d) {
  // Day of year in a non-leap reference year; Feb 29 folds onto Feb 28.
  const chr::year ref{2001};
  unsigned day = static_cast<unsigned>(d.day());
  if (d.month() == chr::February && day == 29) day = 28;
  const chr::sys_days here{ref / d.month() / chr::day{day}};
  const chr::sys_days jan1{ref / chr::January / 1};
  return static_cast<int>((here - jan1).count());
}

}  // namespace

CalendarIndex CalendarIndex::build(chr::year_month_day start, chr::year_month_day end,
                                   bool december_with_next_year) {
  if (!start.ok() || !end.ok()) throw DataError("invalid calendar date");
  const chr::sys_days first{start};
  const chr::sys_days last{end};
  if (last < first) throw DataError("calendar end precedes start");
  const int last_year = static_cast<int>(end.year());
  const int first_year = static_cast<int>(start.year());

  std::vector<DayTag> tags;
  tags.reserve(static_cast<std::size_t>((last - first).count() + 1));
  for (chr::sys_days d = first; d <= last; d += chr::days{1}) {
    const chr::year_month_day ymd{d};
    DayTag t;
    t.year = static_cast<int>(ymd.year());
    t.month = static_cast<unsigned>(ymd.month());
    t.day = static_cast<unsigned>(ymd.day());
    t.season = season_of_month(t.month);
    t.season_year = t.year;
    if (t.month == 12 && december_with_next_year) {
      t.season_year = t.year + 1 <= last_year ? t.year + 1 : 0;
    }
    if (t.season_year != 0 && t.season_year < first_year) t.season_year = 0;
    const chr::weekday wd{d};
    t.weekend = wd == chr::Saturday || wd == chr::Sunday;
    t.phase365 = phase_index(ymd);
    tags.push_back(t);
  }
  return from_tags(std::move(tags));
}

CalendarIndex CalendarIndex::from_tags(std::vector<DayTag> tags) {
  CalendarIndex c;
  c.tags_ = std::move(tags);
  return c;
}

chr::year_month_day CalendarIndex::date(std::size_t i) const {
  const auto& t = tags_.at(i);
  return chr::year{t.year} / chr::month{t.month} / chr::day{t.day};
}

std::string CalendarIndex::iso(std::size_t i) const { return format_iso_date(date(i)); }

std::vector<int> CalendarIndex::years() const {
  std::vector<int> ys;
  for (const auto& t : tags_)
    if (ys.empty() || ys.back() != t.year) ys.push_back(t.year);
  return ys;
}

CalendarIndex CalendarIndex::subset(const std::vector<std::size_t>& rows) const {
  std::vector<DayTag> tags;
  tags.reserve(rows.size());
  for (auto r : rows) tags.push_back(tags_.at(r));
  return from_tags(std::move(tags));
}

}  // namespace dtrkit
