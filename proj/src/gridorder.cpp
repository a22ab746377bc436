#include "dtrkit/gridorder.hpp"

#include <algorithm>
#include <tuple>
#include <map>
#include <numeric>
#include <ostream>

namespace dtrkit {

Ordering Ordering::inverse() const {
  Ordering inv;
  inv.perm.resize(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv.perm[static_cast<std::size_t>(perm[k])] = static_cast<Eigen::Index>(k);
  inv.tag = tag + "^-1";
  return inv;
}

bool Ordering::is_bijection() const {
  std::vector<Eigen::Index> s = perm;
  std::sort(s.begin(), s.end());
  for (std::size_t k = 0; k < s.size(); ++k)
    if (s[k] != static_cast<Eigen::Index>(k)) return false;
  return true;
}

LatticeIndex lattice_index(const GridSet& grids) {
  std::vector<double> lats, lons;
  for (const auto& g : grids) {
    lats.push_back(g.lat);
    lons.push_back(g.lon);
  }
  auto uniq = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(lats);
  uniq(lons);
  LatticeIndex li;
  li.n_rows = static_cast<int>(lats.size());
  li.n_cols = static_cast<int>(lons.size());
  for (const auto& g : grids) {
    li.row.push_back(static_cast<int>(std::lower_bound(lats.begin(), lats.end(), g.lat) - lats.begin()));
    li.col.push_back(static_cast<int>(std::lower_bound(lons.begin(), lons.end(), g.lon) - lons.begin()));
  }
  return li;
}

Ordering raster_order(const GridSet& grids, Axis primary) {
  Ordering o;
  o.tag = "raster";
  o.perm.resize(grids.size());
  std::iota(o.perm.begin(), o.perm.end(), Eigen::Index{0});
  std::stable_sort(o.perm.begin(), o.perm.end(), [&](Eigen::Index a, Eigen::Index b) {
    const auto& ga = grids[static_cast<std::size_t>(a)];
    const auto& gb = grids[static_cast<std::size_t>(b)];
    if (primary == Axis::Lat) return std::tie(ga.lat, ga.lon) < std::tie(gb.lat, gb.lon);
    return std::tie(ga.lon, ga.lat) < std::tie(gb.lon, gb.lat);
  });
  return o;
}

Ordering spiral_order(const GridSet& grids, bool first_step_down) {
  const auto li = lattice_index(grids);
  std::map<std::pair<int, int>, Eigen::Index> at;
  for (std::size_t k = 0; k < grids.size(); ++k) at.emplace(std::pair{li.row[k], li.col[k]}, static_cast<Eigen::Index>(k));

  Ordering o;
  o.tag = "spiral";
  o.perm.reserve(grids.size());
  // Diagonal d holds row + col == d (0-based). Even diagonals run with
  // decreasing row, odd ones with increasing row; that yields
  // (1,1), (1,2), (2,1), (3,1), (2,2), (1,3), ... in 1-based terms.
  const int n_diag = li.n_rows + li.n_cols - 1;
  for (int d = 0; d < n_diag; ++d) {
    const int lo = std::max(0, d - (li.n_cols - 1));
    const int hi = std::min(d, li.n_rows - 1);
    const bool rows_up = (d % 2 == 1) != first_step_down;
    for (int s = 0; s <= hi - lo; ++s) {
      const int r = rows_up ? lo + s : hi - s;
      const auto it = at.find({r, d - r});
      if (it != at.end()) o.perm.push_back(it->second);
    }
  }
  return o;
}

Ordering zone_grouped_order(const GridSet& grids, WithinZone within) {
  std::map<int, std::vector<Eigen::Index>> by_zone;
  for (std::size_t k = 0; k < grids.size(); ++k) by_zone[grids[k].zone].push_back(static_cast<Eigen::Index>(k));
  Ordering o;
  o.tag = within == WithinZone::Spiral ? "zone-then-spiral" : "zone";
  for (const auto& [zone, members] : by_zone) {
    GridSet sub;
    for (auto k : members) sub.push_back(grids[static_cast<std::size_t>(k)]);
    const Ordering inner = within == WithinZone::Spiral ? spiral_order(sub) : raster_order(sub);
    for (auto k : inner.perm) o.perm.push_back(members[static_cast<std::size_t>(k)]);
  }
  return o;
}

Ordering order_by_tag(const GridSet& grids, const std::string& tag) {
  if (tag == "raster") return raster_order(grids, Axis::Lat);
  if (tag == "raster-lon") return raster_order(grids, Axis::Lon);
  if (tag == "spiral") return spiral_order(grids);
  if (tag == "spiral-down") return spiral_order(grids, true);
  if (tag == "zone") return zone_grouped_order(grids, WithinZone::Raster);
  if (tag == "zone-then-spiral") return zone_grouped_order(grids, WithinZone::Spiral);
  if (tag == "input") {
    Ordering o;
    o.tag = "input";
    o.perm.resize(grids.size());
    std::iota(o.perm.begin(), o.perm.end(), Eigen::Index{0});
    return o;
  }
  throw UsageError("unknown ordering '" + tag + "'");
}

Panel apply_order(const Panel& panel, const Ordering& o) {
  Panel out;
  out.values = apply_order_columns(panel.values, o);
  out.calendar = panel.calendar;
  for (auto k : o.perm) out.grids.push_back(panel.grids[static_cast<std::size_t>(k)]);
  out.order_tag = o.tag;
  return out;
}

void write_ordering(std::ostream& os, const Ordering& o, const GridSet& grids) {
  os << "position,grid_id\n";
  for (std::size_t k = 0; k < o.perm.size(); ++k)
    os << k + 1 << ',' << grids[static_cast<std::size_t>(o.perm[k])].grid_id << '\n';
}

}  // namespace dtrkit
