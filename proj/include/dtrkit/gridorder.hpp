#pragma once

#include "dtrkit/error.hpp"
#include "dtrkit/ingest.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace dtrkit {

/// A column permutation: position k of the ordered layout holds original
/// column perm[k].
struct Ordering {
  std::vector<Eigen::Index> perm;
  std::string tag;

  Ordering inverse() const;
  bool is_bijection() const;
};

/// Integer lattice position of every cell: rows are distinct sorted
/// latitudes, columns distinct sorted longitudes (both 0-based).
struct LatticeIndex {
  std::vector<int> row;
  std::vector<int> col;
  int n_rows = 0;
  int n_cols = 0;
};

LatticeIndex lattice_index(const GridSet& grids);

enum class Axis { Lat, Lon };

Ordering raster_order(const GridSet& grids, Axis primary = Axis::Lat);

/// Anti-diagonal traversal of the lattice: (1,1), (1,2), (2,1), (3,1), (2,2),
/// (1,3), ... alternating direction on each diagonal. Positions with no cell
/// are skipped. `first_step_down` starts toward (2,1) instead of (1,2).
Ordering spiral_order(const GridSet& grids, bool first_step_down = false);

enum class WithinZone { Spiral, Raster };

/// Stable grouping by ascending zone code, with the sub-ordering applied to
/// each zone's cells separately.
Ordering zone_grouped_order(const GridSet& grids, WithinZone within = WithinZone::Spiral);

Ordering order_by_tag(const GridSet& grids, const std::string& tag);

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
apply_order_columns(const Eigen::MatrixBase<Derived>& m, const Ordering& o) {
  if (static_cast<std::size_t>(m.cols()) != o.perm.size())
    throw UsageError("ordering length does not match matrix columns");
  return m(Eigen::all, o.perm);
}

/// Simultaneous row/column permutation of a square matrix.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
apply_order_symmetric(const Eigen::MatrixBase<Derived>& m, const Ordering& o) {
  if (m.rows() != m.cols() || static_cast<std::size_t>(m.cols()) != o.perm.size())
    throw UsageError("ordering length does not match square matrix");
  return m(o.perm, o.perm);
}

Panel apply_order(const Panel& panel, const Ordering& o);

/// CSV `position,grid_id` (1-based positions).
void write_ordering(std::ostream& os, const Ordering& o, const GridSet& grids);

}  // namespace dtrkit
