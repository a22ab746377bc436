#include "dtrkit/gridorder.hpp"

#include "dtrkit/association.hpp"
#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <sstream>

using namespace dtrkit;
using dtrkit::testing::lattice_grids;
using dtrkit::testing::seeded_normal;

using Perm = std::vector<Eigen::Index>;

TEST_CASE("raster order") {
  const auto g = lattice_grids(2, 2);
  CHECK(raster_order(g, Axis::Lat).perm == Perm{0, 1, 2, 3});
  CHECK(raster_order(g, Axis::Lon).perm == Perm{0, 2, 1, 3});
  CHECK(raster_order(lattice_grids(1, 1)).perm == Perm{0});

  GridSet shuffled{g[3], g[0], g[2], g[1]};
  CHECK(raster_order(shuffled).perm == Perm{1, 3, 2, 0});
}

TEST_CASE("spiral order follows the anti-diagonal walk") {
  CHECK(spiral_order(lattice_grids(3, 3)).perm == Perm{0, 1, 3, 6, 4, 2, 5, 7, 8});
  CHECK(spiral_order(lattice_grids(2, 2)).perm == Perm{0, 1, 2, 3});
  CHECK(spiral_order(lattice_grids(1, 1)).perm == Perm{0});
  CHECK(spiral_order(lattice_grids(3, 3), true).perm == Perm{0, 3, 1, 2, 4, 6, 7, 5, 8});
  CHECK(spiral_order(lattice_grids(3, 3)).tag == "spiral");
}

TEST_CASE("spiral order skips lattice holes") {
  auto g = lattice_grids(3, 3);
  g.erase(g.begin() + 4);  // centre cell
  const auto o = spiral_order(g);
  CHECK(o.is_bijection());
  // Original sequence without the hole, re-indexed after the erase.
  CHECK(o.perm == Perm{0, 1, 3, 5, 2, 4, 6, 7});
}

TEST_CASE("orderings are bijections on irregular footprints") {
  GridSet g;
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 9; ++c)
      if ((r * 5 + c * 3) % 4 != 0)
        g.push_back({"c" + std::to_string(r) + "_" + std::to_string(c), 8.0 + r, 68.0 + c, 1 + (r + c) % 6, true});
  for (const auto& tag : {"raster", "raster-lon", "spiral", "spiral-down", "zone", "zone-then-spiral", "input"}) {
    const auto o = order_by_tag(g, tag);
    CHECK(o.is_bijection());
    CHECK(o.perm.size() == g.size());
    auto sorted = o.perm;
    std::sort(sorted.begin(), sorted.end());
    Perm iota(g.size());
    std::iota(iota.begin(), iota.end(), Eigen::Index{0});
    CHECK(sorted == iota);
  }
  CHECK_THROWS_AS(order_by_tag(g, "hilbert"), UsageError);
}

TEST_CASE("zone-grouped order") {
  const auto one = lattice_grids(3, 3, 2);
  CHECK(zone_grouped_order(one, WithinZone::Spiral).perm == spiral_order(one).perm);

  GridSet two{{"a", 10, 70, 4, true}, {"b", 11, 70, 1, true}};
  CHECK(zone_grouped_order(two).perm == Perm{1, 0});

  auto g = lattice_grids(4, 5);
  for (std::size_t k = 0; k < g.size(); ++k) g[k].zone = 1 + static_cast<int>((k * 7) % 6);
  for (auto within : {WithinZone::Spiral, WithinZone::Raster}) {
    const auto o = zone_grouped_order(g, within);
    CHECK(o.is_bijection());
    for (std::size_t k = 1; k < o.perm.size(); ++k)
      CHECK(g[static_cast<std::size_t>(o.perm[k - 1])].zone <= g[static_cast<std::size_t>(o.perm[k])].zone);
  }
  CHECK(zone_grouped_order(g).tag == "zone-then-spiral");
  CHECK(zone_grouped_order(g, WithinZone::Raster).tag == "zone");
}

TEST_CASE("applying an ordering keeps the spectrum") {
  const Eigen::MatrixXd R = pearson_corr(seeded_normal(20, 5, 7));
  const Ordering o{{3, 0, 4, 1, 2}, "test"};
  const Eigen::MatrixXd Rp = apply_order_symmetric(R, o);
  CHECK(Rp.isApprox(Rp.transpose(), 0.0));
  const Eigen::VectorXd a = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(R).eigenvalues();
  const Eigen::VectorXd b = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Rp).eigenvalues();
  CHECK(((a - b).array().abs() / a.array().abs().max(1e-300)).maxCoeff() <= 1e-12);

  const Ordering id{{0, 1, 2, 3, 4}, "input"};
  CHECK(apply_order_symmetric(R, id) == R);
  CHECK(apply_order_symmetric(Rp, o.inverse()) == R);

  const Eigen::MatrixXd X = seeded_normal(4, 5, 1);
  CHECK(apply_order_columns(apply_order_columns(X, o), o.inverse()) == X);
  CHECK_THROWS_AS(apply_order_columns(seeded_normal(4, 3, 1), o), UsageError);
  CHECK_THROWS_AS(apply_order_symmetric(X, o), UsageError);
}

TEST_CASE("applying an ordering to a panel moves grids with their columns") {
  const auto grids = lattice_grids(3, 3);
  const auto cal = build_calendar("2001-01-01", "2001-01-10");
  const auto panel = dtrkit::testing::make_panel(seeded_normal(10, 9, 2), cal, grids);
  const auto o = spiral_order(grids);
  const auto p = apply_order(panel, o);
  CHECK(p.order_tag == "spiral");
  for (std::size_t k = 0; k < 9; ++k) {
    CHECK(p.grids[k].grid_id == grids[static_cast<std::size_t>(o.perm[k])].grid_id);
    CHECK(p.values.col(static_cast<Eigen::Index>(k)) == panel.values.col(o.perm[k]));
  }
}

TEST_CASE("ordering export") {
  const auto g = lattice_grids(2, 2);
  std::ostringstream os;
  write_ordering(os, raster_order(g, Axis::Lon), g);
  CHECK(os.str() == "position,grid_id\n1,g0_0\n2,g1_0\n3,g0_1\n4,g1_1\n");
  CHECK_FALSE((Ordering{{0, 0, 1}, "x"}).is_bijection());
}
