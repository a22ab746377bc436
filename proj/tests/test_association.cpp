#include "dtrkit/association.hpp"

#include "dtrkit/gridorder.hpp"
#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <numeric>
#include <cmath>

using namespace dtrkit;
using dtrkit::testing::lattice_grids;
using dtrkit::testing::make_panel;
using dtrkit::testing::seeded_normal;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::span<const double> col_span(const Eigen::MatrixXd& m, Eigen::Index j) {
  return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}

/// Order-4 U-statistic: mean over all 4-subsets of the kernel
/// a12 b12 + a12 b34 - 2 a12 b13 symmetrized over the 24 orderings, divided
/// by 4 to move from distance covariance to kappa.
double kappa_by_quadruples(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double total = 0.0;
  std::size_t subsets = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        for (std::size_t l = k + 1; l < n; ++l) {
          std::array<std::size_t, 4> idx{i, j, k, l};
          double sym = 0.0;
          int perms = 0;
          do {
            auto a = [&](int s, int t) { return std::abs(x[idx[s]] - x[idx[t]]); };
            auto b = [&](int s, int t) { return std::abs(y[idx[s]] - y[idx[t]]); };
            sym += a(0, 1) * b(0, 1) + a(0, 1) * b(2, 3) - 2.0 * a(0, 1) * b(0, 2);
            ++perms;
          } while (std::next_permutation(idx.begin(), idx.end()));
          total += sym / perms;
          ++subsets;
        }
  return total / static_cast<double>(subsets) / 4.0;
}

/// V-statistic: the same unsymmetrized kernel averaged over all n^4 index
/// tuples with repetition.
double kappa_by_all_tuples(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
          const double a12 = std::abs(x[i] - x[j]);
          total += a12 * std::abs(y[i] - y[j]) + a12 * std::abs(y[k] - y[l]) - 2.0 * a12 * std::abs(y[i] - y[k]);
        }
  return total / std::pow(static_cast<double>(n), 4) / 4.0;
}

Panel panel_on_grid(const Eigen::MatrixXd& values, const GridSet& grids) {
  const std::chrono::sys_days first{std::chrono::year{2001} / 1 / 1};
  const auto cal = CalendarIndex::build(first, first + std::chrono::days{values.rows() - 1});
  return make_panel(values, cal, grids);
}

}  // namespace

TEST_CASE("pearson correlation edge cases") {
  Eigen::MatrixXd X(5, 3);
  X.col(0) << 1, 2, 4, 3, 7;
  X.col(1) = X.col(0);
  X.col(2) = -X.col(0);
  const auto R = pearson_corr(X);
  CHECK(R(0, 0) == 1.0);
  CHECK_THAT(R(0, 1), WithinAbs(1.0, 1e-15));
  CHECK_THAT(R(0, 2), WithinAbs(-1.0, 1e-15));
}

TEST_CASE("pearson correlation matches a naive two-pass loop") {
  const Eigen::MatrixXd X = seeded_normal(50, 4, 17);
  const auto R = pearson_corr(X);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double ma = 0, mb = 0;
      for (int t = 0; t < 50; ++t) {
        ma += X(t, a);
        mb += X(t, b);
      }
      ma /= 50;
      mb /= 50;
      double sab = 0, saa = 0, sbb = 0;
      for (int t = 0; t < 50; ++t) {
        sab += (X(t, a) - ma) * (X(t, b) - mb);
        saa += (X(t, a) - ma) * (X(t, a) - ma);
        sbb += (X(t, b) - mb) * (X(t, b) - mb);
      }
      CHECK_THAT(R(a, b), WithinAbs(sab / std::sqrt(saa * sbb), 1e-12));
    }
}

TEST_CASE("pearson correlation names a constant column") {
  Eigen::MatrixXd X = seeded_normal(10, 3, 2);
  X.col(1).setConstant(4.0);
  const auto p = panel_on_grid(X, lattice_grids(1, 3));
  CHECK_THROWS_WITH(pearson_corr(p), Catch::Matchers::ContainsSubstring("g0_1"));
}

TEST_CASE("unbiased kappa equals exhaustive quadruple enumeration") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::Index n = 6 + static_cast<Eigen::Index>(seed % 5);
    Eigen::MatrixXd X = seeded_normal(n, 2, 100 + seed);
    X.col(1) += 0.7 * X.col(0).array().square().matrix();
    const double fast = bergsma_kappa(col_span(X, 0), col_span(X, 1));
    const double slow = kappa_by_quadruples(col_span(X, 0), col_span(X, 1));
    CHECK_THAT(fast, WithinAbs(slow, 1e-12));
  }
}

TEST_CASE("plugin kappa equals enumeration over all index tuples") {
  const Eigen::MatrixXd X = seeded_normal(7, 2, 5);
  BergsmaOptions opts;
  opts.estimator = BergsmaEstimator::Plugin;
  CHECK_THAT(bergsma_kappa(col_span(X, 0), col_span(X, 1), opts),
             WithinAbs(kappa_by_all_tuples(col_span(X, 0), col_span(X, 1)), 1e-12));
}

TEST_CASE("kappa of a sample with itself is positive") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(bergsma_kappa(x, x) > 0.0);
}

TEST_CASE("kappa is centred at zero under independence") {
  std::vector<double> ks;
  for (std::uint64_t s = 0; s < 60; ++s) {
    const Eigen::MatrixXd X = seeded_normal(200, 2, 1000 + s);
    ks.push_back(bergsma_kappa(col_span(X, 0), col_span(X, 1)));
  }
  double m = 0, v = 0;
  for (double k : ks) m += k;
  m /= ks.size();
  for (double k : ks) v += (k - m) * (k - m);
  const double se = std::sqrt(v / (ks.size() - 1) / ks.size());
  CHECK(std::abs(m) < 4.0 * se);
}

TEST_CASE("kappa argument checks") {
  const std::vector<double> three{1, 2, 3};
  CHECK_THROWS_AS(bergsma_kappa(three, three), UsageError);
  const std::vector<double> a{1, 2, 3, 4, 5}, b{1, 2, 3, 4};
  CHECK_THROWS_AS(bergsma_kappa(a, b), UsageError);
  BergsmaOptions opts;
  opts.max_n = 4;
  CHECK_THROWS_AS(bergsma_kappa(a, a, opts), UsageError);
}

TEST_CASE("rho normalization, symmetry and affine invariance") {
  const Eigen::MatrixXd X = seeded_normal(40, 2, 9);
  const auto x = col_span(X, 0);
  const auto y = col_span(X, 1);
  CHECK_THAT(bergsma_rho(x, x), WithinAbs(1.0, 1e-12));
  CHECK_THAT(bergsma_rho(x, y), WithinAbs(bergsma_rho(y, x), 1e-12));
  Eigen::VectorXd z = 3.5 * X.col(0).array() + 2.0;
  CHECK_THAT(bergsma_rho(x, {z.data(), 40}), WithinAbs(1.0, 1e-10));
  Eigen::VectorXd w = 0.2 * X.col(1).array() - 7.0;
  CHECK_THAT(bergsma_rho(x, {w.data(), 40}), WithinAbs(bergsma_rho(x, y), 1e-10));
}

TEST_CASE("rho rejects a constant sample") {
  const std::vector<double> c(10, 2.0), x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK_THROWS_AS(bergsma_rho(c, x), NumericalError);
}

TEST_CASE("rho averages to zero over independent pairs") {
  std::vector<double> rs;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Eigen::MatrixXd X = seeded_normal(200, 2, 5000 + s);
    rs.push_back(bergsma_rho(col_span(X, 0), col_span(X, 1)));
  }
  double m = 0, v = 0;
  for (double r : rs) m += r;
  m /= rs.size();
  for (double r : rs) v += (r - m) * (r - m);
  CHECK(std::abs(m) < 3.0 * std::sqrt(v / (rs.size() - 1) / rs.size()));
}

TEST_CASE("bergsma matrix") {
  const Eigen::MatrixXd base = seeded_normal(30, 1, 3);
  Eigen::MatrixXd two(30, 2);
  two << base, base;
  const auto R = bergsma_corr_matrix(panel_on_grid(two, lattice_grids(1, 2)));
  CHECK((R.values - Eigen::Matrix2d::Ones()).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::MatrixXd X = seeded_normal(300, 3, 4);
  const auto I = bergsma_corr_matrix(panel_on_grid(X, lattice_grids(1, 3)));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(std::abs(I.values(i, j)) < 0.1);

  Ordering o{{2, 0, 1}, "test"};
  const Eigen::MatrixXd Xp = apply_order_columns(X, o);
  const auto P = bergsma_corr_matrix(panel_on_grid(Xp, lattice_grids(1, 3)));
  CHECK((P.values - apply_order_symmetric(I.values, o)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("blocked kappa matrix equals pairwise evaluation") {
  const Eigen::MatrixXd X = seeded_normal(25, 7, 77);
  BergsmaOptions small;
  small.block_bytes = 25 * 24 / 2 * sizeof(double) * 4;  // two columns per block
  const auto K = bergsma_kappa_matrix(X, small);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j)
      CHECK_THAT(K(i, j), WithinAbs(bergsma_kappa(col_span(X, i), col_span(X, j)), 1e-12));
}

TEST_CASE("bergsma matrix marks degenerate columns") {
  Eigen::MatrixXd X = seeded_normal(12, 3, 6);
  X.col(2).setConstant(1.0);
  const auto R = bergsma_corr_matrix(panel_on_grid(X, lattice_grids(1, 3)));
  CHECK(std::isnan(R.values(0, 2)));
  CHECK(!R.failed.empty());
  CHECK(std::isfinite(R.values(0, 1)));
}

TEST_CASE("adjacency weights") {
  const auto line = adjacency_weights(lattice_grids(1, 3));
  CHECK(line.w.row(1) == Eigen::RowVector3d(0.5, 0.0, 0.5));
  CHECK(line.w.row(0) == Eigen::RowVector3d(0.0, 1.0, 0.0));

  const auto single = adjacency_weights(lattice_grids(1, 1));
  CHECK(single.w.isZero());
  CHECK(single.isolated == std::vector<Eigen::Index>{0});

  for (auto nb : {Neighborhood::Rook, Neighborhood::Queen}) {
    const auto W = adjacency_weights(lattice_grids(3, 3), nb);
    CHECK((W.w.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(W.w.diagonal().isZero(0.0));
  }
  const auto queen = adjacency_weights(lattice_grids(3, 3), Neighborhood::Queen);
  CHECK((queen.w.row(4).array() > 0).count() == 8);
  const auto rook = adjacency_weights(lattice_grids(3, 3), Neighborhood::Rook);
  CHECK((rook.w.row(4).array() > 0).count() == 4);
}

TEST_CASE("exponential-decay weights") {
  const auto two = expdecay_weights(lattice_grids(1, 2), 0.3);
  CHECK(two.w == Eigen::Matrix2d{{0.0, 1.0}, {1.0, 0.0}});

  const auto wide = expdecay_weights(lattice_grids(1, 3), 1e9);
  CHECK_THAT(wide.w(1, 0), WithinAbs(0.5, 1e-8));
  CHECK_THAT(wide.w(0, 2), WithinAbs(0.5, 1e-8));

  const auto unit = expdecay_weights(lattice_grids(1, 3), 1.0);
  const double e1 = std::exp(-1.0), e2 = std::exp(-2.0);
  CHECK_THAT(unit.w(0, 1), WithinAbs(e1 / (e1 + e2), 1e-15));
  CHECK_THAT(unit.w(0, 2), WithinAbs(e2 / (e1 + e2), 1e-15));
  CHECK_THAT(unit.w(1, 0), WithinAbs(0.5, 1e-15));
  CHECK(unit.w.diagonal().isZero(0.0));
  CHECK_THROWS_AS(expdecay_weights(lattice_grids(1, 3), 0.0), UsageError);
}

TEST_CASE("spatial Bergsma on identical columns along a line") {
  const Eigen::MatrixXd base = seeded_normal(20, 1, 8);
  Eigen::MatrixXd X(20, 3);
  X << base, base, base;
  const auto grids = lattice_grids(1, 3);
  const auto r = spatial_bergsma(panel_on_grid(X, grids), adjacency_weights(grids));
  CHECK(r.value == 1.0);
  CHECK(r.p == 3);
  CHECK(r.dropped_pairs == 0);

  WeightMatrix zero;
  zero.w = Eigen::MatrixXd::Zero(3, 3);
  CHECK(spatial_bergsma(panel_on_grid(X, grids), zero).value == 0.0);
}

TEST_CASE("spatial Bergsma matches a brute-force double loop") {
  const auto grids = lattice_grids(2, 2);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Eigen::MatrixXd X = seeded_normal(60, 4, 300 + seed);
    X.col(1) += 0.8 * X.col(0);
    X.col(3) += X.col(2).array().abs().matrix();
    const auto panel = panel_on_grid(X, grids);
    for (const auto& W : {adjacency_weights(grids), expdecay_weights(grids, 1.3)}) {
      double sum = 0.0;
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
          const double w = W.w(i, j) + W.w(j, i);
          if (w != 0.0) sum += w * bergsma_rho(col_span(X, i), col_span(X, j));
        }
      CHECK_THAT(spatial_bergsma(panel, W).value, WithinAbs(sum / 4.0, 1e-12));
    }
  }
}

TEST_CASE("spatial Bergsma is linear in the similarities") {
  const auto grids = lattice_grids(3, 3);
  const auto W = expdecay_weights(grids, 2.0);
  Eigen::MatrixXd sim = pearson_corr(seeded_normal(30, 9, 4));
  const double base = spatial_bergsma_from_similarity(sim, W).value;
  CHECK_THAT(spatial_bergsma_from_similarity(2.0 * sim, W).value, WithinRel(2.0 * base, 1e-14));
  sim(0, 1) = sim(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(spatial_bergsma_from_similarity(sim, W).dropped_pairs == 1);
}

TEST_CASE("zone-restricted spatial Bergsma equals evaluation on the zone sub-panel") {
  auto grids = lattice_grids(3, 4);
  for (std::size_t k = 0; k < grids.size(); ++k) grids[k].zone = k % 3 == 0 ? 2 : 5;
  Eigen::MatrixXd X = seeded_normal(80, 12, 55);
  X.rightCols(6) += X.leftCols(6);
  const auto panel = panel_on_grid(X, grids);
  for (const auto& W : {adjacency_weights(grids), expdecay_weights(grids, 1.0)}) {
    std::vector<Eigen::Index> idx;
    for (std::size_t k = 0; k < grids.size(); ++k)
      if (grids[k].zone == 5) idx.push_back(static_cast<Eigen::Index>(k));
    const auto a = spatial_bergsma_subset(panel, W, idx);
    const auto sub = slice(panel, Selector::of_zone(5));
    std::vector<Eigen::Index> sub_idx(idx.size());
    std::iota(sub_idx.begin(), sub_idx.end(), Eigen::Index{0});
    const auto b = spatial_bergsma(sub, restrict_weights(W, idx));
    CHECK_THAT(a.value, WithinAbs(b.value, 1e-12));
    CHECK(a.p == static_cast<Eigen::Index>(idx.size()));
    const auto Wz = restrict_weights(W, idx);
    for (Eigen::Index i = 0; i < Wz.w.rows(); ++i)
      if (Wz.w.row(i).sum() > 0) CHECK_THAT(Wz.w.row(i).sum(), WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("sb_series slices") {
  const auto grids = lattice_grids(2, 2);
  const auto cal = CalendarIndex::build(std::chrono::year{2001} / 1 / 1, std::chrono::year{2002} / 12 / 31);
  Eigen::MatrixXd one = seeded_normal(365, 4, 12);
  one.col(1) += one.col(0);
  Eigen::MatrixXd X(730, 4);
  X << one, one;
  const auto panel = make_panel(X, cal, grids);
  const auto W = adjacency_weights(grids);

  const auto years = sb_series(panel, W, SbSliceBy::Year);
  REQUIRE(years.size() == 2);
  CHECK(years[0].slice == "2001");
  CHECK(years[0].value == years[1].value);
  CHECK(years[0].value == spatial_bergsma(slice(panel, Selector::of_year(2001)), W).value);

  const auto months = sb_series(panel, W, SbSliceBy::YearMonth);
  CHECK(months.size() == 24);
  CHECK(months[2].slice == "2001-03");

  auto zoned = grids;
  zoned[3].zone = 4;
  auto zpanel = panel;
  zpanel.grids = zoned;
  const auto zones = sb_series(zpanel, W, SbSliceBy::YearZone);
  REQUIRE(zones.size() == 4);
  CHECK(zones[1].slice == "2001/zone4");
  CHECK(zones[1].p == 1);
  CHECK(zones[1].ok());
  CHECK(zones[1].value == 0.0);
}

TEST_CASE("sb_series keeps going past a failing slice") {
  const auto grids = lattice_grids(1, 2);
  const auto cal = CalendarIndex::build(std::chrono::year{2001} / 12 / 29, std::chrono::year{2002} / 12 / 31);
  Eigen::MatrixXd X = seeded_normal(static_cast<Eigen::Index>(cal.n_days()), 2, 3);
  const auto series = sb_series(make_panel(X, cal, grids), adjacency_weights(grids), SbSliceBy::Year);
  REQUIRE(series.size() == 2);
  CHECK(!series[0].ok());  // three days only
  CHECK(series[1].ok());
}

TEST_CASE("max correlation neighbors") {
  const auto two = lattice_grids(1, 2);
  Eigen::Matrix2d R2{{1, 0.3}, {0.3, 1}};
  const auto t2 = max_corr_neighbor(R2, two);
  CHECK(t2.rows[0].partner_id == "g0_1");
  CHECK(t2.rows[1].partner_id == "g0_0");
  CHECK(t2.rows[0].dlon == 1.0);
  CHECK(t2.dlon_hist.at(1.0) == 1);

  const auto grids = lattice_grids(2, 3);
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (i != j && (i < 3) == (j < 3)) B(i, j) = 0.9;
  const auto tb = max_corr_neighbor(B, grids);
  for (int i = 0; i < 6; ++i) {
    const auto& partner = tb.rows[i].partner_id;
    CHECK(partner.substr(0, 2) == grids[i].grid_id.substr(0, 2));
  }
  // Ties resolve to the nearest cell: from g0_0 that is g0_1, not g0_2.
  CHECK(tb.rows[0].partner_id == "g0_1");

  const Eigen::MatrixXd R = pearson_corr(seeded_normal(15, 6, 44));
  const auto tr = max_corr_neighbor(R, grids);
  for (int i = 0; i < 6; ++i) {
    int best = -1;
    for (int j = 0; j < 6; ++j)
      if (j != i && (best < 0 || R(i, j) > R(i, best))) best = j;
    CHECK(tr.rows[i].partner_id == grids[best].grid_id);
    CHECK(tr.rows[i].corr == R(i, best));
  }
}

TEST_CASE("correlation fields") {
  const auto grids = lattice_grids(2, 2);
  const auto f = corr_field(Eigen::MatrixXd::Identity(4, 4), "g1_0", grids);
  for (const auto& pt : f) CHECK(pt.value == (pt.grid_id == "g1_0" ? 1.0 : 0.0));

  const Eigen::MatrixXd R = pearson_corr(seeded_normal(20, 4, 2));
  const auto row = corr_field(R, "g0_1", grids);
  for (const auto& pt : row) {
    const auto j = std::find_if(grids.begin(), grids.end(), [&](auto& g) { return g.grid_id == pt.grid_id; }) - grids.begin();
    CHECK(pt.value == R(1, j));
  }

  const Ordering o = spiral_order(grids);
  GridSet reordered;
  for (auto k : o.perm) reordered.push_back(grids[static_cast<std::size_t>(k)]);
  const auto again = corr_field(apply_order_symmetric(R, o), "g0_1", reordered);
  REQUIRE(again.size() == row.size());
  for (std::size_t k = 0; k < row.size(); ++k) {
    CHECK(again[k].lat == row[k].lat);
    CHECK(again[k].lon == row[k].lon);
    CHECK(again[k].value == row[k].value);
  }
  CHECK_THROWS_AS(corr_field(R, "nope", grids), DataError);
}
