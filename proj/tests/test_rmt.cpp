#include "dtrkit/rmt.hpp"

#include "dtrkit/association.hpp"
#include "dtrkit/linalg.hpp"
#include "support.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace dtrkit;
using dtrkit::testing::seeded_normal;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double sample_sd(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("esd step function basics") {
  const Eigen::Vector2d ev(0.5, 1.5);
  CHECK(esd_cdf(ev, 1.0) == 0.5);
  CHECK(esd_cdf(ev, 0.1) == 0.0);
  CHECK(esd_cdf(ev, 1.5) == 1.0);
  CHECK(esd_cdf(ev, 0.5) == 0.5);  // right-continuous at an atom
  CHECK_THROWS_AS(esd_cdf(Eigen::VectorXd(), 0.0), UsageError);
}

TEST_CASE("esd agrees with a naive counting loop") {
  const Eigen::VectorXd ev = seeded_normal(20, 1, 4).array().square();
  double prev = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double x = -0.5 + 0.06 * k;
    int count = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) <= x) ++count;
    const double F = esd_cdf(ev, x);
    CHECK(F == count / 20.0);
    CHECK(F >= prev);
    prev = F;
  }
}

TEST_CASE("MP support edges") {
  const auto s = mp_support(0.767123);
  CHECK(std::round(s.upper * 1000) / 1000 == 3.519);
  CHECK(std::round(s.lower * 10000) / 10000 == 0.0154);
  const auto one = mp_support(1.0);
  CHECK(one.lower == 0.0);
  CHECK(one.upper == 4.0);
  const auto tiny = mp_support(1e-12);
  CHECK_THAT(tiny.lower, WithinAbs(1.0, 1e-5));
  CHECK_THAT(tiny.upper, WithinAbs(1.0, 1e-5));
  CHECK_THROWS_AS(mp_support(0.0), UsageError);
  CHECK_THROWS_AS(mp_support(-1.0), UsageError);
  for (double y : {1e-6, 0.01, 0.3, 1.0}) {
    const auto e = mp_support(y);
    CHECK(e.lower <= 1.0);
    CHECK(e.upper >= 1.0);
  }
  const auto wide = mp_support(40.0);
  CHECK_THAT(wide.lower, WithinAbs((1 - std::sqrt(40.0)) * (1 - std::sqrt(40.0)), 1e-12));
  CHECK(wide.lower < 40.0);
  CHECK(wide.upper > 40.0);
}

TEST_CASE("MP density conventions") {
  for (double y : {0.25, 0.767123, 1.0, 2.0}) {
    const auto [lo, hi] = mp_support(y);
    CHECK(mp_density_raw(lo, y) == 0.0);
    CHECK(mp_density_raw(hi, y) == 0.0);
    CHECK(mp_density(hi, y) == 0.0);

    boost::math::quadrature::tanh_sinh<double> integrator;
    const double raw_mass = integrator.integrate([&](double x) { return mp_density_raw(x, y); }, lo, hi);
    // The displayed formula carries total mass y.
    CHECK_THAT(raw_mass, WithinAbs(y, 1e-9));
    const double cont_mass =
        integrator.integrate([&](double x) { return mp_density(x, y); }, std::max(lo, 1e-300), hi);
    CHECK_THAT(cont_mass + mp_point_mass(y), WithinAbs(1.0, 1e-6));
  }
  CHECK(mp_point_mass(2.0) == 0.5);
  CHECK(mp_point_mass(0.5) == 0.0);
}

TEST_CASE("no significant eigenvalues inside the support") {
  const auto s = summarize_spectrum(Eigen::VectorXd::Ones(10), 20, 10);
  CHECK(s.significant_count == 0);
  CHECK(significant_eigs(s).empty());
  CHECK(s.quantiles.size() == 11);
  CHECK(std::is_sorted(s.quantiles.begin(), s.quantiles.end()));
}

TEST_CASE("significant eigenvalues sit strictly outside the support") {
  Eigen::VectorXd ev(5);
  ev << 0.01, 0.8, 1.2, 2.0, 5.0;  // y = 0.5: support (0.0858, 2.914)
  const auto s = summarize_spectrum(ev, 10, 5);
  CHECK(s.eigenvalues(0) == 5.0);
  REQUIRE(s.significant_count == 2);
  CHECK(s.significant == std::vector<Eigen::Index>{0, 4});
}

TEST_CASE("denoise") {
  Eigen::Matrix2d R;
  R << 1, 0.9, 0.9, 1;
  const auto top = denoise(R, {0});
  CHECK(max_abs_diff(top.matrix, 0.95 * Eigen::Matrix2d::Ones()) <= 1e-12);
  CHECK(!top.empty);

  const auto none = denoise(R, {});
  CHECK(none.empty);
  CHECK(none.matrix.isZero());

  const Eigen::MatrixXd X = seeded_normal(50, 6, 3);
  const Eigen::MatrixXd C = pearson_corr(X);
  const auto all = denoise(C, {0, 1, 2, 3, 4, 5});
  CHECK((all.matrix - C).cwiseAbs().maxCoeff() <= 1e-8);

  const auto first = denoise(C, {0, 1});
  const auto again = denoise(first.matrix, {0, 1});
  CHECK((again.matrix - first.matrix).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(first.matrix.isApprox(first.matrix.transpose()));
}

TEST_CASE("singular-value null is reproducible") {
  const auto a = simulate_sv_null(30, 5, 20, 99);
  const auto b = simulate_sv_null(30, 5, 20, 99);
  CHECK(a.samples == b.samples);
  CHECK(a.pooled == b.pooled);
  CHECK(std::is_sorted(a.pooled.begin(), a.pooled.end()));
  CHECK(std::find(a.pooled.begin(), a.pooled.end(), a.lower) != a.pooled.end());
  CHECK(std::find(a.pooled.begin(), a.pooled.end(), a.upper) != a.pooled.end());
  const auto c = simulate_sv_null(30, 5, 20, 100);
  CHECK(a.samples != c.samples);
}

TEST_CASE("1x1 singular-value null is half-normal") {
  const std::size_t reps = 20000;
  const auto null = simulate_sv_null(1, 1, reps, 7);
  const double mean = std::accumulate(null.pooled.begin(), null.pooled.end(), 0.0) / reps;
  const double se = std::sqrt(1.0 - 2.0 / std::numbers::pi) / std::sqrt(static_cast<double>(reps));
  CHECK(std::abs(mean - std::sqrt(2.0 / std::numbers::pi)) < 3.0 * se);
}

TEST_CASE("singular-value null extremes track the MP edges") {
  const auto null = simulate_sv_null(365, 40, 200, 12);
  const auto e = mp_support(40.0 / 365.0);
  const double root_n = std::sqrt(365.0);
  CHECK(std::abs(null.pooled.back() / root_n - std::sqrt(e.upper)) <= 0.1 * std::sqrt(e.upper));
  CHECK(std::abs(null.pooled.front() / root_n - std::sqrt(e.lower)) <= 0.1 * std::sqrt(e.lower));
}

TEST_CASE("gsv null is reproducible and symmetric for equal sizes") {
  const auto a = simulate_gsv_null(30, 30, 5, 400, 5);
  const auto b = simulate_gsv_null(30, 30, 5, 400, 5);
  CHECK(a.samples == b.samples);
  std::vector<double> logs;
  for (double v : a.pooled) logs.push_back(std::log(v));
  const double median = quantile_sorted(logs, 0.5);
  CHECK(std::abs(median) < 3.0 * sample_sd(logs) / std::sqrt(400.0));
  CHECK(a.log_lower() < 0.0);
  CHECK(a.log_upper() > 0.0);
}

TEST_CASE("gsv null quantiles at the transposed desk shape are monotone") {
  const auto null = simulate_gsv_null(366, 365, 20, 30, 8);
  double prev = -1.0;
  for (int k = 0; k <= 20; ++k) {
    const double q = quantile_sorted(null.pooled, k / 20.0);
    CHECK(q >= prev);
    prev = q;
  }
  CHECK(null.lower < null.upper);
}

TEST_CASE("row permutations leave gsv unchanged") {
  const Eigen::MatrixXd A = seeded_normal(20, 4, 1);
  const Eigen::MatrixXd B = seeded_normal(22, 4, 2);
  const Eigen::VectorXd g = gsv_values(A, B);
  const auto null = permutation_gsv_null(A, B, 5, 3, 0.05, PermutationScheme::IndependentRows);
  for (Eigen::Index r = 0; r < 5; ++r)
    CHECK((null.samples.row(r).transpose() - g).cwiseAbs().maxCoeff() <= 1e-10 * g(0));
  CHECK_THROWS_AS(permutation_gsv_null(A, B, 5, 3, 0.05, PermutationScheme::JointRows), UsageError);
}

TEST_CASE("within-column permutation null is reproducible and matches the simulation null") {
  const Eigen::MatrixXd A = seeded_normal(366, 20, 31);
  const Eigen::MatrixXd B = seeded_normal(365, 20, 32);
  const auto p1 = permutation_gsv_null(A, B, 200, 4);
  const auto p2 = permutation_gsv_null(A, B, 200, 4);
  CHECK(p1.samples == p2.samples);
  const auto sim = simulate_gsv_null(366, 365, 20, 200, 4);
  CHECK(ks_distance(p1.pooled, sim.pooled) <= 0.05);
}

TEST_CASE("ks distance agrees with a brute-force supremum") {
  std::vector<double> a, b;
  const Eigen::MatrixXd x = seeded_normal(37, 2, 13);
  for (Eigen::Index i = 0; i < 37; ++i) {
    a.push_back(x(i, 0));
    if (i < 29) b.push_back(x(i, 1) + 0.3);
  }
  a.push_back(a[3]);  // a tie
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double brute = 0.0;
  std::vector<double> probes = a;
  probes.insert(probes.end(), b.begin(), b.end());
  for (double t : probes) {
    const double fa = static_cast<double>(std::upper_bound(a.begin(), a.end(), t) - a.begin()) / a.size();
    const double fb = static_cast<double>(std::upper_bound(b.begin(), b.end(), t) - b.begin()) / b.size();
    brute = std::max(brute, std::abs(fa - fb));
  }
  CHECK_THAT(ks_distance(a, b), WithinAbs(brute, 1e-15));
  CHECK(ks_distance(a, a) == 0.0);
}

TEST_CASE("null tables serialize with fixed headers") {
  const auto null = simulate_sv_null(6, 2, 2, 1);
  std::ostringstream t, c;
  write_null_table(t, null);
  write_critical_values(c, null);
  CHECK(t.str().rfind("replicate,index,value\n1,1,", 0) == 0);
  const std::string table = t.str();
  CHECK(std::count(table.begin(), table.end(), '\n') == 5);
  CHECK(c.str().rfind("level,lower,upper\n0.05,", 0) == 0);
}
