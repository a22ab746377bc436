#include "dtrkit/linalg.hpp"

#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numbers>

using namespace dtrkit;
using dtrkit::testing::seeded_normal;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

void check_svd_contracts(const Eigen::MatrixXd& X, const SvdFactorization<double>& f) {
  const auto r = std::min(X.rows(), X.cols());
  REQUIRE(f.sigma.size() == r);
  CHECK(max_abs(f.U.transpose() * f.U - Eigen::MatrixXd::Identity(r, r)) <= 1e-10);
  CHECK(max_abs(f.V.transpose() * f.V - Eigen::MatrixXd::Identity(r, r)) <= 1e-10);
  for (Eigen::Index i = 1; i < r; ++i) CHECK(f.sigma(i) <= f.sigma(i - 1));
  CHECK(max_abs(X - f.reconstruct()) <= 1e-8 * std::max(1.0, max_abs(X)));
}

void check_gsvd_contracts(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const GsvdFactorization<double>& f) {
  const auto r = f.rank;
  const Eigen::MatrixXd cs = f.delta1().transpose() * f.delta1() + f.delta2().transpose() * f.delta2();
  CHECK(max_abs(cs - Eigen::MatrixXd::Identity(r, r)) <= 1e-10);
  CHECK((f.alpha.array() >= 0).all());
  CHECK((f.alpha.array() <= 1).all());
  CHECK((f.beta.array() >= 0).all());
  CHECK((f.beta.array() <= 1).all());
  const auto g = f.gsv();
  for (Eigen::Index i = 1; i < g.size(); ++i) CHECK(g(i) <= g(i - 1));
  CHECK(max_abs(A - f.reconstruct1()) <= 1e-8 * max_abs(A));
  CHECK(max_abs(B - f.reconstruct2()) <= 1e-8 * max_abs(B));
  CHECK(max_abs(f.U1.transpose() * f.U1 - Eigen::MatrixXd::Identity(f.U1.cols(), f.U1.cols())) <= 1e-10);
  CHECK(max_abs(f.U2.transpose() * f.U2 - Eigen::MatrixXd::Identity(f.U2.cols(), f.U2.cols())) <= 1e-10);
  CHECK(max_abs(f.V.transpose() * f.V - Eigen::MatrixXd::Identity(f.V.cols(), f.V.cols())) <= 1e-10);
  CHECK(max_abs(Eigen::MatrixXd(f.P.triangularView<Eigen::StrictlyLower>())) == 0.0);
}

}  // namespace

TEST_CASE("svd of the identity has unit singular values") {
  const auto f = svd(Eigen::MatrixXd::Identity(3, 3));
  CHECK(max_abs(f.sigma - Eigen::VectorXd::Ones(3)) <= 1e-14);
}

TEST_CASE("svd of a rank-one outer product") {
  Eigen::VectorXd a(4), b(3);
  a << 1, -2, 3, 0.5;
  b << 2, 0, -1;
  const Eigen::MatrixXd X = a * b.transpose();
  const auto f = svd(X);
  CHECK_THAT(f.sigma(0), WithinRel(a.norm() * b.norm(), 1e-12));
  CHECK(f.sigma(1) <= 1e-12);
  CHECK(f.sigma(2) <= 1e-12);
  check_svd_contracts(X, f);
}

TEST_CASE("squared singular values match an independent eigen-solve of X^T X") {
  const Eigen::MatrixXd X = seeded_normal(8, 5, 11);
  const auto f = svd(X);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X.transpose() * X);
  const Eigen::VectorXd ev = es.eigenvalues().reverse();
  for (Eigen::Index i = 0; i < 5; ++i) CHECK_THAT(f.sigma(i) * f.sigma(i), WithinAbs(ev(i), 1e-10 * ev(0)));
  check_svd_contracts(X, f);
}

TEST_CASE("svd sign convention and determinism") {
  const Eigen::MatrixXd X = seeded_normal(30, 7, 3);
  const auto f = svd(X);
  for (Eigen::Index i = 0; i < f.V.cols(); ++i) {
    Eigen::Index k = 0;
    while (std::abs(f.V(k, i)) < 1e-8) ++k;
    CHECK(f.V(k, i) > 0);
  }
  const auto g = svd(X);
  CHECK(f.U == g.U);
  CHECK(f.sigma == g.sigma);
  CHECK(f.V == g.V);
}

TEST_CASE("singular values are invariant under row and column permutations") {
  const Eigen::MatrixXd X = seeded_normal(12, 6, 5);
  Eigen::PermutationMatrix<Eigen::Dynamic> pr(12), pc(6);
  pr.setIdentity();
  pc.setIdentity();
  std::mt19937_64 eng(9);
  std::shuffle(pr.indices().data(), pr.indices().data() + 12, eng);
  std::shuffle(pc.indices().data(), pc.indices().data() + 6, eng);
  const Eigen::MatrixXd Y = pr * X * pc;
  CHECK(max_abs(svd(X).sigma - svd(Y).sigma) <= 1e-10 * svd(X).sigma(0));
}

TEST_CASE("svd rejects non-finite input") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 2);
  X(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(svd(X), NumericalError);
}

TEST_CASE("svd is templated on the scalar type") {
  const Eigen::MatrixXf X = seeded_normal(6, 4, 2).cast<float>();
  const auto f = svd(X);
  CHECK((X - f.reconstruct()).cwiseAbs().maxCoeff() < 1e-4f);
}

TEST_CASE("sym_eigen of a 2x2 correlation matrix") {
  Eigen::Matrix2d R;
  R << 1, 0.5, 0.5, 1;
  const auto e = sym_eigen(R);
  CHECK_THAT(e.values(0), WithinAbs(1.5, 1e-14));
  CHECK_THAT(e.values(1), WithinAbs(0.5, 1e-14));
}

TEST_CASE("sym_eigen of the identity and the trace identity") {
  CHECK(max_abs(sym_eigen(Eigen::MatrixXd::Identity(5, 5)).values - Eigen::VectorXd::Ones(5)) <= 1e-14);

  const Eigen::MatrixXd X = seeded_normal(40, 6, 8);
  Eigen::MatrixXd C = X.rowwise() - X.colwise().mean();
  C.colwise().normalize();
  const Eigen::MatrixXd R = C.transpose() * C;
  const auto e = sym_eigen(R);
  CHECK_THAT(e.values.sum(), WithinAbs(R.trace(), 1e-12));
  CHECK_THAT(e.values.sum(), WithinAbs(6.0, 1e-10));
  CHECK(max_abs(R - e.reconstruct()) <= 1e-8);
  for (Eigen::Index i = 1; i < 6; ++i) CHECK(e.values(i) <= e.values(i - 1));
}

TEST_CASE("sym_eigen rejects asymmetric input") {
  Eigen::Matrix2d R;
  R << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(sym_eigen(R), NumericalError);
}

TEST_CASE("gsvd of a matrix with itself") {
  const Eigen::MatrixXd A = seeded_normal(9, 4, 21);
  const auto f = gsvd(A, A);
  CHECK(max_abs(f.gsv() - Eigen::VectorXd::Ones(4)) <= 1e-10);
  CHECK(max_abs(angular_distances(f)) <= 1e-10);
  check_gsvd_contracts(A, A, f);
}

TEST_CASE("gsvd with a uniformly scaled second matrix") {
  const Eigen::MatrixXd A = seeded_normal(10, 3, 22);
  const auto f = gsvd(A, 2.0 * A);
  CHECK(max_abs(f.gsv() - Eigen::VectorXd::Constant(3, 0.5)) <= 1e-10);
  check_gsvd_contracts(A, 2.0 * A, f);
}

TEST_CASE("squared gsv match the generalized eigenvalues of the normal-equation pencil") {
  const Eigen::MatrixXd A = seeded_normal(6, 3, 31);
  const Eigen::MatrixXd B = seeded_normal(6, 3, 32);
  const auto f = gsvd(A, B);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(A.transpose() * A, B.transpose() * B);
  const Eigen::VectorXd ev = ges.eigenvalues().reverse();
  const auto g = f.gsv();
  for (Eigen::Index i = 0; i < 3; ++i) CHECK_THAT(g(i) * g(i), WithinRel(ev(i), 1e-8));
  check_gsvd_contracts(A, B, f);
}

TEST_CASE("swapping the pair inverts every gsv") {
  const Eigen::MatrixXd A = seeded_normal(15, 5, 41);
  const Eigen::MatrixXd B = seeded_normal(12, 5, 42);
  const auto g = gsvd(A, B).gsv();
  const auto h = gsvd(B, A).gsv();
  for (Eigen::Index i = 0; i < 5; ++i) CHECK_THAT(g(i) * h(4 - i), WithinAbs(1.0, 1e-8));
}

TEST_CASE("gsv_values agrees with the full factorization") {
  const Eigen::MatrixXd A = seeded_normal(20, 6, 51);
  const Eigen::MatrixXd B = seeded_normal(25, 6, 52);
  CHECK(max_abs(gsv_values(A, B) - gsvd(A, B).gsv()) == 0.0);
}

TEST_CASE("gsvd shape guards") {
  CHECK_THROWS_AS(gsvd(seeded_normal(3, 4, 1), seeded_normal(6, 4, 2)), UsageError);
  CHECK_THROWS_AS(gsvd(seeded_normal(6, 4, 1), seeded_normal(6, 3, 2)), UsageError);
}

TEST_CASE("gsvd reports the achieved rank of a deficient stack") {
  Eigen::MatrixXd A = seeded_normal(8, 4, 61);
  Eigen::MatrixXd B = seeded_normal(8, 4, 62);
  A.col(3) = A.col(0) + A.col(1);
  B.col(3) = B.col(0) + B.col(1);
  const auto f = gsvd(A, B);
  CHECK(f.rank == 3);
  CHECK(f.P.rows() == 3);
  check_gsvd_contracts(A, B, f);
}

TEST_CASE("angular distances at the limits") {
  Eigen::MatrixXd A = seeded_normal(7, 3, 71);
  Eigen::MatrixXd B = seeded_normal(7, 3, 72);
  B.col(2).setZero();  // direction seen only by A: beta = 0
  auto f = gsvd(A, B);
  CHECK(f.gsv()(0) > 1e10);
  CHECK_THAT(f.theta()(0), WithinAbs(std::numbers::pi / 4, 1e-12));
  check_gsvd_contracts(A, B, f);

  Eigen::MatrixXd C = seeded_normal(7, 3, 73);
  C.col(1).setZero();  // direction seen only by the second matrix: alpha = 0
  f = gsvd(C, seeded_normal(7, 3, 74));
  CHECK(f.gsv()(2) < 1e-10);
  CHECK_THAT(f.theta()(2), WithinAbs(-std::numbers::pi / 4, 1e-12));
}

TEST_CASE("angular distance formula on exact cosine-sine pairs") {
  GsvdFactorization<double> f;
  f.alpha = Eigen::Vector3d(1.0, std::sqrt(0.5), 0.0);
  f.beta = Eigen::Vector3d(0.0, std::sqrt(0.5), 1.0);
  const auto g = f.gsv();
  CHECK(std::isinf(g(0)));
  CHECK_THAT(g(1), WithinAbs(1.0, 1e-15));
  CHECK(g(2) == 0.0);
  const auto t = angular_distances(f);
  CHECK_THAT(t(0), WithinAbs(std::numbers::pi / 4, 1e-15));
  CHECK_THAT(t(1), WithinAbs(0.0, 1e-15));
  CHECK_THAT(t(2), WithinAbs(-std::numbers::pi / 4, 1e-15));
}
