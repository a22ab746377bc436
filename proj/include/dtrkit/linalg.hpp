#pragma once

#include "dtrkit/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace dtrkit {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string(what) + ": non-finite entry");
}

// ---------------------------------------------------------------------------
// Thin SVD
// ---------------------------------------------------------------------------

/// X = U diag(sigma) V^T with r = min(n, p), sigma non-increasing and the
/// first non-negligible entry of every right vector positive.
template <typename Scalar>
struct SvdFactorization {
  MatrixX<Scalar> U;
  VectorX<Scalar> sigma;
  MatrixX<Scalar> V;

  Eigen::Index rank_dim() const { return sigma.size(); }

  MatrixX<Scalar> reconstruct() const { return U * sigma.asDiagonal() * V.transpose(); }

  /// Sum of the first k rank-one terms sigma_i u_i v_i^T.
  MatrixX<Scalar> partial_sum(Eigen::Index k) const {
    return U.leftCols(k) * sigma.head(k).asDiagonal() * V.leftCols(k).transpose();
  }
};

template <typename Derived>
SvdFactorization<typename Derived::Scalar> svd(const Eigen::MatrixBase<Derived>& X) {
  using Scalar = typename Derived::Scalar;
  if (X.rows() < 1 || X.cols() < 1) throw UsageError("svd: empty matrix");
  require_finite(X, "svd");
  const MatrixX<Scalar> A = X;
  Eigen::BDCSVD<MatrixX<Scalar>> solver(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdFactorization<Scalar> f{solver.matrixU(), solver.singularValues(), solver.matrixV()};
  const Scalar tiny = std::sqrt(Eigen::NumTraits<Scalar>::epsilon());
  for (Eigen::Index i = 0; i < f.V.cols(); ++i) {
    const auto v = f.V.col(i);
    const Scalar scale = v.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (std::abs(v(k)) > tiny * scale) {
        if (v(k) < 0) {
          f.V.col(i) *= Scalar(-1);
          f.U.col(i) *= Scalar(-1);
        }
        break;
      }
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition
// ---------------------------------------------------------------------------

template <typename Scalar>
struct SymEigen {
  VectorX<Scalar> values;   // non-increasing
  MatrixX<Scalar> vectors;  // column j pairs with values(j)

  MatrixX<Scalar> reconstruct() const {
    return vectors * values.asDiagonal() * vectors.transpose();
  }
};

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& R, typename Derived::Scalar tol = 1e-12) {
  if (R.rows() != R.cols()) return false;
  using std::max;
  const auto scale = max(typename Derived::Scalar(1), R.cwiseAbs().maxCoeff());
  return (R - R.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

template <typename Derived>
SymEigen<typename Derived::Scalar> sym_eigen(const Eigen::MatrixBase<Derived>& R) {
  using Scalar = typename Derived::Scalar;
  require_finite(R, "sym_eigen");
  if (!is_symmetric(R)) throw NumericalError("sym_eigen: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(R.derived());
  if (es.info() != Eigen::Success) throw NumericalError("sym_eigen: solver did not converge");
  SymEigen<Scalar> out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = 0; j < out.vectors.cols(); ++j) {
    Eigen::Index k;
    out.vectors.col(j).cwiseAbs().maxCoeff(&k);
    if (out.vectors(k, j) < 0) out.vectors.col(j) *= Scalar(-1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generalized SVD of a pair sharing the right factor
// ---------------------------------------------------------------------------

/// D1 = U1 Delta1 [0 P] V and D2 = U2 Delta2 [0 P] V, with
/// Delta1^T Delta1 = diag(alpha^2), Delta2^T Delta2 = diag(beta^2) and
/// alpha^2 + beta^2 = 1. Generalized singular values alpha/beta are
/// non-increasing. With thin factors U1/U2 hold only r columns.
template <typename Scalar>
struct GsvdFactorization {
  MatrixX<Scalar> U1, U2;
  VectorX<Scalar> alpha, beta;
  MatrixX<Scalar> P;  // r x r upper triangular
  MatrixX<Scalar> V;  // M x M orthogonal
  Eigen::Index rank = 0;

  VectorX<Scalar> gsv() const {
    VectorX<Scalar> g(alpha.size());
    for (Eigen::Index i = 0; i < g.size(); ++i)
      g(i) = beta(i) == Scalar(0) ? std::numeric_limits<Scalar>::infinity() : alpha(i) / beta(i);
    return g;
  }

  VectorX<Scalar> theta() const {
    VectorX<Scalar> t(alpha.size());
    for (Eigen::Index i = 0; i < t.size(); ++i)
      t(i) = std::atan2(alpha(i), beta(i)) - std::numbers::pi_v<Scalar> / 4;
    return t;
  }

  MatrixX<Scalar> delta1() const { return quasi_diag(U1.cols(), alpha); }
  MatrixX<Scalar> delta2() const { return quasi_diag(U2.cols(), beta); }

  /// [0 P], r x M.
  MatrixX<Scalar> zero_p() const {
    MatrixX<Scalar> zp = MatrixX<Scalar>::Zero(rank, V.rows());
    zp.rightCols(rank) = P;
    return zp;
  }

  MatrixX<Scalar> reconstruct1() const { return U1 * delta1() * zero_p() * V; }
  MatrixX<Scalar> reconstruct2() const { return U2 * delta2() * zero_p() * V; }

 private:
  MatrixX<Scalar> quasi_diag(Eigen::Index rows, const VectorX<Scalar>& d) const {
    MatrixX<Scalar> m = MatrixX<Scalar>::Zero(rows, d.size());
    m.topLeftCorner(d.size(), d.size()).diagonal() = d;
    return m;
  }
};

struct GsvdOptions {
  bool full_u = true;   // complete U1/U2 to square orthogonal matrices
  bool values_only = false;  // skip U, P and V entirely
};

namespace detail {

/// Splits R = [0 P] V (R is r x M with full row rank, P upper triangular
/// with positive diagonal, V orthogonal) via a QR of the flipped transpose.
template <typename Scalar>
void rq_decompose(const MatrixX<Scalar>& R, MatrixX<Scalar>& P, MatrixX<Scalar>& V) {
  const Eigen::Index r = R.rows();
  const Eigen::Index m = R.cols();
  const MatrixX<Scalar> flipped_t = R.colwise().reverse().rowwise().reverse().transpose();
  Eigen::HouseholderQR<MatrixX<Scalar>> qr(flipped_t);
  const MatrixX<Scalar> R1 = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
  const MatrixX<Scalar> Q = qr.householderQ();
  P = R1.transpose().colwise().reverse().rowwise().reverse();
  V = Q.transpose().colwise().reverse().rowwise().reverse();
  for (Eigen::Index k = 0; k < r; ++k) {
    if (P(k, k) < 0) {
      P.col(k) *= Scalar(-1);
      V.row(m - r + k) *= Scalar(-1);
    }
  }
}

}  // namespace detail

template <typename Derived1, typename Derived2>
GsvdFactorization<typename Derived1::Scalar> gsvd(const Eigen::MatrixBase<Derived1>& D1,
                                                  const Eigen::MatrixBase<Derived2>& D2,
                                                  GsvdOptions opts = {}) {
  using Scalar = typename Derived1::Scalar;
  using Mat = MatrixX<Scalar>;
  const Eigen::Index n1 = D1.rows(), n2 = D2.rows(), m = D1.cols();
  if (D2.cols() != m) throw UsageError("gsvd: column counts differ");
  if (m < 1 || std::min(n1, n2) < m) throw UsageError("gsvd: requires min(N1, N2) >= M >= 1");
  require_finite(D1, "gsvd");
  require_finite(D2, "gsvd");

  // Stacked QR with column pivoting: [D1; D2] = Q_r W, W of full row rank r.
  Mat stacked(n1 + n2, m);
  stacked << D1, D2;
  Eigen::ColPivHouseholderQR<Mat> qr(stacked);
  const Eigen::Index r = qr.rank();
  if (r == 0) throw NumericalError("gsvd: stacked matrix is zero");
  const Mat Qr = qr.householderQ() * Mat::Identity(n1 + n2, r);
  const Mat W = Mat(qr.matrixR().topRows(r).template triangularView<Eigen::Upper>()) *
                qr.colsPermutation().transpose();

  // CS step: SVD of the top block fixes the shared basis Z; the QR of each
  // rotated block gives orthonormal U columns and the cosine/sine pairs.
  const Mat Q1 = Qr.topRows(n1);
  const Mat Q2 = Qr.bottomRows(n2);
  Eigen::BDCSVD<Mat> cs(Q1, Eigen::ComputeThinV);
  Mat Z = cs.matrixV();

  // Columns of Q2 Z are factored in reverse so the largest sines come first;
  // diagonal index k of qr2 belongs to column r-1-k.
  Eigen::HouseholderQR<Mat> qr1(Q1 * Z);
  Eigen::HouseholderQR<Mat> qr2b(Mat((Q2 * Z).rowwise().reverse()));

  GsvdFactorization<Scalar> f;
  f.rank = r;
  f.alpha.resize(r);
  f.beta.resize(r);
  VectorX<Scalar> sign1(r), sign2(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Scalar a = qr1.matrixQR()(i, i);
    const Scalar b = qr2b.matrixQR()(r - 1 - i, r - 1 - i);
    sign1(i) = a < 0 ? Scalar(-1) : Scalar(1);
    sign2(i) = b < 0 ? Scalar(-1) : Scalar(1);
    const Scalar s = std::hypot(a, b);
    f.alpha(i) = std::abs(a) / s;
    f.beta(i) = std::abs(b) / s;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return std::atan2(f.alpha(x), f.beta(x)) > std::atan2(f.alpha(y), f.beta(y));
  });
  f.alpha = VectorX<Scalar>(f.alpha(order));
  f.beta = VectorX<Scalar>(f.beta(order));
  if (opts.values_only) return f;

  Z = Mat(Z(Eigen::all, order));

  const Mat H1 = qr1.householderQ();
  const Mat H2 = qr2b.householderQ();
  const Eigen::Index c1 = opts.full_u ? n1 : r;
  const Eigen::Index c2 = opts.full_u ? n2 : r;
  f.U1.resize(n1, c1);
  f.U2.resize(n2, c2);
  for (Eigen::Index k = 0; k < r; ++k) {
    const Eigen::Index i = order[static_cast<std::size_t>(k)];
    f.U1.col(k) = H1.col(i) * sign1(i);
    f.U2.col(k) = H2.col(r - 1 - i) * sign2(i);
  }
  if (opts.full_u) {
    f.U1.rightCols(n1 - r) = H1.rightCols(n1 - r);
    f.U2.rightCols(n2 - r) = H2.rightCols(n2 - r);
  }

  detail::rq_decompose<Scalar>(Z.transpose() * W, f.P, f.V);
  return f;
}

/// Generalized singular values alpha_i / beta_i only, non-increasing.
template <typename Derived1, typename Derived2>
VectorX<typename Derived1::Scalar> gsv_values(const Eigen::MatrixBase<Derived1>& D1,
                                              const Eigen::MatrixBase<Derived2>& D2) {
  return gsvd(D1, D2, GsvdOptions{.full_u = false, .values_only = true}).gsv();
}

/// theta_i = arctan(alpha_i / beta_i) - pi/4; beta_i = 0 gives pi/4.
template <typename Scalar>
VectorX<Scalar> angular_distances(const GsvdFactorization<Scalar>& f) {
  return f.theta();
}

}  // namespace dtrkit
