#pragma once

// Dense real symmetric linear algebra on the positive definite cone:
// certified matrix types, eigendecompositions, spectral matrix functions,
// extremal generalized eigenvalues of a pencil and Loewner-order tests.
//
// Everything here is templated on the scalar type and header-only. All
// tolerances are taken relative to the induced infinity norm of the operands
// with a floor of one.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <utility>

#include "midrange/errors.hpp"

namespace midrange {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Induced infinity norm (max absolute row sum).
template <typename Derived>
typename Derived::RealScalar norm_inf(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

template <typename Scalar>
Scalar tolerance_scale(Scalar norm) {
  return std::max(Scalar(1), norm);
}

/// Dense real symmetric matrix. Input is symmetrized as (M + M^T) / 2 so
/// that entry (i, j) and (j, i) are bitwise equal.
template <typename Scalar>
class SymMatrix {
 public:
  using MatrixType = Mat<Scalar>;

  SymMatrix() = default;

  template <typename Derived>
  explicit SymMatrix(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) {
      throw DimensionMismatch("symmetric matrix must be square, got " +
                              std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
    }
    if (m.rows() == 0) throw DimensionMismatch("matrix dimension must be positive");
    if (!m.allFinite()) throw Error("matrix has non-finite entries");
    m_ = (m + m.transpose()) / Scalar(2);
  }

  static SymMatrix identity(Index n) { return SymMatrix(MatrixType::Identity(n, n)); }
  static SymMatrix zero(Index n) { return SymMatrix(MatrixType::Zero(n, n)); }

  template <typename Derived>
  static SymMatrix diagonal(const Eigen::MatrixBase<Derived>& d) {
    return SymMatrix(MatrixType(d.asDiagonal()));
  }

  Index dim() const { return m_.rows(); }
  const MatrixType& matrix() const { return m_; }
  Scalar operator()(Index i, Index j) const { return m_(i, j); }

 private:
  MatrixType m_;
};

/// Lower-triangular Cholesky factor L with L L^T = S.
template <typename Scalar>
Mat<Scalar> cholesky(const SymMatrix<Scalar>& s) {
  Eigen::LLT<Mat<Scalar>> llt(s.matrix());
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("Cholesky factorization hit a non-positive pivot");
  }
  return llt.matrixL();
}

/// A symmetric matrix certified positive definite by a successful Cholesky
/// factorization. The factor is kept for pencil reductions.
template <typename Scalar>
class SpdMatrix : public SymMatrix<Scalar> {
 public:
  using MatrixType = Mat<Scalar>;

  SpdMatrix() = default;

  explicit SpdMatrix(SymMatrix<Scalar> s)
      : SymMatrix<Scalar>(std::move(s)), chol_(cholesky(sym())) {}

  template <typename Derived>
  explicit SpdMatrix(const Eigen::MatrixBase<Derived>& m) : SpdMatrix(SymMatrix<Scalar>(m)) {}

  static SpdMatrix identity(Index n) { return SpdMatrix(SymMatrix<Scalar>::identity(n)); }

  template <typename Derived>
  static SpdMatrix diagonal(const Eigen::MatrixBase<Derived>& d) {
    return SpdMatrix(SymMatrix<Scalar>::diagonal(d));
  }

  const SymMatrix<Scalar>& sym() const { return *this; }
  const MatrixType& cholesky_factor() const { return chol_; }

 private:
  MatrixType chol_;
};

using SymMatrixd = SymMatrix<double>;
using SpdMatrixd = SpdMatrix<double>;

template <typename Scalar>
struct EigenDecomp {
  Vec<Scalar> values;    // ascending
  Mat<Scalar> vectors;   // orthonormal columns
};

template <typename Scalar>
EigenDecomp<Scalar> eigh(const SymMatrix<Scalar>& s) {
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(s.matrix());
  if (es.info() != Eigen::Success) {
    throw NoConvergence("symmetric eigensolver did not converge");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

namespace detail {

template <typename Scalar>
Vec<Scalar> symmetric_eigenvalues(const Mat<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NoConvergence("symmetric eigensolver did not converge");
  }
  return es.eigenvalues();
}

template <typename Scalar>
Scalar min_eigenvalue(const Mat<Scalar>& m) {
  return symmetric_eigenvalues(m)(0);
}

}  // namespace detail

template <typename Scalar>
Vec<Scalar> eigvalsh(const SymMatrix<Scalar>& s) {
  return detail::symmetric_eigenvalues(s.matrix());
}

enum class SpectralFn { sqrt, log, exp, pow };

/// Scalar function applied to the spectrum. `exp` accepts any symmetric
/// input; the others require positive eigenvalues.
template <typename Scalar>
struct MatrixFunction {
  SpectralFn kind = SpectralFn::sqrt;
  Scalar exponent = 1;

  static MatrixFunction sqrt() { return {SpectralFn::sqrt, Scalar(0.5)}; }
  static MatrixFunction log() { return {SpectralFn::log, Scalar(0)}; }
  static MatrixFunction exp() { return {SpectralFn::exp, Scalar(0)}; }
  static MatrixFunction pow(Scalar t) { return {SpectralFn::pow, t}; }

  Scalar operator()(Scalar x) const {
    using std::exp;
    using std::log;
    using std::pow;
    using std::sqrt;
    switch (kind) {
      case SpectralFn::sqrt: return sqrt(x);
      case SpectralFn::log: return log(x);
      case SpectralFn::exp: return exp(x);
      case SpectralFn::pow: return pow(x, exponent);
    }
    return x;
  }
};

/// V f(D) V^T.
template <typename Scalar>
SymMatrix<Scalar> matfun(const SymMatrix<Scalar>& s, const MatrixFunction<Scalar>& f) {
  const EigenDecomp<Scalar> d = eigh(s);
  if (f.kind != SpectralFn::exp && !(d.values(0) > Scalar(0))) {
    throw NotPositiveDefinite("matrix function requires a positive definite argument");
  }
  const Vec<Scalar> fv = d.values.unaryExpr(f);
  return SymMatrix<Scalar>(d.vectors * fv.asDiagonal() * d.vectors.transpose());
}

template <typename Scalar>
SymMatrix<Scalar> sqrtm(const SymMatrix<Scalar>& s) {
  return matfun(s, MatrixFunction<Scalar>::sqrt());
}
template <typename Scalar>
SymMatrix<Scalar> logm(const SymMatrix<Scalar>& s) {
  return matfun(s, MatrixFunction<Scalar>::log());
}
template <typename Scalar>
SymMatrix<Scalar> expm(const SymMatrix<Scalar>& s) {
  return matfun(s, MatrixFunction<Scalar>::exp());
}
template <typename Scalar>
SymMatrix<Scalar> powm(const SymMatrix<Scalar>& s, std::type_identity_t<Scalar> t) {
  return matfun(s, MatrixFunction<Scalar>::pow(t));
}

enum class EigenMethod { full, iterative };

template <typename Scalar>
struct PencilExtremes {
  Scalar lambda_min = 1;
  Scalar lambda_max = 1;
  EigenMethod method = EigenMethod::full;
  int iterations = 0;  // Krylov steps spent (iterative path only)
};

struct IterativeOptions {
  double rel_residual = 1e-8;
  int max_iter = 5000;
};

namespace detail {

/// Symmetric reduction L^{-1} B L^{-T} of the pencil (B, A) with A = L L^T.
/// Its spectrum equals that of B A^{-1} and of A^{-1/2} B A^{-1/2}.
template <typename Scalar>
Mat<Scalar> reduce_pencil(const SymMatrix<Scalar>& b, const SpdMatrix<Scalar>& a) {
  if (a.dim() != b.dim()) throw DimensionMismatch("pencil operands differ in dimension");
  const auto lower = a.cholesky_factor().template triangularView<Eigen::Lower>();
  Mat<Scalar> half = lower.solve(b.matrix());
  Mat<Scalar> c = lower.solve(half.transpose());
  return (c + c.transpose()) / Scalar(2);
}

template <typename Scalar>
Vec<Scalar> krylov_start_vector(Index n) {
  Vec<Scalar> v(n);
  // Deterministic, with no zero or repeated pattern that could be orthogonal
  // to a structured dominant eigenvector.
  for (Index i = 0; i < n; ++i) {
    v(i) = Scalar(1) + Scalar(0.5) * std::sin(Scalar(1.3) * Scalar(i) + Scalar(0.7));
  }
  return v.normalized();
}

/// Largest eigenvalue of a symmetric positive operator by Lanczos with full
/// reorthogonalization, stopping when the Ritz residual |beta_k s_k| falls
/// below rel_residual * theta.
template <typename Scalar, typename Apply>
std::pair<Scalar, int> lanczos_top(Apply&& apply, Index n, const IterativeOptions& opt) {
  const Index cap = std::min<Index>(n, opt.max_iter);
  Mat<Scalar> q(n, cap);
  Vec<Scalar> alpha(cap), beta(cap);
  q.col(0) = krylov_start_vector<Scalar>(n);
  Vec<Scalar> w(n);
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> tri;
  for (Index j = 0; j < cap; ++j) {
    apply(q.col(j), w);
    alpha(j) = q.col(j).dot(w);
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) {
      w.noalias() -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
    }
    beta(j) = w.norm();

    tri.computeFromTridiagonal(alpha.head(j + 1), beta.head(j), Eigen::ComputeEigenvectors);
    if (tri.info() != Eigen::Success) throw NoConvergence("tridiagonal eigensolver failed");
    const Scalar theta = tri.eigenvalues()(j);
    const Scalar residual = beta(j) * std::abs(tri.eigenvectors()(j, j));
    if (residual <= Scalar(opt.rel_residual) * std::abs(theta) || j + 1 == n) {
      return {theta, static_cast<int>(j + 1)};
    }
    if (j + 1 < cap) q.col(j + 1) = w / beta(j);
  }
  throw NoConvergence("Lanczos exceeded " + std::to_string(cap) + " steps");
}

}  // namespace detail

/// Extremal roots of det(B - lambda A) = 0. The full method decomposes the
/// reduced matrix L^{-1} B L^{-T}; the iterative method runs Lanczos on it and
/// on its inverse L^T B^{-1} L, both applied through the Cholesky factors of A
/// and B without forming either matrix.
template <typename Scalar>
PencilExtremes<Scalar> gen_eig_extremes(const SpdMatrix<Scalar>& b, const SpdMatrix<Scalar>& a,
                                        EigenMethod method = EigenMethod::full,
                                        const IterativeOptions& opt = {}) {
  if (a.dim() != b.dim()) throw DimensionMismatch("pencil operands differ in dimension");
  const Index n = a.dim();
  PencilExtremes<Scalar> out;
  if (method == EigenMethod::full || n == 1) {
    const Vec<Scalar> vals = detail::symmetric_eigenvalues(detail::reduce_pencil<Scalar>(b, a));
    out.lambda_min = vals(0);
    out.lambda_max = vals(n - 1);
    return out;
  }

  const auto la = a.cholesky_factor().template triangularView<Eigen::Lower>();
  const auto lb = b.cholesky_factor().template triangularView<Eigen::Lower>();
  auto [top, top_iters] = detail::lanczos_top<Scalar>(
      [&](const auto& v, Vec<Scalar>& w) {
        w = la.transpose().solve(v);
        w = b.matrix() * w;
        la.solveInPlace(w);
      },
      n, opt);
  auto [inv_top, inv_iters] = detail::lanczos_top<Scalar>(
      [&](const auto& v, Vec<Scalar>& w) {
        w = la * v;
        lb.solveInPlace(w);
        lb.transpose().solveInPlace(w);
        w = la.transpose() * w;
      },
      n, opt);

  out.method = EigenMethod::iterative;
  out.lambda_max = top;
  out.lambda_min = Scalar(1) / inv_top;
  out.iterations = top_iters + inv_iters;
  return out;
}

/// A <= B in the Loewner order: lambda_min(B - A) >= -tol * max(1, ||B - A||_inf).
template <typename Scalar>
bool loewner_leq(const SymMatrix<Scalar>& a, const SymMatrix<Scalar>& b,
                 std::type_identity_t<Scalar> tol = 0) {
  if (a.dim() != b.dim()) throw DimensionMismatch("Loewner comparison of different dimensions");
  const Mat<Scalar> diff = b.matrix() - a.matrix();
  return detail::min_eigenvalue<Scalar>(diff) >= -tol * tolerance_scale(norm_inf(diff));
}

/// Spectrum of c1 M + c2 I computed as {c1 lambda_i(M) + c2}, ascending.
template <typename Scalar>
Vec<Scalar> shift_spectrum_check(const SymMatrix<Scalar>& m, std::type_identity_t<Scalar> c1,
                                 std::type_identity_t<Scalar> c2) {
  Vec<Scalar> out = (c1 * eigvalsh(m).array() + c2).matrix();
  std::sort(out.data(), out.data() + out.size());
  return out;
}

}  // namespace midrange
