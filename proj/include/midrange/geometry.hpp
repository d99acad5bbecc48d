#pragma once

// Affine-invariant geometry of the positive definite cone: the d_1, d_2 and
// Thompson (d_inf) distances, two-point midranges and means, Riemannian and
// Nussbaum geodesics, the Karcher mean and the block-PSD ordering test.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "midrange/matcore.hpp"

namespace midrange {

enum class GeodesicKind { riemannian, nussbaum };

/// Schatten gauge used by d_Phi: p = 1, 2 or infinity.
enum class DistanceKind { d1, d2, dinf };

namespace detail {

/// Pencil extremes with the iterative engine falling back to the full
/// decomposition on a near-degenerate spectrum.
template <typename Scalar>
PencilExtremes<Scalar> pencil_extremes(const SpdMatrix<Scalar>& b, const SpdMatrix<Scalar>& a,
                                       EigenMethod method) {
  if (method == EigenMethod::iterative) {
    try {
      return gen_eig_extremes(b, a, EigenMethod::iterative);
    } catch (const NoConvergence&) {
    }
  }
  return gen_eig_extremes(b, a, EigenMethod::full);
}

template <typename Scalar>
void require_same_dim(const SymMatrix<Scalar>& a, const SymMatrix<Scalar>& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("operands differ in dimension");
}

/// L V D^{t/2} where A = L L^T and L^{-1} B L^{-T} = V D V^T; the Riemannian
/// geodesic point is this factor times its transpose.
template <typename Scalar>
Mat<Scalar> riemannian_factor(const SpdMatrix<Scalar>& a, const SpdMatrix<Scalar>& b, Scalar t) {
  const EigenDecomp<Scalar> d = eigh(SymMatrix<Scalar>(reduce_pencil<Scalar>(b, a)));
  if (!(d.values(0) > Scalar(0))) throw NotPositiveDefinite("reduced pencil lost definiteness");
  const Vec<Scalar> scale = d.values.array().pow(t / Scalar(2)).matrix();
  return a.cholesky_factor().template triangularView<Eigen::Lower>() *
         (d.vectors * scale.asDiagonal());
}

}  // namespace detail

/// d_inf(A, B) = max{log lambda_max(B A^-1), -log lambda_min(B A^-1)}.
template <typename Scalar>
Scalar thompson_distance(const SpdMatrix<Scalar>& a, const SpdMatrix<Scalar>& b,
                         EigenMethod method = EigenMethod::full) {
  detail::require_same_dim<Scalar>(a, b);
  const auto ex = detail::pencil_extremes(b, a, method);
  using std::log;
  return std::max({Scalar(0), log(ex.lambda_max), -log(ex.lambda_min)});
}

/// ||log A^{-1/2} B A^{-1/2}||_Phi for the Schatten 1, 2 and infinity gauges.
template <typename Scalar>
Scalar dphi_distance(const SpdMatrix<Scalar>& a, const SpdMatrix<Scalar>& b, DistanceKind kind) {
  detail::require_same_dim<Scalar>(a, b);
  const Vec<Scalar> vals = detail::symmetric_eigenvalues(detail::reduce_pencil<Scalar>(b, a));
  if (!(vals(0) > Scalar(0))) throw NotPositiveDefinite("reduced pencil lost definiteness");
  const auto logs = vals.array().log();
  switch (kind) {
    case DistanceKind::d1: return logs.abs().sum();
    case DistanceKind::d2: return std::sqrt(logs.square().sum());
    case DistanceKind::dinf: return logs.abs().maxCoeff();
  }
  return 0;
}

template <typename Scalar>
Scalar riemannian_distance(const SpdMatrix<Scalar>& a, const SpdMatrix<Scalar>& b) {
  return dphi_distance(a, b, DistanceKind::d2);
}

/// Frobenius distance ||A - B||_F.
template <typename Scalar>
Scalar euclidean_distance(const SymMatrix<Scalar>& a, const SymMatrix<Scalar>& b) {
  detail::require_same_dim(a, b);
  return (a.matrix() - b.matrix()).norm();
}

/// The closed-form Thompson midpoint
///   A*B = (B + sqrt(lambda_min lambda_max) A) / (sqrt(lambda_min) + sqrt(lambda_max))
/// with lambda the extremal roots of the pencil (B, A). Only a linear
/// combination of the inputs is formed; no matrix square root is taken.
template <typename Scalar>
SpdMatrix<Scalar> star_midrange(const SpdMatrix<Scalar>& a, const SpdMatrix<Scalar>& b,
                                EigenMethod method = EigenMethod::full) {
  detail::require_same_dim<Scalar>(a, b);
  const auto ex = detail::pencil_extremes(b, a, method);
  using std::sqrt;
  const Scalar lo = sqrt(ex.lambda_min);
  const Scalar hi = sqrt(ex.lambda_max);
  return SpdMatrix<Scalar>(Mat<Scalar>((b.matrix() + (lo * hi) * a.matrix()) / (lo + hi)));
}

/// A # B = A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}.
template <typename Scalar>
SpdMatrix<Scalar> geometric_mean(const SpdMatrix<Scalar>& a, const SpdMatrix<Scalar>& b) {
  detail::require_same_dim<Scalar>(a, b);
  const Mat<Scalar> w = detail::riemannian_factor(a, b, Scalar(0.5));
  return SpdMatrix<Scalar>(Mat<Scalar>(w * w.transpose()));
}

/// Second Thompson midpoint: a scalar multiple of A + B chosen by the sign of
/// log(lambda_min lambda_max).
template <typename Scalar>
SpdMatrix<Scalar> diamond_midpoint(const SpdMatrix<Scalar>& a, const SpdMatrix<Scalar>& b,
                                   EigenMethod method = EigenMethod::full) {
  detail::require_same_dim<Scalar>(a, b);
  const auto ex = detail::pencil_extremes(b, a, method);
  const Scalar lam = ex.lambda_min * ex.lambda_max >= Scalar(1) ? ex.lambda_max : ex.lambda_min;
  const Scalar factor = std::sqrt(lam) / (Scalar(1) + lam);
  return SpdMatrix<Scalar>(Mat<Scalar>(factor * (a.matrix() + b.matrix())));
}

/// Point at parameter t in [0, 1] on the Riemannian geodesic or on the
/// Nussbaum projective line from A to B.
template <typename Scalar>
SpdMatrix<Scalar> geodesic_point(const SpdMatrix<Scalar>& a, const SpdMatrix<Scalar>& b,
                                 std::type_identity_t<Scalar> t, GeodesicKind kind,
                                 EigenMethod method = EigenMethod::full) {
  detail::require_same_dim<Scalar>(a, b);
  if (!(t >= Scalar(0) && t <= Scalar(1))) {
    throw std::domain_error("geodesic parameter must lie in [0, 1]");
  }
  if (kind == GeodesicKind::riemannian) {
    const Mat<Scalar> w = detail::riemannian_factor(a, b, t);
    return SpdMatrix<Scalar>(Mat<Scalar>(w * w.transpose()));
  }

  const auto ex = detail::pencil_extremes(b, a, method);
  using std::pow;
  const Scalar lmin = ex.lambda_min;
  const Scalar lmax = ex.lambda_max;
  // |lmax - lmin| <= 1e-12 lmax is treated as the proportional branch.
  if (std::abs(lmax - lmin) <= Scalar(1e-12) * lmax) {
    return SpdMatrix<Scalar>(Mat<Scalar>(pow(lmin, t) * a.matrix()));
  }
  const Scalar pmax = pow(lmax, t);
  const Scalar pmin = pow(lmin, t);
  const Scalar cb = (pmax - pmin) / (lmax - lmin);
  const Scalar ca = (lmax * pmin - lmin * pmax) / (lmax - lmin);
  return SpdMatrix<Scalar>(Mat<Scalar>(cb * b.matrix() + ca * a.matrix()));
}

template <typename Scalar>
SpdMatrix<Scalar> arithmetic_mean(std::span<const SpdMatrix<Scalar>> ys) {
  if (ys.empty()) throw std::invalid_argument("mean of an empty collection");
  Mat<Scalar> sum = Mat<Scalar>::Zero(ys[0].dim(), ys[0].dim());
  for (const auto& y : ys) {
    detail::require_same_dim<Scalar>(ys[0], y);
    sum += y.matrix();
  }
  return SpdMatrix<Scalar>(Mat<Scalar>(sum / Scalar(ys.size())));
}

template <typename Scalar>
SpdMatrix<Scalar> arithmetic_mean(const std::vector<SpdMatrix<Scalar>>& ys) {
  return arithmetic_mean(std::span<const SpdMatrix<Scalar>>(ys));
}

struct KarcherOptions {
  double tol = 1e-8;
  int max_iter = 1000;
};

/// Riemannian center of mass by the unit-step fixed point
///   X <- X^{1/2} exp(mean_i log(X^{-1/2} Y_i X^{-1/2})) X^{1/2},
/// started from the arithmetic mean.
template <typename Scalar>
SpdMatrix<Scalar> karcher_mean(std::span<const SpdMatrix<Scalar>> ys, const KarcherOptions& opt = {}) {
  SpdMatrix<Scalar> x = arithmetic_mean(ys);
  const Index n = x.dim();
  for (int it = 0; it <= opt.max_iter; ++it) {
    const EigenDecomp<Scalar> d = eigh(x.sym());
    const Mat<Scalar> half = d.vectors * d.values.cwiseSqrt().asDiagonal() * d.vectors.transpose();
    const Mat<Scalar> inv_half =
        d.vectors * d.values.cwiseSqrt().cwiseInverse().asDiagonal() * d.vectors.transpose();
    Mat<Scalar> grad = Mat<Scalar>::Zero(n, n);
    for (const auto& y : ys) {
      grad += logm(SymMatrix<Scalar>(Mat<Scalar>(inv_half * y.matrix() * inv_half))).matrix();
    }
    grad /= Scalar(ys.size());
    if (grad.norm() <= Scalar(opt.tol)) return x;
    if (it == opt.max_iter) break;
    const Mat<Scalar> step = expm(SymMatrix<Scalar>(grad)).matrix();
    x = SpdMatrix<Scalar>(Mat<Scalar>(half * step * half));
  }
  throw NoConvergence("Karcher mean iteration exceeded " + std::to_string(opt.max_iter) +
                      " steps");
}

template <typename Scalar>
SpdMatrix<Scalar> karcher_mean(const std::vector<SpdMatrix<Scalar>>& ys, const KarcherOptions& opt = {}) {
  return karcher_mean(std::span<const SpdMatrix<Scalar>>(ys), opt);
}

/// [[A, X], [X, B]] >= 0 up to -tol * max(1, ||block||_inf). For symmetric X
/// this holds exactly when X <= A # B.
template <typename Scalar>
bool block_psd_certificate(const SymMatrix<Scalar>& a, const SymMatrix<Scalar>& b,
                           const SymMatrix<Scalar>& x, std::type_identity_t<Scalar> tol = 1e-8) {
  detail::require_same_dim(a, b);
  detail::require_same_dim(a, x);
  const Index n = a.dim();
  Mat<Scalar> block(2 * n, 2 * n);
  block << a.matrix(), x.matrix(), x.matrix(), b.matrix();
  return detail::min_eigenvalue<Scalar>(block) >= -tol * tolerance_scale(norm_inf(block));
}

}  // namespace midrange
