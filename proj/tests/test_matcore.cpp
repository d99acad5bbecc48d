#include <doctest.h>

#include <random>

#include "midrange/matcore.hpp"
#include "oracles.hpp"

using namespace midrange;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd diag(std::initializer_list<double> d) {
  VectorXd v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v(i++) = x;
  return v.asDiagonal();
}

double inf_norm(const MatrixXd& m) { return norm_inf(m); }

}  // namespace

TEST_CASE("construction symmetrizes and rejects bad input") {
  MatrixXd m(2, 2);
  m << 1, 2, 4, 3;
  const SymMatrixd s(m);
  CHECK(s(0, 1) == 3.0);
  CHECK(s(1, 0) == 3.0);
  CHECK_THROWS_AS(SymMatrixd(MatrixXd(2, 3)), DimensionMismatch);
  m(0, 0) = std::nan("");
  CHECK_THROWS_AS(SymMatrixd{m}, Error);
}

TEST_CASE("cholesky") {
  CHECK(cholesky(SymMatrixd::identity(2)).isApprox(MatrixXd::Identity(2, 2)));
  CHECK(cholesky(SymMatrixd(diag({4, 9}))).isApprox(diag({2, 3})));
  MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(cholesky(SymMatrixd(bad)), NotPositiveDefinite);
  CHECK_THROWS_AS(SpdMatrixd{bad}, NotPositiveDefinite);

  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const MatrixXd a = oracle::random_spd(rng, 6);
    const MatrixXd l = cholesky(SymMatrixd(a));
    CHECK(inf_norm(l * l.transpose() - a) <= 1e-10 * inf_norm(a));
    CHECK((l.diagonal().array() > 0).all());
    CHECK(l.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().isZero());
  }
}

TEST_CASE("eigh") {
  const auto d = eigh(SymMatrixd(diag({3, 1})));
  CHECK(d.values(0) == doctest::Approx(1));
  CHECK(d.values(1) == doctest::Approx(3));
  CHECK(std::abs(d.vectors(1, 0)) == doctest::Approx(1));

  MatrixXd m(2, 2);
  m << 2, 1, 1, 2;
  const VectorXd v = eigvalsh(SymMatrixd(m));
  CHECK(v(0) == doctest::Approx(1));
  CHECK(v(1) == doctest::Approx(3));
  CHECK(eigvalsh(SymMatrixd::identity(4)).isApprox(VectorXd::Ones(4)));

  std::mt19937_64 rng(3);
  for (int n : {1, 2, 5, 12}) {
    const MatrixXd s = oracle::random_symmetric(rng, n);
    const auto e = eigh(SymMatrixd(s));
    const double scale = std::max(1.0, inf_norm(s));
    CHECK(inf_norm(e.vectors.transpose() * e.vectors - MatrixXd::Identity(n, n)) <= 1e-10 * n);
    CHECK(inf_norm(e.vectors * e.values.asDiagonal() * e.vectors.transpose() - s) <= 1e-8 * scale);
    const VectorXd ref = oracle::jacobi(s).values;
    CHECK((e.values - ref).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    for (int i = 1; i < n; ++i) CHECK(e.values(i - 1) <= e.values(i));
  }
}

TEST_CASE("matrix functions") {
  CHECK(logm(SymMatrixd::identity(3)).matrix().isZero(1e-15));
  CHECK(sqrtm(SymMatrixd(diag({4, 9}))).matrix().isApprox(diag({2, 3})));
  CHECK(powm(SymMatrixd(diag({4, 9})), 0.5).matrix().isApprox(diag({2, 3})));
  CHECK(matfun(SymMatrixd(diag({4, 9})), MatrixFunction<double>::pow(2.0)).matrix().isApprox(diag({16, 81})));

  MatrixXd indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  CHECK_THROWS_AS(logm(SymMatrixd(indefinite)), NotPositiveDefinite);
  CHECK_THROWS_AS(sqrtm(SymMatrixd(indefinite)), NotPositiveDefinite);
  CHECK_NOTHROW(expm(SymMatrixd(indefinite)));

  std::mt19937_64 rng(5);
  for (int k = 0; k < 30; ++k) {
    const MatrixXd a = oracle::random_spd(rng, 4);
    const SymMatrixd s(a);
    const double tol = 1e-8 * inf_norm(a);
    CHECK(inf_norm(expm(logm(s)).matrix() - a) <= tol);
    const MatrixXd r = sqrtm(s).matrix();
    CHECK(inf_norm(r * r - a) <= tol);
    const MatrixXd ref = oracle::spectral(oracle::jacobi(a), [](double x) { return std::log(x); });
    CHECK(inf_norm(logm(s).matrix() - ref) <= 1e-8 * std::max(1.0, inf_norm(ref)));
  }
}

TEST_CASE("generalized extremes") {
  const SpdMatrixd i2 = SpdMatrixd::identity(2);
  const SpdMatrixd d49(diag({4, 9}));
  for (auto method : {EigenMethod::full, EigenMethod::iterative}) {
    const auto e = gen_eig_extremes(d49, i2, method);
    CHECK(e.lambda_min == doctest::Approx(4).epsilon(1e-10));
    CHECK(e.lambda_max == doctest::Approx(9).epsilon(1e-10));
  }

  std::mt19937_64 rng(7);
  const SpdMatrixd a(oracle::random_spd(rng, 5));
  const SpdMatrixd b2(MatrixXd(2.0 * a.matrix()));
  for (auto method : {EigenMethod::full, EigenMethod::iterative}) {
    const auto e = gen_eig_extremes(b2, a, method);
    CHECK(e.lambda_min == doctest::Approx(2).epsilon(1e-10));
    CHECK(e.lambda_max == doctest::Approx(2).epsilon(1e-10));
  }

  for (int k = 0; k < 30; ++k) {
    const int n = 2 + k % 6;
    const MatrixXd am = oracle::random_spd(rng, n);
    const MatrixXd bm = oracle::random_spd(rng, n);
    const SpdMatrixd A(am), B(bm);
    const auto full = gen_eig_extremes(B, A, EigenMethod::full);
    const auto it = gen_eig_extremes(B, A, EigenMethod::iterative);
    CHECK(it.method == EigenMethod::iterative);
    CHECK(std::abs(it.lambda_max - full.lambda_max) <= 1e-8 * full.lambda_max);
    CHECK(std::abs(it.lambda_min - full.lambda_min) <= 1e-8 * full.lambda_min);
    CHECK(0 < full.lambda_min);
    CHECK(full.lambda_min <= full.lambda_max);

    const VectorXd ref = oracle::pencil_values(bm, am);
    CHECK(std::abs(full.lambda_max - ref.maxCoeff()) <= 1e-8 * ref.maxCoeff());
    CHECK(std::abs(full.lambda_min - ref.minCoeff()) <= 1e-8 * ref.minCoeff());

    // det(B - lambda A) = 0 through a residual check on the reduced vector.
    for (double lam : {full.lambda_min, full.lambda_max}) {
      Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(bm, am);
      Eigen::Index idx = 0;
      (ges.eigenvalues().array() - lam).abs().minCoeff(&idx);
      const VectorXd v = ges.eigenvectors().col(idx);
      CHECK((bm * v - lam * am * v).norm() <= 1e-8 * bm.norm() * v.norm());
    }

    // reciprocal pencil
    const auto rev = gen_eig_extremes(A, B, EigenMethod::full);
    CHECK(std::abs(full.lambda_max - 1.0 / rev.lambda_min) <= 1e-10 * full.lambda_max);

    // congruence invariance
    const MatrixXd c = oracle::random_invertible(rng, n);
    const auto cong = gen_eig_extremes(SpdMatrixd(MatrixXd(c * bm * c.transpose())),
                                       SpdMatrixd(MatrixXd(c * am * c.transpose())));
    CHECK(std::abs(cong.lambda_max - full.lambda_max) <= 1e-8 * full.lambda_max);
    CHECK(std::abs(cong.lambda_min - full.lambda_min) <= 1e-8 * full.lambda_min);
  }
}

TEST_CASE("loewner order") {
  const SymMatrixd i2 = SymMatrixd::identity(2);
  CHECK(loewner_leq(i2, SymMatrixd(MatrixXd(2 * MatrixXd::Identity(2, 2)))));
  CHECK_FALSE(loewner_leq(SymMatrixd(diag({1, 3})), SymMatrixd(diag({2, 2}))));
  CHECK(loewner_leq(i2, i2));
  CHECK_THROWS_AS(loewner_leq(i2, SymMatrixd::identity(3)), DimensionMismatch);

  std::mt19937_64 rng(9);
  int comparable = 0;
  for (int k = 0; k < 100; ++k) {
    const MatrixXd a = oracle::random_spd(rng, 3);
    const MatrixXd b = a + oracle::random_spd(rng, 3, 0.0);
    const MatrixXd x = oracle::random_invertible(rng, 3);
    REQUIRE(loewner_leq(SymMatrixd(a), SymMatrixd(b), 1e-12));
    comparable += loewner_leq(SymMatrixd(MatrixXd(x * a * x.transpose())),
                              SymMatrixd(MatrixXd(x * b * x.transpose())), 1e-10);
  }
  CHECK(comparable == 100);
}

TEST_CASE("shifted spectrum") {
  CHECK(shift_spectrum_check(SymMatrixd::identity(3), 2.0, 3.0).isApprox(VectorXd::Constant(3, 5)));
  VectorXd expect(2);
  expect << 2, 3;
  CHECK(shift_spectrum_check(SymMatrixd(diag({1, 2})), 1.0, 1.0).isApprox(expect));
  CHECK(shift_spectrum_check(SymMatrixd(diag({4, 9})), 0.2, 1.2).isApprox(expect));

  // agrees with the spectrum of the formed matrix c1 M + c2 I
  std::mt19937_64 rng(13);
  for (int k = 0; k < 20; ++k) {
    const MatrixXd m = oracle::random_symmetric(rng, 4);
    const VectorXd direct = oracle::jacobi(0.7 * m + 1.9 * MatrixXd::Identity(4, 4)).values;
    CHECK((shift_spectrum_check(SymMatrixd(m), 0.7, 1.9) - direct).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("single precision instantiation") {
  Eigen::MatrixXf m(2, 2);
  m << 4, 0, 0, 9;
  const SpdMatrix<float> b(m);
  const auto e = gen_eig_extremes(b, SpdMatrix<float>::identity(2));
  CHECK(e.lambda_max == doctest::Approx(9.0f));
  CHECK(sqrtm<float>(b).matrix()(1, 1) == doctest::Approx(3.0f));
}
