#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "midrange/nsolver.hpp"
#include "oracles.hpp"

using namespace midrange;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

SpdMatrixd sym2(double a, double b, double c) {
  MatrixXd m(2, 2);
  m << a, b, b, c;
  return SpdMatrixd(m);
}

SpdMatrixd diag(double a, double b) { return SpdMatrixd::diagonal(Vector2d(a, b)); }

std::vector<SpdMatrixd> three_matrices() {
  return {sym2(0.95, -0.6, 1.1), sym2(1.0, 0.5, 2.1), sym2(2.5, -0.2, 1.2)};
}

std::vector<SpdMatrixd> random_set(std::mt19937_64& rng, int n, int count) {
  std::vector<SpdMatrixd> ys;
  for (int i = 0; i < count; ++i) ys.emplace_back(oracle::random_spd(rng, n));
  return ys;
}

double gap(const SymMatrixd& a, const SymMatrixd& b) { return norm_inf(a.matrix() - b.matrix()); }

}  // namespace

TEST_CASE("config validation") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.bisect_tol = 1e-17;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.stall_window = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.feas_tol = -1;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("bounds") {
  const std::vector<SpdMatrixd> one{SpdMatrixd::identity(2)};
  const CostBounds b1 = bounds(one);
  CHECK(b1.lower == 0);
  CHECK(b1.upper == 0);

  const std::vector<SpdMatrixd> pair{SpdMatrixd::identity(2), diag(4, 9)};
  const CostBounds b2 = bounds(pair);
  CHECK(b2.lower == doctest::Approx(0.5 * std::log(9.0)));
  CHECK(b2.upper == doctest::Approx(std::log(9.0)));

  const CostBounds b3 = bounds(three_matrices());
  CHECK(std::abs(b3.lower - 0.7880) <= 5e-5);
  CHECK(b3.lower <= b3.upper);
  CHECK(b3.upper <= 2 * b3.lower);
  CHECK(b3.pairwise.rows() == 3);

  std::vector<SpdMatrixd> mixed{SpdMatrixd::identity(2), SpdMatrixd::identity(3)};
  CHECK_THROWS_AS(bounds(mixed), DimensionMismatch);
}

TEST_CASE("projections") {
  const SpdMatrixd i2 = SpdMatrixd::identity(2);
  const SymMatrixd one = SymMatrixd::identity(2);
  CHECK(gap(project_upper(one, i2, 2), one) == 0);
  const SymMatrixd p = project_upper(SymMatrixd::diagonal(Vector2d(3, 1)), i2, 2);
  CHECK(gap(p, SymMatrixd::diagonal(Vector2d(2, 1))) <= 1e-12);
  CHECK(gap(project_upper(p, i2, 2), p) <= 1e-12);

  CHECK(gap(project_lower(one, i2, 0.5), one) == 0);
  const SymMatrixd q = project_lower(SymMatrixd::diagonal(Vector2d(0.1, 1)), i2, 0.5);
  CHECK(gap(q, SymMatrixd::diagonal(Vector2d(0.5, 1))) <= 1e-12);
  CHECK(gap(project_lower(q, i2, 0.5), q) <= 1e-12);

  // projection is the Frobenius-nearest point: compare with a perturbed feasible point
  std::mt19937_64 rng(29);
  for (int k = 0; k < 10; ++k) {
    const SpdMatrixd y(oracle::random_spd(rng, 3));
    const SymMatrixd x(oracle::random_symmetric(rng, 3) * 3);
    const SymMatrixd px = project_upper(x, y, 1.0);
    CHECK(loewner_leq<double>(px, y, 1e-10));
    const double d = (px.matrix() - x.matrix()).norm();
    for (int j = 0; j < 5; ++j) {
      const MatrixXd other = px.matrix() - 0.1 * oracle::random_spd(rng, 3, 0.0);
      CHECK(d <= (other - x.matrix()).norm() + 1e-12);
    }
  }
}

TEST_CASE("dykstra feasibility") {
  SolverConfig cfg;
  const std::vector<SpdMatrixd> one{sym2(2, 0.3, 1)};
  const auto r1 = feasibility(one, 0.0, cfg, one[0].sym());
  REQUIRE(std::holds_alternative<Feasible>(r1));
  CHECK(gap(std::get<Feasible>(r1).X, one[0]) <= 1e-12);

  const std::vector<SpdMatrixd> pair{SpdMatrixd::identity(2), diag(4, 9)};
  CHECK(constraint_violation(pair, std::log(3.0), SymMatrixd::diagonal(Vector2d(2, 3))) <= 1e-12);
  const auto r2 = feasibility(pair, std::log(3.0), cfg);
  REQUIRE(std::holds_alternative<Feasible>(r2));
  CHECK(constraint_violation(pair, std::log(3.0), std::get<Feasible>(r2).X) <= cfg.feas_tol);
  const auto r3 = feasibility(pair, 0.9 * 0.5 * std::log(9.0), cfg);
  REQUIRE(std::holds_alternative<Infeasible>(r3));
  CHECK(std::get<Infeasible>(r3).residual > cfg.feas_tol);
}

TEST_CASE("interior point feasibility") {
  SolverConfig cfg;
  const std::vector<SpdMatrixd> pair{SpdMatrixd::identity(2), diag(4, 9)};
  const auto ok = interior_feasibility(pair, std::log(3.0), cfg);
  REQUIRE(std::holds_alternative<Feasible>(ok));
  // any X = diag(x, 3) with 4/3 <= x <= 3 is feasible here
  const SymMatrixd& fx = std::get<Feasible>(ok).X;
  CHECK(constraint_violation(pair, std::log(3.0), fx) <= cfg.feas_tol);
  CHECK(fx(1, 1) == doctest::Approx(3).epsilon(1e-6));
  CHECK(std::abs(fx(0, 1)) <= 1e-6);
  CHECK(std::holds_alternative<Infeasible>(interior_feasibility(pair, 0.9 * std::log(3.0), cfg)));

  const MarginResult m = lmi_margin(pair, 1.5, BarrierOptions{1e-10, 2000, false});
  CHECK(m.converged);
  CHECK(m.margin <= m.margin_bound + 1e-12);
  CHECK(m.margin > 0);

  // balance_scale never increases the cost
  std::mt19937_64 rng(31);
  const auto ys = random_set(rng, 3, 5);
  const SpdMatrixd x(oracle::random_spd(rng, 3));
  CHECK(midrange_cost(balance_scale(x, ys), ys) <= midrange_cost(x, ys) + 1e-12);
}

TEST_CASE("feasibility is monotone in t") {
  std::mt19937_64 rng(37);
  SolverConfig cfg;
  for (int k = 0; k < 5; ++k) {
    const auto ys = random_set(rng, 3, 4);
    const CostBounds b = bounds(ys);
    std::uniform_real_distribution<double> u(b.lower, b.upper);
    for (int j = 0; j < 4; ++j) {
      double t1 = u(rng), t2 = u(rng);
      if (t1 > t2) std::swap(t1, t2);
      for (auto engine : {FeasibilityEngine::interior_point, FeasibilityEngine::dykstra}) {
        const auto r1 = engine == FeasibilityEngine::dykstra ? feasibility(ys, t1, cfg)
                                                             : interior_feasibility(ys, t1, cfg);
        if (!std::holds_alternative<Feasible>(r1)) continue;
        const auto r2 = engine == FeasibilityEngine::dykstra ? feasibility(ys, t2, cfg)
                                                             : interior_feasibility(ys, t2, cfg);
        CHECK(std::holds_alternative<Feasible>(r2));
      }
    }
  }
}

TEST_CASE("solve: two points") {
  std::mt19937_64 rng(41);
  for (int k = 0; k < 5; ++k) {
    const auto ys = random_set(rng, 3, 2);
    const MidrangeSolution s = solve_midrange(ys);
    const double half = 0.5 * thompson_distance(ys[0], ys[1]);
    CHECK(s.status == SolveStatus::converged);
    CHECK(std::abs(s.t_star - half) <= SolverConfig{}.bisect_tol);
    CHECK(std::abs(thompson_distance(s.X, ys[0]) - half) <= 1e-5);
    CHECK(std::abs(thompson_distance(s.X, ys[1]) - half) <= 1e-5);
    CHECK(s.active.size() == 2);
    CHECK(s.two_active_check_passed);
    const auto e = star_midrange(ys[0], ys[1]);
    CHECK(active_set(e, half, ys, 1e-6).size() == 2);
  }
}

TEST_CASE("solve: three matrices") {
  const auto ys = three_matrices();
  const MidrangeSolution s = solve_midrange(ys);
  CHECK(s.status == SolveStatus::converged);
  CHECK(std::abs(s.t_star - 0.7901) <= 2e-3);
  CHECK(s.t_star > s.lower + 1e-4);
  CHECK(std::abs(s.X(0, 0) - 1.3154) <= 5e-3);
  CHECK(std::abs(s.X(0, 1) + 0.5321) <= 5e-3);
  CHECK(std::abs(s.X(1, 1) - 1.6217) <= 5e-3);
  CHECK(s.active.size() == 3);
  const bool up = std::any_of(s.active.begin(), s.active.end(), [](auto a) { return a.has_upper(); });
  const bool lo = std::any_of(s.active.begin(), s.active.end(), [](auto a) { return a.has_lower(); });
  CHECK(up);
  CHECK(lo);
  CHECK(s.warnings.empty());
  for (const auto& y : ys) CHECK(thompson_distance(s.X, y) <= s.t_star + 10 * SolverConfig{}.feas_tol);
  CHECK_FALSE(ordered_shortcut(ys).has_value());

  const ConvexCertificate c = convex_form_report(s, ys);
  CHECK(c.tight);
  CHECK(c.xi == doctest::Approx(std::exp(s.t_star)));
  CHECK(c.tau * c.xi == doctest::Approx(1));
  CHECK_THROWS_AS(convex_form_report(s.X, s.t_star - 10 * SolverConfig{}.bisect_tol, ys, 1e-8),
                  CertificateViolation);
}

TEST_CASE("solve: single matrix and convex form") {
  const std::vector<SpdMatrixd> one{sym2(2, 0.5, 1)};
  const MidrangeSolution s = solve_midrange(one);
  CHECK(s.t_star == 0);
  CHECK(gap(s.X, one[0]) == 0);
  REQUIRE(s.active.size() == 1);
  CHECK(s.active[0].index == 0);
  const ConvexCertificate c = convex_form_report(s, one);
  CHECK(c.xi == 1);
  CHECK(c.tau == 1);
  CHECK(c.tight);
}

TEST_CASE("solve: diagonal data matches vector midrange") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> logu(-2, 2);
  for (int k = 0; k < 5; ++k) {
    std::vector<SpdMatrixd> ys;
    std::vector<VectorXd> vs;
    for (int i = 0; i < 5; ++i) {
      const VectorXd v = Eigen::Vector3d(std::exp(logu(rng)), std::exp(logu(rng)), std::exp(logu(rng)));
      vs.push_back(v);
      ys.push_back(SpdMatrixd::diagonal(v));
    }
    const MidrangeSolution s = solve_midrange(ys);
    CHECK(s.used_diagonal_shortcut);
    CHECK(std::abs(s.t_star - s.lower) <= 1e-12);
    const VectorXd vm = vector_midrange(vs);
    CHECK(norm_inf(s.X.matrix() - MatrixXd(vm.asDiagonal())) <= 1e-5 * norm_inf(MatrixXd(vm.asDiagonal())));

    // bisection reaches the same cost; its X may be any point of the midpoint set
    SolverConfig cfg;
    cfg.diagonal_shortcut = false;
    const MidrangeSolution b = solve_midrange(ys, cfg);
    CHECK_FALSE(b.used_diagonal_shortcut);
    CHECK(std::abs(b.t_star - s.t_star) <= 2 * cfg.bisect_tol);
  }
}

TEST_CASE("vector midrange") {
  const std::vector<VectorXd> a{Vector2d(4, 1), Vector2d(9, 1)};
  CHECK((vector_midrange(a) - Vector2d(6, 1)).norm() <= 1e-12);
  const std::vector<VectorXd> b{Vector2d(5, 1), Vector2d(0.2, 1)};
  CHECK((vector_midrange(b) - Vector2d(1, 1)).norm() <= 1e-12);
  const std::vector<VectorXd> c{Vector2d(3, 7)};
  CHECK((vector_midrange(c) - Vector2d(3, 7)).norm() <= 1e-12);
  const std::vector<VectorXd> bad{Vector2d(-1, 1)};
  CHECK_THROWS(vector_midrange(bad));
}

TEST_CASE("active set labels") {
  const std::vector<SpdMatrixd> pair{SpdMatrixd::identity(2), diag(4, 9)};
  const auto act = active_set(diag(2, 3), std::log(3.0), pair, 1e-6);
  REQUIRE(act.size() == 2);
  CHECK(act[0].side == ActiveSide::upper);
  CHECK(act[1].side == ActiveSide::lower);
  CHECK(active_set(diag(2, 3), 5.0, pair, 1e-6).empty());
}

TEST_CASE("ordered shortcut") {
  const std::vector<SpdMatrixd> chain{SpdMatrixd::identity(2), diag(2, 3), diag(4, 9)};
  const auto s = ordered_shortcut(chain);
  REQUIRE(s.has_value());
  CHECK(s->used_ordered_shortcut);
  CHECK(gap(s->X, diag(2, 3)) <= 1e-12);
  CHECK(s->t_star == doctest::Approx(0.5 * std::log(9.0)));
  const MidrangeSolution full = solve_midrange(chain);
  CHECK(std::abs(full.t_star - s->t_star) <= 5 * SolverConfig{}.bisect_tol);

  const std::vector<SpdMatrixd> incomparable{diag(1, 2), diag(2, 1)};
  CHECK_FALSE(ordered_shortcut(incomparable).has_value());
  const std::vector<SpdMatrixd> comparable{diag(1, 2), diag(2, 3)};
  CHECK(ordered_shortcut(comparable).has_value());
}

TEST_CASE("two-point stationarity") {
  std::mt19937_64 rng(47);
  for (int k = 0; k < 5; ++k) {
    const SpdMatrixd a(oracle::random_spd(rng, 3)), b(oracle::random_spd(rng, 3));
    CHECK(two_point_stationarity_check(star_midrange(a, b), a, b));
    CHECK(two_point_stationarity_check(geometric_mean(a, b), a, b));
    CHECK_FALSE(two_point_stationarity_check(a, a, b));
  }
}

TEST_CASE("cost invariances") {
  std::mt19937_64 rng(53);
  const SolverConfig cfg;
  for (int k = 0; k < 4; ++k) {
    const auto ys = random_set(rng, 3, 6);
    const double t = solve_midrange(ys).t_star;

    const MatrixXd c = oracle::random_invertible(rng, 3);
    std::vector<SpdMatrixd> moved;
    for (const auto& y : ys) moved.emplace_back(MatrixXd(c * y.matrix() * c.transpose()));
    CHECK(std::abs(solve_midrange(moved).t_star - t) <= 5 * cfg.bisect_tol);

    auto shuffled = ys;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(std::abs(solve_midrange(shuffled).t_star - t) <= cfg.bisect_tol);
  }
}

TEST_CASE("dykstra engine") {
  SolverConfig cfg;
  cfg.engine = FeasibilityEngine::dykstra;
  const MidrangeSolution s = solve_midrange(three_matrices(), cfg);
  CHECK(std::abs(s.t_star - 0.7901) <= 2e-3);
  CHECK(s.lower <= s.t_star);
  CHECK(s.t_star <= s.upper);
}
