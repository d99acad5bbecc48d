#pragma once

// N-point geometric midrange: the smallest enclosing Thompson ball of a set of
// positive definite matrices, solved by bisection on the ball radius with a
// Dykstra projection core for the fixed-radius LMI feasibility problem.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "midrange/geometry.hpp"
#include "midrange/matcore.hpp"

namespace midrange {

/// Fixed-radius feasibility oracle used inside the bisection. `dykstra` is the
/// cyclic projection core; `interior_point` maximizes the LMI margin with a
/// log-barrier path-following method and gives sharp verdicts near the optimum.
enum class FeasibilityEngine { dykstra, interior_point };

struct SolverConfig {
  FeasibilityEngine engine = FeasibilityEngine::interior_point;
  double bisect_tol = 1e-6;
  double feas_tol = 1e-8;
  int stall_window = 200;
  int max_proj_iters = 20000;
  double active_tol = 1e-6;
  // Diagonal data is solved in closed form by vector_midrange.
  bool diagonal_shortcut = true;

  void validate() const;
};

enum class SolveStatus { converged, iteration_cap, stalled };

enum class ActiveSide { upper, lower, both };

/// Data index at distance t from X. `upper` means log lambda_max(Y^-1/2 X Y^-1/2) = t,
/// `lower` means -log lambda_min(...) = t.
struct ActiveEntry {
  std::size_t index = 0;
  ActiveSide side = ActiveSide::upper;

  bool has_upper() const { return side != ActiveSide::lower; }
  bool has_lower() const { return side != ActiveSide::upper; }
  friend bool operator==(const ActiveEntry&, const ActiveEntry&) = default;
};

struct SolverStats {
  int bisection_steps = 0;
  int feasibility_calls = 0;
  long projection_cycles = 0;
  friend bool operator==(const SolverStats&, const SolverStats&) = default;
};

struct MidrangeSolution {
  SpdMatrixd X;
  double t_star = 0;
  double lower = 0;
  double upper = 0;
  std::vector<ActiveEntry> active;
  SolveStatus status = SolveStatus::converged;
  SolverStats stats;
  bool used_ordered_shortcut = false;
  bool used_diagonal_shortcut = false;
  // Exactly two active matrices with t_star - lower > 10 * bisect_tol would
  // contradict lower-bound attainment; the flag records that the check passed.
  bool two_active_check_passed = true;
  std::vector<std::string> warnings;
};

struct CostBounds {
  double lower = 0;  // half the Thompson diameter
  double upper = 0;  // smallest eccentricity among the data points
  std::size_t center_index = 0;  // data point attaining `upper`
  Eigen::MatrixXd pairwise;      // d_inf(Y_i, Y_j)
};

CostBounds bounds(std::span<const SpdMatrixd> ys);

/// Frobenius projection onto {X : X <= s Y}.
SymMatrixd project_upper(const SymMatrixd& x, const SpdMatrixd& y, double s);
/// Frobenius projection onto {X : X >= s Y}.
SymMatrixd project_lower(const SymMatrixd& x, const SpdMatrixd& y, double s);

struct Feasible {
  SymMatrixd X;
  double residual = 0;
  int cycles = 0;
};

struct Infeasible {
  double residual = 0;
  int cycles = 0;
  bool hit_iteration_cap = false;
};

using FeasibilityResult = std::variant<Feasible, Infeasible>;

/// Worst relative violation of e^{-t} Y_i <= X <= e^t Y_i over all i.
double constraint_violation(std::span<const SpdMatrixd> ys, double t, const SymMatrixd& x);

/// Dykstra's cyclic projections over {X >= e^{-t} Y_i}, {X <= e^t Y_i} in input
/// order (lower then upper per index). Defaults to starting at the arithmetic mean.
FeasibilityResult feasibility(std::span<const SpdMatrixd> ys, double t, const SolverConfig& cfg,
                              std::optional<SymMatrixd> x0 = std::nullopt);

/// Result of the margin problem
///   max m  s.t.  (e^{-t} + m) Y_i <= X <= (e^t - m) Y_i  for all i,
/// which is feasible with m >= 0 exactly when radius t is feasible.
struct MarginResult {
  SymMatrixd X;
  double margin = 0;        // best margin reached
  double margin_bound = 0;  // upper bound on the optimal margin
  int newton_steps = 0;
  bool converged = false;   // barrier gap closed (false: stopped early or capped)
};

struct BarrierOptions {
  double gap_tol = 1e-10;
  int max_newton_steps = 2000;
  bool stop_when_infeasible = true;  // stop once the margin bound is negative
};

MarginResult lmi_margin(std::span<const SpdMatrixd> ys, double t, const BarrierOptions& opt = {},
                        std::optional<SymMatrixd> x0 = std::nullopt);

/// Interior-point feasibility verdict at radius t. A feasible verdict returns
/// the scale-balanced margin maximizer.
FeasibilityResult interior_feasibility(std::span<const SpdMatrixd> ys, double t,
                                       const SolverConfig& cfg,
                                       std::optional<SymMatrixd> x0 = std::nullopt);

/// Rescales X by the scalar that equalizes its worst upper and lower log
/// eigenvalue excursions; the cost becomes their average.
SpdMatrixd balance_scale(const SpdMatrixd& x, std::span<const SpdMatrixd> ys);

/// Cost max_i d_inf(X, Y_i) of a candidate center.
double midrange_cost(const SpdMatrixd& x, std::span<const SpdMatrixd> ys);

MidrangeSolution solve_midrange(std::span<const SpdMatrixd> ys, const SolverConfig& cfg = {});

std::vector<ActiveEntry> active_set(const SpdMatrixd& x, double t, std::span<const SpdMatrixd> ys,
                                    double active_tol);

/// When some Y_m <= Y_i <= Y_M for every i, the midrange is the Thompson
/// midpoint of Y_m and Y_M and no bisection is needed.
std::optional<MidrangeSolution> ordered_shortcut(std::span<const SpdMatrixd> ys,
                                                 const SolverConfig& cfg = {});

/// Coordinatewise sqrt(min_i y_i * max_i y_i).
Eigen::VectorXd vector_midrange(std::span<const Eigen::VectorXd> ys);

bool two_point_stationarity_check(const SpdMatrixd& x, const SpdMatrixd& y1, const SpdMatrixd& y2,
                                  double tol = 1e-6);

/// Post-hoc certificate for the convex form with xi = e^t, tau = e^{-t}:
/// tau Y_i <= X <= xi Y_i and 1/xi - tau <= 0 (tight at the optimum).
struct ConvexCertificate {
  double xi = 1;
  double tau = 1;
  double constraint_gap = 0;  // 1/xi - tau
  bool tight = true;
};

ConvexCertificate convex_form_report(const SpdMatrixd& x, double t, std::span<const SpdMatrixd> ys,
                                     double feas_tol);
ConvexCertificate convex_form_report(const MidrangeSolution& solution,
                                     std::span<const SpdMatrixd> ys, const SolverConfig& cfg = {});

const char* to_string(SolveStatus status);
const char* to_string(ActiveSide side);

}  // namespace midrange
