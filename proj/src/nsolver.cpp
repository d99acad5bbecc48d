#include "midrange/nsolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace midrange {

namespace {

using Eigen::MatrixXd;

void require_common_dim(std::span<const SpdMatrixd> ys) {
  if (ys.empty()) throw std::invalid_argument("midrange of an empty collection");
  for (std::size_t i = 1; i < ys.size(); ++i) {
    if (ys[i].dim() != ys[0].dim()) {
      throw DimensionMismatch("matrix " + std::to_string(i) + " has dimension " +
                              std::to_string(ys[i].dim()) + ", expected " +
                              std::to_string(ys[0].dim()));
    }
  }
}

// Nearest PSD matrix in Frobenius norm: clip negative eigenvalues. Returns
// false (and leaves `out` untouched) when m is already PSD.
bool clip_to_psd(const MatrixXd& m, MatrixXd& out) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw NoConvergence("PSD projection eigensolver failed");
  const Eigen::VectorXd& d = es.eigenvalues();
  if (d(0) >= 0.0) return false;
  const Eigen::VectorXd clipped = d.cwiseMax(0.0);
  out = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  out = ((out + out.transpose()) / 2.0).eval();
  return true;
}

MatrixXd project_upper_raw(const MatrixXd& x, const MatrixXd& y, double s) {
  MatrixXd bound = s * y;
  MatrixXd psd;
  if (!clip_to_psd(bound - x, psd)) return x;
  return bound - psd;
}

MatrixXd project_lower_raw(const MatrixXd& x, const MatrixXd& y, double s) {
  MatrixXd bound = s * y;
  MatrixXd psd;
  if (!clip_to_psd(x - bound, psd)) return x;
  return bound + psd;
}

double violation_raw(std::span<const SpdMatrixd> ys, double t, const MatrixXd& x) {
  const double up = std::exp(t);
  const double down = std::exp(-t);
  double worst = 0.0;
  for (const auto& y : ys) {
    const MatrixXd hi = up * y.matrix();
    const double scale = tolerance_scale(norm_inf(hi));
    const double v_hi = -detail::min_eigenvalue<double>(hi - x);
    const double v_lo = -detail::min_eigenvalue<double>(x - down * y.matrix());
    worst = std::max({worst, v_hi / scale, v_lo / scale});
  }
  return worst;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(bisect_tol > std::numeric_limits<double>::epsilon())) {
    throw std::invalid_argument("bisect_tol must exceed machine epsilon");
  }
  if (!(feas_tol > 0) || !(active_tol > 0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
  if (stall_window <= 0 || max_proj_iters <= 0) {
    throw std::invalid_argument("iteration limits must be positive");
  }
}

CostBounds bounds(std::span<const SpdMatrixd> ys) {
  require_common_dim(ys);
  const std::size_t n = ys.size();
  CostBounds out;
  out.pairwise = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = thompson_distance(ys[i], ys[j]);
      out.pairwise(i, j) = d;
      out.pairwise(j, i) = d;
    }
  }
  out.lower = 0.5 * out.pairwise.maxCoeff();
  Eigen::Index center = 0;
  out.upper = out.pairwise.rowwise().maxCoeff().minCoeff(&center);
  out.center_index = static_cast<std::size_t>(center);
  return out;
}

SymMatrixd project_upper(const SymMatrixd& x, const SpdMatrixd& y, double s) {
  if (!(s > 0)) throw std::invalid_argument("projection scale must be positive");
  return SymMatrixd(project_upper_raw(x.matrix(), y.matrix(), s));
}

SymMatrixd project_lower(const SymMatrixd& x, const SpdMatrixd& y, double s) {
  if (!(s > 0)) throw std::invalid_argument("projection scale must be positive");
  return SymMatrixd(project_lower_raw(x.matrix(), y.matrix(), s));
}

double constraint_violation(std::span<const SpdMatrixd> ys, double t, const SymMatrixd& x) {
  require_common_dim(ys);
  return violation_raw(ys, t, x.matrix());
}

FeasibilityResult feasibility(std::span<const SpdMatrixd> ys, double t, const SolverConfig& cfg,
                              std::optional<SymMatrixd> x0) {
  require_common_dim(ys);
  if (!(t >= 0)) throw std::invalid_argument("feasibility radius must be nonnegative");
  MatrixXd x = x0 ? x0->matrix() : arithmetic_mean(ys).matrix();
  if (x.rows() != ys[0].dim()) throw DimensionMismatch("start point has the wrong dimension");

  const double up = std::exp(t);
  const double down = std::exp(-t);
  const std::size_t sets = 2 * ys.size();
  std::vector<MatrixXd> correction(sets, MatrixXd::Zero(x.rows(), x.cols()));

  double v = violation_raw(ys, t, x);
  if (v <= cfg.feas_tol) return Feasible{SymMatrixd(x), v, 0};

  double best = v;
  double window_best = v;
  int window_start = 0;
  for (int cycle = 1; cycle <= cfg.max_proj_iters; ++cycle) {
    for (std::size_t i = 0; i < ys.size(); ++i) {
      for (int side = 0; side < 2; ++side) {
        MatrixXd& p = correction[2 * i + side];
        const MatrixXd z = x + p;
        x = side == 0 ? project_lower_raw(z, ys[i].matrix(), down)
                      : project_upper_raw(z, ys[i].matrix(), up);
        p = z - x;
      }
    }
    v = violation_raw(ys, t, x);
    if (v <= cfg.feas_tol) return Feasible{SymMatrixd(x), v, cycle};
    best = std::min(best, v);
    if (cycle - window_start >= cfg.stall_window) {
      if (best > (1.0 - 1e-6) * window_best) return Infeasible{best, cycle, false};
      window_best = best;
      window_start = cycle;
    }
  }
  return Infeasible{best, cfg.max_proj_iters, true};
}

namespace {

// Symmetric basis of S^n: E_k = e_a e_b^T + e_b e_a^T (a < b) or e_a e_a^T.
struct SymBasis {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;

  explicit SymBasis(Eigen::Index n) {
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = a; b < n; ++b) pairs.emplace_back(a, b);
  }
  Eigen::Index size() const { return static_cast<Eigen::Index>(pairs.size()); }

  // tr(E_k M) for symmetric M.
  double trace_with(Eigen::Index k, const MatrixXd& m) const {
    const auto [a, b] = pairs[k];
    return a == b ? m(a, b) : 2.0 * m(a, b);
  }

  // tr(W E_k W E_l) for symmetric W.
  double trace_pair(Eigen::Index k, Eigen::Index l, const MatrixXd& w) const {
    const auto [a, b] = pairs[k];
    const auto [c, d] = pairs[l];
    if (a == b && c == d) return w(a, c) * w(a, c);
    if (a == b) return 2.0 * w(a, c) * w(a, d);
    if (c == d) return 2.0 * w(a, c) * w(b, c);
    return 2.0 * (w(b, c) * w(a, d) + w(b, d) * w(a, c));
  }

  MatrixXd assemble(const Eigen::VectorXd& z, Eigen::Index n) const {
    MatrixXd x(n, n);
    for (Eigen::Index k = 0; k < size(); ++k) {
      const auto [a, b] = pairs[k];
      x(a, b) = z(k);
      x(b, a) = z(k);
    }
    return x;
  }
};

// Gradient and Hessian of -sum log det over the 2N margin constraints
//   (e^t - m) Y_i - X >= 0,  X - (e^{-t} + m) Y_i >= 0
// at z = (vech X, m). Returns false when z leaves the interior.
bool barrier_derivatives(std::span<const SpdMatrixd> ys, double up, double down,
                         const SymBasis& basis, const Eigen::VectorXd& z, Eigen::VectorXd& grad,
                         MatrixXd& hess) {
  const Eigen::Index n = ys[0].dim();
  const Eigen::Index p = basis.size();
  const MatrixXd x = basis.assemble(z, n);
  const double m = z(p);
  grad.setZero(p + 1);
  hess.setZero(p + 1, p + 1);
  for (const auto& y : ys) {
    for (int side = 0; side < 2; ++side) {
      const MatrixXd s = side == 0 ? MatrixXd((up - m) * y.matrix() - x)
                                   : MatrixXd(x - (down + m) * y.matrix());
      Eigen::LLT<MatrixXd> llt(s);
      if (llt.info() != Eigen::Success) return false;
      MatrixXd w = llt.solve(MatrixXd::Identity(n, n));
      w = ((w + w.transpose()) / 2.0).eval();
      const MatrixXd wy = w * y.matrix();
      MatrixXd wyw = wy * w;
      wyw = ((wyw + wyw.transpose()) / 2.0).eval();
      // dS/dx_k = -E_k on the upper side and +E_k on the lower; dS/dm = -Y.
      const double sigma = side == 0 ? -1.0 : 1.0;
      for (Eigen::Index k = 0; k < p; ++k) {
        grad(k) -= sigma * basis.trace_with(k, w);
        hess(k, p) -= sigma * basis.trace_with(k, wyw);
        for (Eigen::Index l = k; l < p; ++l) hess(k, l) += basis.trace_pair(k, l, w);
      }
      grad(p) += wy.trace();
      hess(p, p) += wy.cwiseProduct(wy.transpose()).sum();
    }
  }
  hess = hess.selfadjointView<Eigen::Upper>();
  return true;
}

}  // namespace

MarginResult lmi_margin(std::span<const SpdMatrixd> ys, double t, const BarrierOptions& opt,
                        std::optional<SymMatrixd> x0) {
  require_common_dim(ys);
  if (!(t >= 0)) throw std::invalid_argument("feasibility radius must be nonnegative");
  const Eigen::Index n = ys[0].dim();
  const double up = std::exp(t);
  const double down = std::exp(-t);

  SpdMatrixd start = arithmetic_mean(ys);
  if (x0) {
    if (x0->dim() != n) throw DimensionMismatch("start point has the wrong dimension");
    try {
      start = SpdMatrixd(*x0);
    } catch (const NotPositiveDefinite&) {
    }
  }

  // Any m below the smallest slack of the start point is strictly interior.
  double slack = std::numeric_limits<double>::infinity();
  for (const auto& y : ys) {
    const auto ex = gen_eig_extremes(start, y);
    slack = std::min({slack, up - ex.lambda_max, ex.lambda_min - down});
  }

  const SymBasis basis(n);
  const Eigen::Index p = basis.size();
  Eigen::VectorXd z(p + 1);
  for (Eigen::Index k = 0; k < p; ++k) z(k) = start(basis.pairs[k].first, basis.pairs[k].second);
  z(p) = slack - 0.5 * std::max(std::abs(slack), 0.1);

  const double nu = 2.0 * static_cast<double>(ys.size() * n);
  MarginResult out;
  double weight = nu / (1.0 + std::abs(z(p)));
  Eigen::VectorXd grad, trial_grad;
  MatrixXd hess, trial_hess;
  if (!barrier_derivatives(ys, up, down, basis, z, grad, hess)) {
    throw NoConvergence("barrier start point is not interior");
  }

  auto finish = [&](bool converged) {
    out.X = SymMatrixd(basis.assemble(z, n));
    out.margin = z(p);
    out.margin_bound = z(p) + nu / weight;
    out.converged = converged;
    return out;
  };

  while (true) {
    // Centering by damped Newton on F = -weight * m + barrier.
    // Past ~50 steps the decrement is limited by rounding, not by distance.
    bool centered = false;
    for (int inner = 0; !centered && inner < 50; ++inner) {
      if (out.newton_steps >= opt.max_newton_steps) return finish(false);
      Eigen::VectorXd g = grad;
      g(p) -= weight;
      const Eigen::VectorXd step = -hess.ldlt().solve(g);
      const double dec2 = -g.dot(step);
      ++out.newton_steps;
      if (!std::isfinite(dec2)) return finish(false);
      double alpha = dec2 < 0.0625 ? 1.0 : 1.0 / (1.0 + std::sqrt(dec2));
      bool moved = false;
      for (int tries = 0; tries < 60; ++tries, alpha *= 0.5) {
        const Eigen::VectorXd trial = z + alpha * step;
        if (barrier_derivatives(ys, up, down, basis, trial, trial_grad, trial_hess)) {
          z = trial;
          grad = trial_grad;
          hess = trial_hess;
          moved = true;
          break;
        }
      }
      centered = !moved || dec2 <= 1e-10;
    }

    const double gap = nu / weight;
    if (opt.stop_when_infeasible && z(p) + gap < 0.0) return finish(false);
    if (gap <= opt.gap_tol * std::max(1.0, std::abs(z(p)))) return finish(true);
    weight *= 10.0;
  }
}

SpdMatrixd balance_scale(const SpdMatrixd& x, std::span<const SpdMatrixd> ys) {
  require_common_dim(ys);
  double upper = -std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  for (const auto& y : ys) {
    const auto ex = gen_eig_extremes(x, y);
    upper = std::max(upper, std::log(ex.lambda_max));
    lower = std::max(lower, -std::log(ex.lambda_min));
  }
  return SpdMatrixd(MatrixXd(std::exp(0.5 * (lower - upper)) * x.matrix()));
}

FeasibilityResult interior_feasibility(std::span<const SpdMatrixd> ys, double t,
                                       const SolverConfig& cfg, std::optional<SymMatrixd> x0) {
  BarrierOptions opt;
  opt.max_newton_steps = cfg.max_proj_iters;
  const MarginResult r = lmi_margin(ys, t, opt, std::move(x0));
  if (r.margin_bound < 0.0) return Infeasible{-r.margin_bound, r.newton_steps, false};
  try {
    const SpdMatrixd x = balance_scale(SpdMatrixd(r.X), ys);
    const double v = violation_raw(ys, t, x.matrix());
    if (v <= cfg.feas_tol) return Feasible{x.sym(), v, r.newton_steps};
    return Infeasible{v, r.newton_steps, !r.converged};
  } catch (const NotPositiveDefinite&) {
    return Infeasible{std::max(0.0, -r.margin), r.newton_steps, !r.converged};
  }
}

double midrange_cost(const SpdMatrixd& x, std::span<const SpdMatrixd> ys) {
  double cost = 0.0;
  for (const auto& y : ys) cost = std::max(cost, thompson_distance(x, y));
  return cost;
}

std::vector<ActiveEntry> active_set(const SpdMatrixd& x, double t, std::span<const SpdMatrixd> ys,
                                    double active_tol) {
  const double threshold = active_tol * std::max(1.0, t);
  std::vector<ActiveEntry> out;
  for (std::size_t j = 0; j < ys.size(); ++j) {
    const auto ex = gen_eig_extremes(x, ys[j]);
    const bool upper = t - std::log(ex.lambda_max) <= threshold;
    const bool lower = t + std::log(ex.lambda_min) <= threshold;
    if (upper && lower) {
      out.push_back({j, ActiveSide::both});
    } else if (upper) {
      out.push_back({j, ActiveSide::upper});
    } else if (lower) {
      out.push_back({j, ActiveSide::lower});
    }
  }
  return out;
}

namespace {

void attach_diagnostics(MidrangeSolution& sol, std::size_t n_data, const SolverConfig& cfg) {
  if (n_data < 2) return;
  const bool any_upper =
      std::any_of(sol.active.begin(), sol.active.end(), [](const auto& a) { return a.has_upper(); });
  const bool any_lower =
      std::any_of(sol.active.begin(), sol.active.end(), [](const auto& a) { return a.has_lower(); });
  if (sol.status == SolveStatus::converged && !(any_upper && any_lower)) {
    sol.warnings.emplace_back(
        "active set lacks an upper-bound or a lower-bound touching index; solution may be "
        "suboptimal");
  }
  if (sol.active.size() == 2) {
    sol.two_active_check_passed = sol.t_star - sol.lower <= 10.0 * cfg.bisect_tol;
    if (!sol.two_active_check_passed) {
      sol.warnings.emplace_back(
          "exactly two active matrices but the cost exceeds half the diameter");
    }
  }
}

}  // namespace

MidrangeSolution solve_midrange(std::span<const SpdMatrixd> ys, const SolverConfig& cfg) {
  cfg.validate();
  require_common_dim(ys);

  MidrangeSolution sol;
  if (ys.size() == 1) {
    sol.X = ys[0];
    sol.active = {{0, ActiveSide::both}};
    return sol;
  }

  const CostBounds b = bounds(ys);
  sol.lower = b.lower;
  sol.upper = b.upper;

  const bool all_diagonal = std::all_of(ys.begin(), ys.end(), [](const SpdMatrixd& y) {
    return y.matrix().isDiagonal(0.0);
  });
  if (cfg.diagonal_shortcut && all_diagonal) {
    std::vector<Eigen::VectorXd> diags;
    for (const auto& y : ys) diags.push_back(y.matrix().diagonal());
    sol.X = SpdMatrixd::diagonal(vector_midrange(diags));
    sol.t_star = midrange_cost(sol.X, ys);
    sol.used_diagonal_shortcut = true;
    sol.active = active_set(sol.X, sol.t_star, ys, cfg.active_tol);
    attach_diagnostics(sol, ys.size(), cfg);
    return sol;
  }

  // The most central data point is feasible at radius u.
  SpdMatrixd incumbent = ys[b.center_index];
  double best_cost = b.upper;
  double lo = b.lower;
  double hi = b.upper;
  std::optional<SymMatrixd> warm;
  bool last_capped = false;
  constexpr int kMaxBisectionSteps = 200;

  while (hi - lo > cfg.bisect_tol) {
    if (sol.stats.bisection_steps >= kMaxBisectionSteps) {
      sol.status = SolveStatus::stalled;
      break;
    }
    ++sol.stats.bisection_steps;
    const double mid = 0.5 * (lo + hi);
    const FeasibilityResult r = cfg.engine == FeasibilityEngine::interior_point
                                      ? interior_feasibility(ys, mid, cfg, warm)
                                      : feasibility(ys, mid, cfg, std::nullopt);
    ++sol.stats.feasibility_calls;

    bool accepted = false;
    if (const auto* ok = std::get_if<Feasible>(&r)) {
      sol.stats.projection_cycles += ok->cycles;
      try {
        SpdMatrixd candidate(ok->X);
        const double cost = midrange_cost(candidate, ys);
        if (cost < best_cost) {
          best_cost = cost;
          incumbent = std::move(candidate);
        }
        hi = std::min(mid, best_cost);
        warm = ok->X;
        last_capped = false;
        accepted = true;
      } catch (const NotPositiveDefinite&) {
      }
    }
    if (!accepted) {
      if (const auto* bad = std::get_if<Infeasible>(&r)) {
        sol.stats.projection_cycles += bad->cycles;
        last_capped = bad->hit_iteration_cap;
      }
      lo = mid;
    }
  }
  if (sol.status == SolveStatus::converged && last_capped) {
    sol.status = SolveStatus::iteration_cap;
  }

  sol.X = std::move(incumbent);
  sol.t_star = best_cost;
  sol.active = active_set(sol.X, sol.t_star, ys, cfg.active_tol);
  attach_diagnostics(sol, ys.size(), cfg);
  return sol;
}

std::optional<MidrangeSolution> ordered_shortcut(std::span<const SpdMatrixd> ys,
                                                 const SolverConfig& cfg) {
  require_common_dim(ys);
  if (ys.size() < 2) throw std::invalid_argument("ordered shortcut needs at least two matrices");

  auto find_extreme = [&](bool want_minimum) -> std::optional<std::size_t> {
    for (std::size_t c = 0; c < ys.size(); ++c) {
      bool ok = true;
      for (std::size_t i = 0; i < ys.size() && ok; ++i) {
        if (i == c) continue;
        ok = want_minimum ? loewner_leq<double>(ys[c], ys[i], cfg.feas_tol)
                          : loewner_leq<double>(ys[i], ys[c], cfg.feas_tol);
      }
      if (ok) return c;
    }
    return std::nullopt;
  };

  const auto bottom = find_extreme(true);
  if (!bottom) return std::nullopt;
  const auto top = find_extreme(false);
  if (!top) return std::nullopt;

  MidrangeSolution sol;
  sol.used_ordered_shortcut = true;
  sol.X = star_midrange(ys[*bottom], ys[*top]);
  sol.t_star = 0.5 * thompson_distance(ys[*bottom], ys[*top]);
  const CostBounds b = bounds(ys);
  sol.lower = b.lower;
  sol.upper = b.upper;
  sol.active = active_set(sol.X, sol.t_star, ys, cfg.active_tol);
  attach_diagnostics(sol, ys.size(), cfg);
  return sol;
}

Eigen::VectorXd vector_midrange(std::span<const Eigen::VectorXd> ys) {
  if (ys.empty()) throw std::invalid_argument("vector midrange of an empty collection");
  Eigen::VectorXd lo = ys[0];
  Eigen::VectorXd hi = ys[0];
  for (const auto& y : ys) {
    if (y.size() != lo.size()) throw DimensionMismatch("vectors differ in length");
    if (!(y.array() > 0.0).all()) throw std::domain_error("vector midrange needs positive entries");
    lo = lo.cwiseMin(y);
    hi = hi.cwiseMax(y);
  }
  return (lo.array() * hi.array()).sqrt().matrix();
}

bool two_point_stationarity_check(const SpdMatrixd& x, const SpdMatrixd& y1, const SpdMatrixd& y2,
                                  double tol) {
  const auto e1 = gen_eig_extremes(x, y1);
  const auto e2 = gen_eig_extremes(x, y2);
  const bool first = std::abs(std::log(e1.lambda_max) + std::log(e2.lambda_min)) <= tol;
  const bool second = std::abs(std::log(e2.lambda_max) + std::log(e1.lambda_min)) <= tol;
  return first && second;
}

ConvexCertificate convex_form_report(const SpdMatrixd& x, double t, std::span<const SpdMatrixd> ys,
                                     double feas_tol) {
  require_common_dim(ys);
  ConvexCertificate cert;
  cert.xi = std::exp(t);
  cert.tau = std::exp(-t);
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const SymMatrixd lower(Eigen::MatrixXd(cert.tau * ys[i].matrix()));
    const SymMatrixd upper(Eigen::MatrixXd(cert.xi * ys[i].matrix()));
    if (!loewner_leq<double>(lower, x, feas_tol)) {
      throw CertificateViolation("tau * Y_i <= X fails", i);
    }
    if (!loewner_leq<double>(x, upper, feas_tol)) {
      throw CertificateViolation("X <= xi * Y_i fails", i);
    }
  }
  cert.constraint_gap = 1.0 / cert.xi - cert.tau;
  if (cert.constraint_gap > feas_tol) {
    throw CertificateViolation("1/xi - tau <= 0 fails", ys.size());
  }
  cert.tight = std::abs(cert.constraint_gap) <= feas_tol;
  return cert;
}

ConvexCertificate convex_form_report(const MidrangeSolution& solution,
                                     std::span<const SpdMatrixd> ys, const SolverConfig& cfg) {
  return convex_form_report(solution.X, solution.t_star, ys, cfg.feas_tol);
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::iteration_cap: return "iteration_cap";
    case SolveStatus::stalled: return "stalled";
  }
  return "unknown";
}

const char* to_string(ActiveSide side) {
  switch (side) {
    case ActiveSide::upper: return "upper";
    case ActiveSide::lower: return "lower";
    case ActiveSide::both: return "both";
  }
  return "unknown";
}

}  // namespace midrange
