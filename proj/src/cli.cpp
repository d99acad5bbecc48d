#include "midrange/cli.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "midrange/bench.hpp"
#include "midrange/geometry.hpp"
#include "midrange/io.hpp"
#include "midrange/nsolver.hpp"

namespace midrange::cli {

namespace {

void print_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << "\n";
  }
}

Dataset require_pair(Dataset d) {
  if (d.size() != 2) {
    throw std::invalid_argument("expected exactly 2 matrices, got " + std::to_string(d.size()));
  }
  return d;
}

template <typename E>
CLI::CheckedTransformer choice(const std::map<std::string, E>& m) {
  return CLI::CheckedTransformer(m, CLI::ignore_case);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geometric midrange statistics on the cone of positive definite matrices",
               "midrange"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  std::string in_path;
  std::string out_path;

  auto* dist = app.add_subcommand("dist", "Pairwise distance matrix");
  std::string metric = "thompson";
  dist->add_option("--metric", metric, "Distance")
      ->check(CLI::IsMember({"thompson", "riemannian", "d1", "euclidean"}));
  dist->add_option("--in", in_path, "Dataset file (.json or .csv)")->required();

  auto* mid2 = app.add_subcommand("midrange2", "Two-point midrange or mean");
  std::string mid_kind = "star";
  mid2->add_option("--kind", mid_kind, "Midpoint")
      ->check(CLI::IsMember({"star", "diamond", "geomean"}));
  mid2->add_option("--in", in_path, "Dataset with 2 matrices")->required();

  auto* mean = app.add_subcommand("mean", "Karcher or arithmetic mean");
  std::string mean_kind = "karcher";
  KarcherOptions kopt;
  mean->add_option("--kind", mean_kind, "Mean")->check(CLI::IsMember({"karcher", "arithmetic"}));
  mean->add_option("--in", in_path, "Dataset file")->required();
  mean->add_option("--tol", kopt.tol, "Karcher gradient tolerance")->check(CLI::PositiveNumber);
  mean->add_option("--max-iter", kopt.max_iter, "Karcher iteration cap")->check(CLI::PositiveNumber);

  auto* geo = app.add_subcommand("geodesic", "Point on a geodesic between 2 matrices");
  GeodesicKind geo_kind = GeodesicKind::riemannian;
  double geo_t = 0.5;
  geo->add_option("--kind", geo_kind, "Geodesic")
      ->transform(choice<GeodesicKind>({{"riemannian", GeodesicKind::riemannian},
                                        {"nussbaum", GeodesicKind::nussbaum}}));
  geo->add_option("--t", geo_t, "Parameter in [0, 1]")->required();
  geo->add_option("--in", in_path, "Dataset with 2 matrices")->required();

  auto* solve = app.add_subcommand("solve", "N-point midrange (smallest enclosing Thompson ball)");
  SolverConfig cfg;
  bool no_shortcut = false;
  solve->add_option("--in", in_path, "Dataset file")->required();
  solve->add_option("--bisect-tol", cfg.bisect_tol, "Bisection gap on t");
  solve->add_option("--feas-tol", cfg.feas_tol, "Relative feasibility tolerance");
  solve->add_option("--active-tol", cfg.active_tol, "Active-set tolerance");
  solve->add_option("--engine", cfg.engine, "Feasibility oracle")
      ->transform(choice<FeasibilityEngine>({{"interior-point", FeasibilityEngine::interior_point},
                                             {"dykstra", FeasibilityEngine::dykstra}}));
  solve->add_flag("--no-shortcut", no_shortcut, "Always bisect, even on ordered chains or diagonal data");
  solve->add_option("--out", out_path, "Solution JSON");

  auto* bench = app.add_subcommand("bench", "Timing of means or distances across dimension");
  std::string bench_kind;
  std::vector<Index> nlist{50, 100, 200, 500, 1000};
  int trials = 5;
  std::uint64_t seed = 1;
  bench->add_option("kind", bench_kind, "means or distances")
      ->required()
      ->check(CLI::IsMember({"means", "distances"}));
  bench->add_option("--nlist", nlist, "Ascending dimensions")->delimiter(',');
  bench->add_option("--trials", trials, "Timed trials per point (>= 3)")
      ->check(CLI::Range(3, 1000000));
  bench->add_option("--seed", seed, "Generator seed");
  bench->add_option("--out", out_path, "CSV output (stdout when omitted)");

  auto* embed = app.add_subcommand("embed3d", "R^3 cone coordinates of 2x2 data and solution");
  std::string solution_path;
  embed->add_option("--in", in_path, "Dataset of 2x2 matrices")->required();
  embed->add_option("--solution", solution_path, "Solution JSON from solve")->required();
  embed->add_option("--out", out_path, "CSV output (stdout when omitted)");

  auto* gen = app.add_subcommand("gen", "Random SPD dataset");
  std::string model = "wishart";
  Index gen_n = 2;
  std::size_t count = 3;
  double radius = 1.0;
  double sigma_scale = 1.0;
  gen->add_option("--model", model, "wishart (Sigma + A^T A) or logeuclid")
      ->check(CLI::IsMember({"wishart", "logeuclid"}));
  gen->add_option("--n", gen_n, "Dimension")->check(CLI::PositiveNumber);
  gen->add_option("--count", count, "Number of matrices")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Generator seed");
  gen->add_option("--radius", radius, "logeuclid radius")->check(CLI::NonNegativeNumber);
  gen->add_option("--sigma", sigma_scale, "wishart shift Sigma = s I")->check(CLI::PositiveNumber);
  gen->add_option("--out", out_path, "Dataset file (stdout JSON when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  out << std::setprecision(6);
  try {
    if (*dist) {
      const Dataset d = load_dataset(in_path);
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d.size(), d.size());
      for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = i + 1; j < d.size(); ++j) {
          const auto& a = d.matrices[i];
          const auto& b = d.matrices[j];
          double v = 0;
          if (metric == "thompson") v = thompson_distance(a, b);
          else if (metric == "riemannian") v = riemannian_distance(a, b);
          else if (metric == "d1") v = dphi_distance(a, b, DistanceKind::d1);
          else v = euclidean_distance<double>(a, b);
          m(i, j) = m(j, i) = v;
        }
      }
      print_matrix(out, m);
    } else if (*mid2) {
      const Dataset d = require_pair(load_dataset(in_path));
      const auto& a = d.matrices[0];
      const auto& b = d.matrices[1];
      const SpdMatrixd x = mid_kind == "star"      ? star_midrange(a, b)
                           : mid_kind == "diamond" ? diamond_midpoint(a, b)
                                                   : geometric_mean(a, b);
      print_matrix(out, x.matrix());
      out << "d_inf(A,X) " << thompson_distance(a, x) << "\n";
      out << "d_inf(B,X) " << thompson_distance(b, x) << "\n";
    } else if (*mean) {
      const Dataset d = load_dataset(in_path);
      const SpdMatrixd x = mean_kind == "karcher" ? karcher_mean(d.matrices, kopt)
                                                  : arithmetic_mean(d.matrices);
      print_matrix(out, x.matrix());
    } else if (*geo) {
      const Dataset d = require_pair(load_dataset(in_path));
      print_matrix(out, geodesic_point(d.matrices[0], d.matrices[1], geo_t, geo_kind).matrix());
    } else if (*solve) {
      cfg.validate();
      cfg.diagonal_shortcut = !no_shortcut;
      const Dataset d = load_dataset(in_path);
      std::optional<MidrangeSolution> sol;
      if (!no_shortcut && d.size() >= 2) sol = ordered_shortcut(d.matrices, cfg);
      if (!sol) sol = solve_midrange(d.matrices, cfg);
      const ConvexCertificate cert = convex_form_report(*sol, d.matrices, cfg);
      out << "t_star " << sol->t_star << "\n";
      out << "lower " << sol->lower << "\n";
      out << "upper " << sol->upper << "\n";
      out << "status " << to_string(sol->status) << "\n";
      out << "active";
      for (const auto& a : sol->active) out << " " << a.index << ":" << to_string(a.side);
      out << "\n";
      out << "X\n";
      print_matrix(out, sol->X.matrix());
      out << "xi " << cert.xi << " tau " << cert.tau << " tight " << (cert.tight ? "yes" : "no")
          << "\n";
      if (sol->used_ordered_shortcut) out << "ordered chain shortcut\n";
      if (sol->used_diagonal_shortcut) out << "diagonal shortcut\n";
      for (const auto& w : sol->warnings) err << "warning: " << w << "\n";
      if (!out_path.empty()) save_solution(*sol, out_path);
    } else if (*bench) {
      const auto records = bench_kind == "means" ? bench_means(nlist, trials, seed)
                                                 : bench_distances(nlist, trials, seed);
      if (out_path.empty()) {
        out << format_bench_csv(records);
      } else {
        save_bench_csv(records, out_path);
      }
    } else if (*embed) {
      const Dataset d = load_dataset(in_path);
      if (d.n != 2) {
        throw DimensionMismatch("embed3d needs 2x2 matrices, dataset has n = " +
                                std::to_string(d.n));
      }
      const MidrangeSolution sol = load_solution(solution_path);
      if (sol.X.dim() != 2) throw DimensionMismatch("solution is not 2x2");
      std::vector<bool> active(d.size(), false);
      for (const auto& a : sol.active) {
        if (a.index >= d.size()) throw std::invalid_argument("solution refers to a missing index");
        active[a.index] = true;
      }
      std::ostringstream csv;
      csv << std::setprecision(17) << "x,y,z,role,index\n";
      auto row = [&](const SymMatrixd& m, const char* role, long index) {
        const Eigen::Vector3d v = embed2x2(m);
        csv << v(0) << ',' << v(1) << ',' << v(2) << ',' << role << ',' << index << '\n';
      };
      for (std::size_t i = 0; i < d.size(); ++i) {
        row(d.matrices[i], active[i] ? "active" : "data", static_cast<long>(i));
      }
      row(sol.X, "midrange", -1);
      row(karcher_mean(d.matrices), "karcher", -1);
      if (out_path.empty()) {
        out << csv.str();
      } else {
        std::ofstream f(out_path, std::ios::trunc);
        if (!(f << csv.str())) throw IoError("cannot write " + out_path);
      }
    } else if (*gen) {
      SpdModel m = LogEuclidBall{radius};
      if (model == "wishart") m = WishartShifted{sigma_scale * Eigen::MatrixXd::Identity(gen_n, gen_n)};
      const Dataset d = random_spd(gen_n, count, seed, m);
      if (out_path.empty()) {
        out << format_dataset(d, DataFormat::json);
      } else {
        save_dataset(d, out_path);
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace midrange::cli
