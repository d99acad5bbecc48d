#include "midrange/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "midrange/geometry.hpp"
#include "midrange/io.hpp"

namespace midrange {

namespace {

using Clock = std::chrono::steady_clock;

struct Pair {
  SpdMatrixd a;
  SpdMatrixd b;
};

std::vector<Pair> make_pairs(Index n, int count, std::uint64_t seed) {
  const Dataset d = random_spd(n, 2 * static_cast<std::size_t>(count), seed, WishartShifted{});
  std::vector<Pair> out;
  for (int k = 0; k < count; ++k) out.push_back({d.matrices[2 * k], d.matrices[2 * k + 1]});
  return out;
}

bool is_spd(const SymMatrixd& m) {
  return m.matrix().allFinite() && Eigen::LLT<Eigen::MatrixXd>(m.matrix()).info() == Eigen::Success;
}

bool near(double x, double y, double rel) {
  return std::abs(x - y) <= rel * std::max(1.0, std::abs(y));
}

// One timed operation: `run` returns the value to validate; `cheap` screens
// every timed result and `thorough` screens the warm-up result.
template <typename Result>
struct Op {
  std::string name;
  std::function<Result(const Pair&)> run;
  std::function<bool(const Pair&, const Result&)> cheap;
  std::function<bool(const Pair&, const Result&)> thorough;
};

template <typename Result>
std::optional<BenchRecord> time_op(const Op<Result>& op, Index n, const std::vector<Pair>& pairs) {
  // pairs[0] is the warm-up input.
  const Result warm = op.run(pairs[0]);
  if (!op.thorough(pairs[0], warm)) return std::nullopt;

  std::vector<double> times;
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    const auto start = Clock::now();
    const Result r = op.run(pairs[k]);
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    if (op.cheap(pairs[k], r)) times.push_back(elapsed);
  }
  if (times.size() < 3) return std::nullopt;
  BenchRecord rec;
  rec.n = n;
  rec.operation = op.name;
  rec.trials = static_cast<int>(times.size());
  rec.median_seconds = quantile(times, 0.5);
  rec.p10_seconds = quantile(times, 0.1);
  rec.p90_seconds = quantile(times, 0.9);
  return rec;
}

void check_args(std::span<const Index> n_list, int trials) {
  if (n_list.empty()) throw std::invalid_argument("benchmark needs at least one dimension");
  if (!std::is_sorted(n_list.begin(), n_list.end()) || n_list.front() < 1) {
    throw std::invalid_argument("benchmark dimensions must be positive and ascending");
  }
  if (trials < 3) throw std::invalid_argument("benchmark needs at least 3 trials");
}

}  // namespace

double quantile(std::vector<double> sample, double q) {
  if (sample.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double pos = q * static_cast<double>(sample.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sample.size() - 1);
  return sample[lo] + (pos - static_cast<double>(lo)) * (sample[hi] - sample[lo]);
}

std::vector<BenchRecord> bench_means(std::span<const Index> n_list, int trials, std::uint64_t seed) {
  check_args(n_list, trials);
  auto midpoint_ok = [](const Pair& p, const SpdMatrixd& x) {
    const double half = 0.5 * thompson_distance(p.a, p.b);
    return near(thompson_distance(p.a, x), half, 1e-6) && near(thompson_distance(p.b, x), half, 1e-6);
  };
  auto spd_ok = [](const Pair&, const SpdMatrixd& x) { return is_spd(x); };

  std::vector<Op<SpdMatrixd>> ops;
  ops.push_back({"star_midrange",
                 [](const Pair& p) { return star_midrange(p.a, p.b, EigenMethod::iterative); },
                 spd_ok, midpoint_ok});
  ops.push_back({"geometric_mean", [](const Pair& p) { return geometric_mean(p.a, p.b); }, spd_ok,
                 midpoint_ok});
  ops.push_back({"arithmetic_mean",
                 [](const Pair& p) {
                   return SpdMatrixd(Eigen::MatrixXd((p.a.matrix() + p.b.matrix()) / 2.0));
                 },
                 spd_ok, [](const Pair& p, const SpdMatrixd& x) {
                   return (x.matrix() - (p.a.matrix() + p.b.matrix()) / 2.0).norm() <=
                          1e-12 * x.matrix().norm();
                 }});

  std::vector<BenchRecord> out;
  for (const Index n : n_list) {
    const auto pairs = make_pairs(n, trials + 1, seed + static_cast<std::uint64_t>(n));
    for (const auto& op : ops) {
      if (auto rec = time_op(op, n, pairs)) out.push_back(*rec);
    }
  }
  return out;
}

std::vector<BenchRecord> bench_distances(std::span<const Index> n_list, int trials,
                                         std::uint64_t seed) {
  check_args(n_list, trials);
  auto finite_nonneg = [](const Pair&, const double& d) { return std::isfinite(d) && d >= 0; };

  std::vector<Op<double>> ops;
  ops.push_back({"thompson_distance",
                 [](const Pair& p) { return thompson_distance(p.a, p.b, EigenMethod::iterative); },
                 finite_nonneg, [](const Pair& p, const double& d) {
                   return near(d, thompson_distance(p.a, p.b, EigenMethod::full), 1e-6);
                 }});
  ops.push_back({"riemannian_distance",
                 [](const Pair& p) { return riemannian_distance(p.a, p.b); }, finite_nonneg,
                 [](const Pair& p, const double& d) {
                   // d_inf <= d_2 <= sqrt(n) d_inf
                   const double dinf = thompson_distance(p.a, p.b);
                   return d >= dinf * (1 - 1e-10) &&
                          d <= std::sqrt(static_cast<double>(p.a.dim())) * dinf * (1 + 1e-10);
                 }});
  ops.push_back({"euclidean_distance",
                 [](const Pair& p) { return euclidean_distance<double>(p.a, p.b); }, finite_nonneg,
                 [](const Pair& p, const double& d) {
                   return near(d, (p.a.matrix() - p.b.matrix()).norm(), 1e-12);
                 }});

  std::vector<BenchRecord> out;
  for (const Index n : n_list) {
    const auto pairs = make_pairs(n, trials + 1, seed + static_cast<std::uint64_t>(n));
    for (const auto& op : ops) {
      if (auto rec = time_op(op, n, pairs)) out.push_back(*rec);
    }
  }
  return out;
}

std::string format_bench_csv(std::span<const BenchRecord> records) {
  std::ostringstream out;
  out << "n,operation,trials,median_s,p10_s,p90_s\n" << std::setprecision(17);
  for (const auto& r : records) {
    out << r.n << ',' << r.operation << ',' << r.trials << ',' << r.median_seconds << ','
        << r.p10_seconds << ',' << r.p90_seconds << '\n';
  }
  return out.str();
}

void save_bench_csv(std::span<const BenchRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << format_bench_csv(records);
  if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace midrange
