#pragma once

// Wall-clock timing of the two-point operations across matrix dimension.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "midrange/matcore.hpp"

namespace midrange {

struct BenchRecord {
  Index n = 0;
  std::string operation;
  int trials = 0;  // timed calls kept after validation
  double median_seconds = 0;
  double p10_seconds = 0;
  double p90_seconds = 0;
};

/// star_midrange (iterative extremes), geometric_mean and arithmetic mean on
/// fresh wishart_shifted pairs; one untimed warm-up call per operation and n.
std::vector<BenchRecord> bench_means(std::span<const Index> n_list, int trials, std::uint64_t seed);

/// thompson_distance (iterative extremes), riemannian_distance (full
/// decomposition) and the Frobenius distance.
std::vector<BenchRecord> bench_distances(std::span<const Index> n_list, int trials,
                                         std::uint64_t seed);

/// Header n,operation,trials,median_s,p10_s,p90_s.
std::string format_bench_csv(std::span<const BenchRecord> records);
void save_bench_csv(std::span<const BenchRecord> records, const std::filesystem::path& path);

/// Linear-interpolated quantile of an unsorted sample, q in [0, 1].
double quantile(std::vector<double> sample, double q);

}  // namespace midrange
