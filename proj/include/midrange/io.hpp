#pragma once

// Dataset and solution files (JSON, CSV) and the seeded random SPD generators.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "midrange/matcore.hpp"
#include "midrange/nsolver.hpp"

namespace midrange {

struct Dataset {
  Index n = 0;
  std::vector<SpdMatrixd> matrices;
  std::vector<std::string> labels;  // empty or one per matrix

  std::size_t size() const { return matrices.size(); }
};

enum class DataFormat { json, csv };

/// Format implied by the file extension (".csv" is CSV, anything else JSON).
DataFormat format_for(const std::filesystem::path& path);

/// JSON: {"n": 2, "matrices": [[row-major n*n values], ...], "labels": [...]}.
/// CSV: n rows of n values (comma or whitespace separated) per matrix, with
/// blank lines between matrices. Lines starting with '#' are ignored.
Dataset parse_dataset(const std::string& text, DataFormat format);
Dataset load_dataset(const std::filesystem::path& path, std::optional<DataFormat> format = std::nullopt);

std::string format_dataset(const Dataset& data, DataFormat format);
void save_dataset(const Dataset& data, const std::filesystem::path& path,
                  std::optional<DataFormat> format = std::nullopt);

std::string format_solution(const MidrangeSolution& solution);
MidrangeSolution parse_solution(const std::string& text);
void save_solution(const MidrangeSolution& solution, const std::filesystem::path& path);
MidrangeSolution load_solution(const std::filesystem::path& path);

/// SplitMix64 stream with Marsaglia polar normals. The state advances by
/// 0x9E3779B97F4A7C15 and is mixed with 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  double uniform();  // [0, 1) with 53 random bits
  double normal();   // standard normal

 private:
  std::uint64_t state_;
  std::optional<double> spare_;
};

/// Y = Sigma + A^T A with A standard normal; an empty Sigma means identity.
struct WishartShifted {
  Eigen::MatrixXd sigma;
};

/// Y = exp(r S / ||S||_F) for S symmetric with standard normal entries.
struct LogEuclidBall {
  double radius = 1.0;
};

using SpdModel = std::variant<WishartShifted, LogEuclidBall>;

Dataset random_spd(Index n, std::size_t count, std::uint64_t seed, const SpdModel& model);

/// (a, b; b, c) -> (sqrt2 b, (a - c)/sqrt2, (a + c)/sqrt2). Linear isometry onto
/// R^3 mapping the PSD cone to the circular cone z >= |(x, y)|.
Eigen::Vector3d embed2x2(const SymMatrixd& s);
SymMatrixd unembed2x2(const Eigen::Vector3d& v);

}  // namespace midrange
