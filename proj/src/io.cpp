#include "midrange/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace midrange {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed on " + path.string());
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed on " + path.string());
}

SpdMatrixd certify(const Eigen::MatrixXd& m, std::size_t index) {
  try {
    return SpdMatrixd(m);
  } catch (const NotPositiveDefinite&) {
    throw NotPositiveDefinite("matrix is not positive definite", index);
  } catch (const DimensionMismatch&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string(e.what()) + " (matrix index " + std::to_string(index) + ")");
  }
}

Dataset parse_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("dataset JSON must be an object");
  if (!doc.contains("n") || !doc["n"].is_number_integer() || doc["n"].get<long long>() < 1) {
    throw ParseError("dataset JSON needs a positive integer \"n\"");
  }
  if (!doc.contains("matrices") || !doc["matrices"].is_array() || doc["matrices"].empty()) {
    throw ParseError("dataset JSON needs a nonempty \"matrices\" array");
  }
  Dataset data;
  data.n = static_cast<Index>(doc["n"].get<long long>());
  const auto& mats = doc["matrices"];
  for (std::size_t k = 0; k < mats.size(); ++k) {
    const auto& entry = mats[k];
    if (!entry.is_array()) throw ParseError("matrix " + std::to_string(k) + " is not an array");
    if (static_cast<Index>(entry.size()) != data.n * data.n) {
      throw DimensionMismatch("matrix " + std::to_string(k) + " has " +
                              std::to_string(entry.size()) + " entries, expected " +
                              std::to_string(data.n * data.n));
    }
    Eigen::MatrixXd m(data.n, data.n);
    for (Index i = 0; i < data.n; ++i) {
      for (Index j = 0; j < data.n; ++j) {
        const auto& v = entry[static_cast<std::size_t>(i * data.n + j)];
        if (!v.is_number()) {
          throw ParseError("matrix " + std::to_string(k) + " has a non-numeric entry");
        }
        m(i, j) = v.get<double>();
      }
    }
    data.matrices.push_back(certify(m, k));
  }
  if (doc.contains("labels") && !doc["labels"].is_null()) {
    const auto& labels = doc["labels"];
    if (!labels.is_array() || labels.size() != mats.size()) {
      throw ParseError("\"labels\" must be an array with one string per matrix");
    }
    for (const auto& l : labels) {
      if (!l.is_string()) throw ParseError("labels must be strings");
      data.labels.push_back(l.get<std::string>());
    }
  }
  return data;
}

std::vector<double> split_row(const std::string& line, std::size_t line_no) {
  std::vector<double> row;
  std::size_t pos = 0;
  auto is_sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r'; };
  while (pos < line.size()) {
    while (pos < line.size() && is_sep(line[pos])) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && !is_sep(line[end])) ++end;
    const std::string token = line.substr(pos, end - pos);
    double v = 0;
    const char* first = token.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v)) {
      throw ParseError("line " + std::to_string(line_no) + ": bad number '" + token + "'");
    }
    row.push_back(v);
    pos = end;
  }
  return row;
}

Dataset parse_csv(const std::string& text) {
  std::vector<std::vector<std::vector<double>>> blocks;
  std::vector<std::vector<double>> current;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!current.empty()) blocks.push_back(std::move(current));
    current.clear();
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r,");
    if (first == std::string::npos) {
      flush();
      continue;
    }
    if (line[first] == '#') continue;
    current.push_back(split_row(line, line_no));
  }
  flush();
  if (blocks.empty()) throw ParseError("CSV contains no matrices");

  Dataset data;
  data.n = static_cast<Index>(blocks[0].size());
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& rows = blocks[k];
    if (static_cast<Index>(rows.size()) != data.n) {
      throw DimensionMismatch("matrix " + std::to_string(k) + " has " +
                              std::to_string(rows.size()) + " rows, expected " +
                              std::to_string(data.n));
    }
    Eigen::MatrixXd m(data.n, data.n);
    for (Index i = 0; i < data.n; ++i) {
      if (static_cast<Index>(rows[i].size()) != data.n) {
        throw DimensionMismatch("matrix " + std::to_string(k) + " row " + std::to_string(i) +
                                " has " + std::to_string(rows[i].size()) + " values, expected " +
                                std::to_string(data.n));
      }
      for (Index j = 0; j < data.n; ++j) m(i, j) = rows[i][j];
    }
    data.matrices.push_back(certify(m, k));
  }
  return data;
}

json row_major(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

ActiveSide side_from_string(const std::string& s) {
  if (s == "upper") return ActiveSide::upper;
  if (s == "lower") return ActiveSide::lower;
  if (s == "both") return ActiveSide::both;
  throw ParseError("unknown active side '" + s + "'");
}

SolveStatus status_from_string(const std::string& s) {
  if (s == "converged") return SolveStatus::converged;
  if (s == "iteration_cap") return SolveStatus::iteration_cap;
  if (s == "stalled") return SolveStatus::stalled;
  throw ParseError("unknown solver status '" + s + "'");
}

}  // namespace

DataFormat format_for(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".csv" ? DataFormat::csv : DataFormat::json;
}

Dataset parse_dataset(const std::string& text, DataFormat format) {
  return format == DataFormat::json ? parse_json(text) : parse_csv(text);
}

Dataset load_dataset(const std::filesystem::path& path, std::optional<DataFormat> format) {
  return parse_dataset(read_file(path), format.value_or(format_for(path)));
}

std::string format_dataset(const Dataset& data, DataFormat format) {
  if (data.matrices.empty()) throw std::invalid_argument("dataset is empty");
  if (format == DataFormat::json) {
    json doc;
    doc["n"] = data.n;
    doc["matrices"] = json::array();
    for (const auto& m : data.matrices) doc["matrices"].push_back(row_major(m.matrix()));
    if (!data.labels.empty()) doc["labels"] = data.labels;
    return doc.dump(2) + "\n";
  }
  std::ostringstream out;
  out << std::setprecision(17);
  for (std::size_t k = 0; k < data.matrices.size(); ++k) {
    if (k) out << "\n";
    const auto& m = data.matrices[k].matrix();
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
      out << "\n";
    }
  }
  return out.str();
}

void save_dataset(const Dataset& data, const std::filesystem::path& path,
                  std::optional<DataFormat> format) {
  write_file(path, format_dataset(data, format.value_or(format_for(path))));
}

std::string format_solution(const MidrangeSolution& s) {
  json doc;
  doc["n"] = s.X.dim();
  doc["X"] = row_major(s.X.matrix());
  doc["t_star"] = s.t_star;
  doc["lower"] = s.lower;
  doc["upper"] = s.upper;
  doc["active"] = json::array();
  for (const auto& a : s.active) {
    doc["active"].push_back({{"index", a.index}, {"side", to_string(a.side)}});
  }
  doc["status"] = to_string(s.status);
  doc["iterations"] = {{"bisection_steps", s.stats.bisection_steps},
                       {"feasibility_calls", s.stats.feasibility_calls},
                       {"inner_iterations", s.stats.projection_cycles}};
  doc["used_ordered_shortcut"] = s.used_ordered_shortcut;
  doc["used_diagonal_shortcut"] = s.used_diagonal_shortcut;
  doc["two_active_check_passed"] = s.two_active_check_passed;
  doc["warnings"] = s.warnings;
  return doc.dump(2) + "\n";
}

MidrangeSolution parse_solution(const std::string& text) {
  try {
    const json doc = json::parse(text);
    MidrangeSolution s;
    const Index n = doc.at("n").get<Index>();
    const auto& x = doc.at("X");
    if (static_cast<Index>(x.size()) != n * n) throw DimensionMismatch("X has the wrong size");
    Eigen::MatrixXd m(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) m(i, j) = x.at(static_cast<std::size_t>(i * n + j)).get<double>();
    s.X = SpdMatrixd(m);
    s.t_star = doc.at("t_star").get<double>();
    s.lower = doc.at("lower").get<double>();
    s.upper = doc.at("upper").get<double>();
    for (const auto& a : doc.at("active")) {
      s.active.push_back({a.at("index").get<std::size_t>(),
                          side_from_string(a.at("side").get<std::string>())});
    }
    s.status = status_from_string(doc.at("status").get<std::string>());
    const auto& it = doc.at("iterations");
    s.stats.bisection_steps = it.at("bisection_steps").get<int>();
    s.stats.feasibility_calls = it.at("feasibility_calls").get<int>();
    s.stats.projection_cycles = it.at("inner_iterations").get<long>();
    s.used_ordered_shortcut = doc.value("used_ordered_shortcut", false);
    s.used_diagonal_shortcut = doc.value("used_diagonal_shortcut", false);
    s.two_active_check_passed = doc.value("two_active_check_passed", true);
    if (doc.contains("warnings")) s.warnings = doc["warnings"].get<std::vector<std::string>>();
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed solution JSON: ") + e.what());
  }
}

void save_solution(const MidrangeSolution& solution, const std::filesystem::path& path) {
  write_file(path, format_solution(solution));
}

MidrangeSolution load_solution(const std::filesystem::path& path) {
  return parse_solution(read_file(path));
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double SplitMix64::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  return u * f;
}

Dataset random_spd(Index n, std::size_t count, std::uint64_t seed, const SpdModel& model) {
  if (n < 1 || count < 1) throw std::invalid_argument("random_spd needs n >= 1 and count >= 1");
  SplitMix64 rng(seed);
  auto gaussian = [&] {
    Eigen::MatrixXd a(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) a(i, j) = rng.normal();
    return a;
  };
  Dataset data;
  data.n = n;
  for (std::size_t k = 0; k < count; ++k) {
    if (const auto* w = std::get_if<WishartShifted>(&model)) {
      const Eigen::MatrixXd sigma =
          w->sigma.size() == 0 ? Eigen::MatrixXd::Identity(n, n) : w->sigma;
      if (sigma.rows() != n || sigma.cols() != n) throw DimensionMismatch("Sigma has the wrong size");
      const Eigen::MatrixXd a = gaussian();
      data.matrices.push_back(certify(sigma + a.transpose() * a, k));
    } else {
      const double r = std::get<LogEuclidBall>(model).radius;
      Eigen::MatrixXd s = gaussian();
      s = ((s + s.transpose()) / 2.0).eval();
      const double norm = s.norm();
      if (norm > 0) s *= r / norm;
      data.matrices.push_back(certify(expm(SymMatrixd(s)).matrix(), k));
    }
  }
  return data;
}

Eigen::Vector3d embed2x2(const SymMatrixd& s) {
  if (s.dim() != 2) throw DimensionMismatch("the 3-d embedding needs 2x2 matrices");
  const double r2 = std::sqrt(2.0);
  return {r2 * s(0, 1), (s(0, 0) - s(1, 1)) / r2, (s(0, 0) + s(1, 1)) / r2};
}

SymMatrixd unembed2x2(const Eigen::Vector3d& v) {
  const double r2 = std::sqrt(2.0);
  Eigen::Matrix2d m;
  m << (v(2) + v(1)) / r2, v(0) / r2, v(0) / r2, (v(2) - v(1)) / r2;
  return SymMatrixd(Eigen::MatrixXd(m));
}

}  // namespace midrange
