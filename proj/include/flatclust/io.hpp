#pragma once

// File formats: point-cloud / distance-matrix / label CSV, and JSON for
// partitions, measures, programs and experiment reports.

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "flatclust/bayes.hpp"
#include "flatclust/bip.hpp"
#include "flatclust/clustering.hpp"
#include "flatclust/error.hpp"
#include "flatclust/flatten.hpp"
#include "flatclust/harness.hpp"
#include "flatclust/metric.hpp"
#include "flatclust/partition.hpp"

namespace flatclust::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(static_cast<bool>(in), ErrorCode::io,
                  "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a sibling temporary file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    detail::require(static_cast<bool>(out), ErrorCode::io,
                    "cannot write " + tmp.string());
    out << content;
    out.flush();
    detail::require(static_cast<bool>(out), ErrorCode::io,
                    "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  detail::require(!ec, ErrorCode::io,
                  "cannot rename " + tmp.string() + ": " + ec.message());
}

/// 17 significant digits, enough to round-trip any double.
inline std::string format_real(double x) {
  std::ostringstream ss;
  ss << std::setprecision(17) << x;
  return ss.str();
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return cells;
}

inline bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

}  // namespace detail

/// Numeric rows; a first row that does not parse as numbers is a header.
inline std::vector<std::vector<double>> parse_numeric_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_row(line);
    std::vector<double> row;
    bool numeric = true;
    for (const auto& c : cells) {
      double x;
      if (!detail::parse_real(c, x)) {
        numeric = false;
        break;
      }
      row.push_back(x);
    }
    if (!numeric) {
      flatclust::detail::require(rows.empty() && lineno == 1, ErrorCode::parse,
                                 "non-numeric CSV value on line " +
                                     std::to_string(lineno));
      continue;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MetricSpace read_points_csv(const std::filesystem::path& path) {
  return MetricSpace::from_point_cloud(parse_numeric_csv(read_file(path)));
}

inline MetricSpace read_distance_csv(const std::filesystem::path& path,
                                     bool validate_triangle = true) {
  return MetricSpace::from_distance_matrix(parse_numeric_csv(read_file(path)),
                                           validate_triangle);
}

inline std::vector<long long> parse_labels_csv(const std::string& text) {
  std::vector<long long> labels;
  for (const auto& row : parse_numeric_csv(text)) {
    flatclust::detail::require(row.size() == 1, ErrorCode::parse,
                               "label rows must have exactly one column");
    flatclust::detail::require(row[0] == std::floor(row[0]), ErrorCode::parse,
                               "labels must be integers");
    labels.push_back(static_cast<long long>(row[0]));
  }
  return labels;
}

inline Partition read_labels_csv(const std::filesystem::path& path) {
  return Partition::from_labels(parse_labels_csv(read_file(path)));
}

inline std::string points_to_csv(const std::vector<std::vector<double>>& pts) {
  std::string out;
  for (const auto& p : pts) {
    for (std::size_t d = 0; d < p.size(); ++d) {
      if (d) out += ',';
      out += format_real(p[d]);
    }
    out += '\n';
  }
  return out;
}

inline std::string histogram_to_csv(const Histogram& h) {
  std::string out = "bin_lo,bin_hi,mass\n";
  for (std::size_t b = 0; b < h.mass.size(); ++b)
    out += format_real(h.edges[b]) + ',' + format_real(h.edges[b + 1]) + ',' +
           format_real(h.mass[b]) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json to_json(const Partition& P) {
  json noise = json::array();
  for (std::size_t i = 0; i < P.ground_size(); ++i)
    if (P.is_noise(i)) noise.push_back(i);
  return {{"n", P.ground_size()}, {"blocks", P.blocks()}, {"noise", noise}};
}

inline Partition partition_from_json(const json& j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    auto blocks = j.at("blocks").get<std::vector<Block>>();
    std::vector<bool> flags;
    if (j.contains("noise") && !j.at("noise").empty()) {
      flags.assign(n, false);
      for (std::size_t i : j.at("noise").get<std::vector<std::size_t>>()) {
        flatclust::detail::require(i < n, ErrorCode::out_of_range,
                                   "noise index out of range");
        flags[i] = true;
      }
    }
    return Partition(n, std::move(blocks), std::move(flags));
  } catch (const json::exception& e) {
    flatclust::detail::fail(ErrorCode::parse,
                            std::string("bad partition JSON: ") + e.what());
  }
}

/// Accepts partition JSON (by .json extension) or a labels CSV.
inline Partition read_partition(const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    try {
      return partition_from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
      flatclust::detail::fail(ErrorCode::parse, e.what());
    }
  }
  return read_labels_csv(path);
}

inline json to_json(const HyperparamSpace& O) {
  json axes = json::array();
  for (const auto& ax : O.axes())
    axes.push_back({{"lo", ax.lo},
                    {"hi", ax.hi},
                    {"lo_open", ax.lo_open},
                    {"hi_open", ax.hi_open},
                    {"opposite", ax.opposite}});
  return {{"axes", axes}};
}

inline HyperparamSpace space_from_json(const json& j) {
  std::vector<Axis> axes;
  for (const auto& a : j.at("axes")) {
    Axis ax;
    ax.lo = a.at("lo").get<double>();
    ax.hi = a.at("hi").get<double>();
    ax.opposite = a.value("opposite", false);
    ax.lo_open = a.value("lo_open", false);
    ax.hi_open = a.value("hi_open", false);
    axes.push_back(ax);
  }
  return HyperparamSpace(std::move(axes));
}

inline json to_json(const ParamMeasure& mu) {
  json ps = json::array();
  for (const auto& p : mu.particles()) ps.push_back({{"a", p.a.coords}, {"w", p.w}});
  return {{"space", to_json(mu.space())}, {"particles", ps}};
}

inline ParamMeasure measure_from_json(const json& j) {
  try {
    auto space = space_from_json(j.at("space"));
    std::vector<Particle> ps;
    for (const auto& p : j.at("particles"))
      ps.push_back({{p.at("a").get<std::vector<double>>()}, p.at("w").get<double>()});
    return ParamMeasure(std::move(space), std::move(ps));
  } catch (const json::exception& e) {
    flatclust::detail::fail(ErrorCode::parse,
                            std::string("bad measure JSON: ") + e.what());
  }
}

inline ParamMeasure read_measure(const std::filesystem::path& path) {
  try {
    return measure_from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    flatclust::detail::fail(ErrorCode::parse, e.what());
  }
}

namespace detail {

template <typename T>
json matrix_rows(const Matrix<T>& M) {
  json rows = json::array();
  for (std::size_t r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
Matrix<T> matrix_from_rows(const json& j, std::size_t rows, std::size_t cols) {
  flatclust::detail::require(j.size() == rows, ErrorCode::dimension_mismatch,
                             "matrix has the wrong number of rows");
  Matrix<T> M(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    flatclust::detail::require(j[r].size() == cols, ErrorCode::dimension_mismatch,
                               "matrix row has the wrong length");
    for (std::size_t c = 0; c < cols; ++c) M(r, c) = j[r][c].get<T>();
  }
  return M;
}

}  // namespace detail

inline json to_json(const BinaryIntegerProgram& p) {
  return {{"n", p.n},
          {"m", p.m},
          {"c", p.c},
          {"A", detail::matrix_rows(p.A)},
          {"B", detail::matrix_rows(p.B)},
          {"u", p.u}};
}

inline BinaryIntegerProgram program_from_json(const json& j) {
  try {
    BinaryIntegerProgram p;
    p.n = j.at("n").get<std::size_t>();
    p.m = j.at("m").get<std::size_t>();
    p.c = j.at("c").get<std::vector<double>>();
    p.u = j.at("u").get<std::vector<double>>();
    p.A = detail::matrix_from_rows<double>(j.at("A"), p.n, p.m);
    p.B = detail::matrix_from_rows<std::uint8_t>(j.at("B"), p.n, p.m);
    p.validate();
    return p;
  } catch (const json::exception& e) {
    flatclust::detail::fail(ErrorCode::parse,
                            std::string("bad program JSON: ") + e.what());
  }
}

inline json to_json(const ExperimentReport& r) {
  json trials = json::array();
  for (const auto& t : r.trials) {
    json rec = {{"a_star", t.a_star.coords},
                {"recovered", t.recovered},
                {"collapsed", t.collapsed},
                {"equivalence_mass", t.equivalence_mass},
                {"ess", t.ess},
                {"truth", to_json(t.truth)}};
    if (t.collapsed) rec["collapse_item"] = t.collapse_item;
    else rec["output"] = to_json(t.output);
    trials.push_back(std::move(rec));
  }
  return {{"recovery_rate", r.recovery_rate}, {"trials", trials}};
}

inline json to_json(const BenchmarkTable& t) {
  json rows = json::array();
  for (const auto& row : t.rows)
    rows.push_back({{"label", row.label}, {"a", row.a.coords}, {"ars", row.ars}});
  return {{"rows", rows},
          {"flatten_ars", t.flatten_ars},
          {"best_grid_ars", t.best_grid_ars},
          {"median_grid_ars", t.median_grid_ars}};
}

}  // namespace flatclust::io
