#pragma once

// Finite metric spaces, maps between them, and the core-distance /
// mutual-reachability transform used by robust single linkage.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "flatclust/error.hpp"

namespace flatclust {

/// Absolute tolerance for every metric comparison in the library.
inline constexpr double kMetricTolerance = 1e-9;

class MetricSpace {
 public:
  MetricSpace() = default;

  /// Euclidean distances between the rows of `points`.
  static MetricSpace from_point_cloud(
      const std::vector<std::vector<double>>& points) {
    detail::require(!points.empty(), ErrorCode::empty_input,
                    "point cloud is empty");
    const std::size_t dim = points.front().size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      detail::require(points[i].size() == dim, ErrorCode::dimension_mismatch,
                      "point " + std::to_string(i) + " has dimension " +
                          std::to_string(points[i].size()) + ", expected " +
                          std::to_string(dim));
      for (double x : points[i])
        detail::require(std::isfinite(x), ErrorCode::non_finite,
                        "point " + std::to_string(i) +
                            " has a non-finite coordinate");
    }
    const std::size_t n = points.size();
    MetricSpace space(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          const double d = points[i][k] - points[j][k];
          s += d * d;
        }
        space.set(i, j, std::sqrt(s));
      }
    return space;
  }

  /// Wraps a square matrix. Entries are symmetrized by averaging once the
  /// asymmetry is known to be within tolerance.
  static MetricSpace from_distance_matrix(
      const std::vector<std::vector<double>>& matrix,
      bool validate_triangle = true) {
    detail::require(!matrix.empty(), ErrorCode::empty_input,
                    "distance matrix is empty");
    const std::size_t n = matrix.size();
    for (std::size_t i = 0; i < n; ++i)
      detail::require(matrix[i].size() == n, ErrorCode::dimension_mismatch,
                      "distance matrix is not square");
    MetricSpace space(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double d = matrix[i][j];
        detail::require(std::isfinite(d), ErrorCode::non_finite,
                        "non-finite distance at (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
        detail::require(d >= 0.0, ErrorCode::negative_entry,
                        "negative distance at (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
      }
      detail::require(matrix[i][i] <= kMetricTolerance,
                      ErrorCode::invalid_argument,
                      "nonzero diagonal at " + std::to_string(i));
      for (std::size_t j = i + 1; j < n; ++j) {
        detail::require(
            std::abs(matrix[i][j] - matrix[j][i]) <= kMetricTolerance,
            ErrorCode::asymmetric,
            "distance matrix is asymmetric at (" + std::to_string(i) + "," +
                std::to_string(j) + ")");
        space.set(i, j, 0.5 * (matrix[i][j] + matrix[j][i]));
      }
    }
    if (validate_triangle) space.validate_triangle();
    return space;
  }

  std::size_t size() const { return n_; }

  double operator()(std::size_t i, std::size_t j) const {
    return dist_[i * n_ + j];
  }

  const std::vector<std::string>& point_ids() const { return ids_; }

  void set_point_ids(std::vector<std::string> ids) {
    detail::require(ids.size() == n_, ErrorCode::dimension_mismatch,
                    "point id count differs from point count");
    ids_ = std::move(ids);
  }

  /// Largest pairwise distance.
  double diameter() const {
    return dist_.empty() ? 0.0 : *std::max_element(dist_.begin(), dist_.end());
  }

  void validate_triangle() const {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t k = 0; k < n_; ++k)
          detail::require(
              (*this)(i, j) <= (*this)(i, k) + (*this)(k, j) + kMetricTolerance,
              ErrorCode::triangle_violation,
              "triangle inequality violated: d(" + std::to_string(i) + "," +
                  std::to_string(j) + ") > d(" + std::to_string(i) + "," +
                  std::to_string(k) + ") + d(" + std::to_string(k) + "," +
                  std::to_string(j) + ")");
  }

  /// Copy with every distance multiplied by `factor` (factor >= 0).
  MetricSpace scaled(double factor) const {
    detail::require(factor >= 0.0 && std::isfinite(factor),
                    ErrorCode::invalid_argument, "scale factor must be >= 0");
    MetricSpace out = *this;
    for (double& d : out.dist_) d *= factor;
    return out;
  }

  /// Relabelled copy: point i of the result is point perm[i] of this space.
  MetricSpace permuted(std::span<const std::size_t> perm) const {
    detail::require(perm.size() == n_, ErrorCode::dimension_mismatch,
                    "permutation size differs from point count");
    MetricSpace out(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        out.dist_[i * n_ + j] = (*this)(perm[i], perm[j]);
    for (std::size_t i = 0; i < n_; ++i) out.ids_[i] = ids_[perm[i]];
    return out;
  }

  bool operator==(const MetricSpace&) const = default;

 private:
  explicit MetricSpace(std::size_t n) : n_(n), dist_(n * n, 0.0), ids_(n) {
    for (std::size_t i = 0; i < n; ++i) ids_[i] = std::to_string(i);
  }

  void set(std::size_t i, std::size_t j, double d) {
    dist_[i * n_ + j] = d;
    dist_[j * n_ + i] = d;
  }

  std::size_t n_ = 0;
  std::vector<double> dist_;
  std::vector<std::string> ids_;

  friend MetricSpace mutual_reachability(const MetricSpace&, double);
};

/// A function between the point sets of two metric spaces.
struct MetricMap {
  MetricSpace source;
  MetricSpace target;
  std::vector<std::size_t> mapping;

  void validate() const {
    detail::require(mapping.size() == source.size(),
                    ErrorCode::dimension_mismatch,
                    "map is not total on its source");
    for (std::size_t y : mapping)
      detail::require(y < target.size(), ErrorCode::out_of_range,
                      "map image index " + std::to_string(y) +
                          " out of range");
  }

  bool is_bijective() const {
    validate();
    if (source.size() != target.size()) return false;
    std::vector<bool> hit(target.size(), false);
    for (std::size_t y : mapping) {
      if (hit[y]) return false;
      hit[y] = true;
    }
    return true;
  }
};

inline bool check_nonexpansive(const MetricMap& f) {
  f.validate();
  const std::size_t n = f.source.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (f.target(f.mapping[i], f.mapping[j]) >
          f.source(i, j) + kMetricTolerance)
        return false;
  return true;
}

/// g after f. Requires f.target and g.source to have the same size.
inline MetricMap compose(const MetricMap& g, const MetricMap& f) {
  f.validate();
  g.validate();
  detail::require(f.target.size() == g.source.size(),
                  ErrorCode::dimension_mismatch, "maps are not composable");
  MetricMap out{f.source, g.target, {}};
  out.mapping.reserve(f.mapping.size());
  for (std::size_t x : f.mapping) out.mapping.push_back(g.mapping[x]);
  return out;
}

/// Neighbour rank used for a fraction a1 of the point count: floor(a1 * n)
/// clamped to n - 1.
inline std::size_t core_rank(std::size_t n, double a1) {
  detail::require(a1 > 0.0 && a1 <= 1.0, ErrorCode::out_of_range,
                  "a1 must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(std::floor(a1 * static_cast<double>(n)));
  return n == 0 ? 0 : std::min(k, n - 1);
}

/// Distance from each point to its k-th nearest *other* point, with
/// k = core_rank(|X|, a1). k = 0 gives all zeros.
inline std::vector<double> core_distance(const MetricSpace& X, double a1) {
  const std::size_t n = X.size();
  const std::size_t k = core_rank(n, a1);
  std::vector<double> core(n, 0.0);
  if (k == 0) return core;
  std::vector<double> row;
  row.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row.push_back(X(i, j));
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     row.end());
    core[i] = row[k - 1];
  }
  return core;
}

/// max(d(x, y), core(x), core(y)) off the diagonal; the diagonal stays 0.
/// The result can break the triangle inequality and is not validated.
inline MetricSpace mutual_reachability(const MetricSpace& X, double a1) {
  const auto core = core_distance(X, a1);
  MetricSpace out = X;
  const std::size_t n = X.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      out.set(i, j, std::max({X(i, j), core[i], core[j]}));
  return out;
}

}  // namespace flatclust
