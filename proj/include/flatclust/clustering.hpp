#pragma once

// Hyperparameter spaces and hyperparameter-indexed clustering functors.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "flatclust/error.hpp"
#include "flatclust/metric.hpp"
#include "flatclust/partition.hpp"

namespace flatclust {

/// One axis of a box-shaped hyperparameter space. `opposite` reverses the
/// order on this axis, so (0,1]^op has a <= b iff a >= b numerically.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool lo_open = true;
  bool hi_open = false;
  bool opposite = true;

  bool contains(double x) const {
    if (!std::isfinite(x)) return false;
    if (lo_open ? x <= lo : x < lo) return false;
    if (hi_open ? x >= hi : x > hi) return false;
    return true;
  }

  bool operator==(const Axis&) const = default;
};

struct HyperparamPoint {
  std::vector<double> coords;

  std::size_t dims() const { return coords.size(); }
  double operator[](std::size_t i) const { return coords[i]; }

  bool operator==(const HyperparamPoint&) const = default;
};

class HyperparamSpace {
 public:
  HyperparamSpace() = default;
  explicit HyperparamSpace(std::vector<Axis> axes) : axes_(std::move(axes)) {
    for (const auto& ax : axes_) {
      detail::require(std::isfinite(ax.lo) && std::isfinite(ax.hi),
                      ErrorCode::invalid_argument,
                      "hyperparameter axes must be bounded");
      detail::require(ax.lo < ax.hi || (ax.lo == ax.hi && !ax.lo_open &&
                                        !ax.hi_open),
                      ErrorCode::invalid_argument,
                      "hyperparameter axis interval is empty");
    }
  }

  /// (0,1]^op on every axis.
  static HyperparamSpace unit_op(std::size_t dims) {
    return HyperparamSpace(std::vector<Axis>(dims, Axis{}));
  }

  std::size_t dims() const { return axes_.size(); }
  const std::vector<Axis>& axes() const { return axes_; }
  const Axis& axis(std::size_t i) const { return axes_[i]; }

  bool contains(const HyperparamPoint& a) const {
    if (a.dims() != dims()) return false;
    for (std::size_t i = 0; i < dims(); ++i)
      if (!axes_[i].contains(a[i])) return false;
    return true;
  }

  void require_contains(const HyperparamPoint& a) const {
    detail::require(a.dims() == dims(), ErrorCode::dimension_mismatch,
                    "hyperparameter has " + std::to_string(a.dims()) +
                        " coordinates, space has " + std::to_string(dims()));
    detail::require(contains(a), ErrorCode::out_of_range,
                    "hyperparameter outside its space");
  }

  bool operator==(const HyperparamSpace&) const = default;

 private:
  std::vector<Axis> axes_;
};

/// Product order on O, reversed on opposite axes.
inline bool order_leq(const HyperparamSpace& O, const HyperparamPoint& a,
                      const HyperparamPoint& b) {
  detail::require(a.dims() == O.dims() && b.dims() == O.dims(),
                  ErrorCode::dimension_mismatch,
                  "hyperparameter dimension differs from space");
  for (std::size_t i = 0; i < O.dims(); ++i) {
    const bool ok = O.axis(i).opposite ? a[i] >= b[i] : a[i] <= b[i];
    if (!ok) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool merge(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned> rank_;
};

/// Connected components of the graph joining points at distance <= delta.
inline Partition vr_components(const MetricSpace& X, double delta) {
  detail::require(delta >= 0.0 && !std::isnan(delta), ErrorCode::out_of_range,
                  "delta must be >= 0");
  const std::size_t n = X.size();
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (X(i, j) <= delta) uf.merge(i, j);
  std::vector<std::vector<std::size_t>> by_root(n);
  for (std::size_t i = 0; i < n; ++i) by_root[uf.find(i)].push_back(i);
  std::vector<Block> blocks;
  for (auto& b : by_root)
    if (!b.empty()) blocks.push_back(std::move(b));
  return Partition(n, std::move(blocks));
}

inline double threshold_from_param(double a) {
  detail::require(a > 0.0 && a <= 1.0, ErrorCode::out_of_range,
                  "hyperparameter must lie in (0, 1]");
  return -std::log(a);
}

/// Components of the -log(a) Vietoris-Rips complex.
inline Partition single_linkage(const MetricSpace& X, double a) {
  return vr_components(X, threshold_from_param(a));
}

/// Components of the -log(a2) Vietoris-Rips complex of the
/// mutual-reachability space at a1.
inline Partition robust_single_linkage(const MetricSpace& X, double a1,
                                       double a2) {
  const double delta = threshold_from_param(a2);
  return vr_components(mutual_reachability(X, a1), delta);
}

// ---------------------------------------------------------------------------

/// Category of metric maps a functor is natural over.
enum class CategoryTag { Met, MetBij };

inline std::string_view to_string(CategoryTag tag) {
  return tag == CategoryTag::Met ? "Met" : "Met_bij";
}

/// A hyperparameter-indexed clustering algorithm. Functoriality in both the
/// metric and the order is a property the implementations are tested for,
/// not something this type enforces.
struct ClusteringFunctor {
  using Evaluator =
      std::function<Partition(const MetricSpace&, const HyperparamPoint&)>;

  std::string name;
  HyperparamSpace space;
  Evaluator evaluator;
  CategoryTag category = CategoryTag::Met;

  Partition operator()(const MetricSpace& X, const HyperparamPoint& a) const {
    space.require_contains(a);
    return evaluator(X, a);
  }
};

inline ClusteringFunctor make_single_linkage_functor() {
  return {"single-linkage", HyperparamSpace::unit_op(1),
          [](const MetricSpace& X, const HyperparamPoint& a) {
            return single_linkage(X, a[0]);
          },
          CategoryTag::Met};
}

inline ClusteringFunctor make_robust_sl_functor() {
  return {"robust-single-linkage", HyperparamSpace::unit_op(2),
          [](const MetricSpace& X, const HyperparamPoint& a) {
            return robust_single_linkage(X, a[0], a[1]);
          },
          CategoryTag::MetBij};
}

inline ClusteringFunctor make_functor(std::string_view name) {
  if (name == "single-linkage") return make_single_linkage_functor();
  if (name == "robust-single-linkage") return make_robust_sl_functor();
  detail::fail(ErrorCode::invalid_argument,
               "unknown functor '" + std::string(name) + "'");
}

}  // namespace flatclust
