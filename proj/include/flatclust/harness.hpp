#pragma once

// Experiment runners: posterior consistency under repeated labeled
// observations, posterior histograms, and flattening versus fixed
// hyperparameters on synthetic blobs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "flatclust/bayes.hpp"
#include "flatclust/clustering.hpp"
#include "flatclust/error.hpp"
#include "flatclust/flatten.hpp"
#include "flatclust/metric.hpp"
#include "flatclust/parallel.hpp"
#include "flatclust/partition.hpp"
#include "flatclust/rng.hpp"

namespace flatclust {

/// k points drawn uniformly from the box [lo, hi].
inline std::vector<std::vector<double>> uniform_points(
    const std::vector<double>& lo, const std::vector<double>& hi,
    std::size_t k, Rng& rng) {
  std::vector<std::vector<double>> pts(k, std::vector<double>(lo.size()));
  for (auto& p : pts)
    for (std::size_t d = 0; d < lo.size(); ++d) p[d] = rng.uniform(lo[d], hi[d]);
  return pts;
}

struct ConsistencyConfig {
  std::vector<double> region_lo{0.0, 0.0};
  std::vector<double> region_hi{1.0, 1.0};
  std::size_t k = 6;
  std::size_t n_updates = 50;
  std::size_t n_particles = 400;
  std::string functor = "single-linkage";
  std::uint64_t seed = 0;
  std::size_t trials = 40;
  Likelihood likelihood = Likelihood::Rand;

  void validate() const {
    detail::require(!region_lo.empty() && region_lo.size() == region_hi.size(),
                    ErrorCode::dimension_mismatch,
                    "region bounds must have matching nonzero dimension");
    for (std::size_t d = 0; d < region_lo.size(); ++d)
      detail::require(std::isfinite(region_lo[d]) && std::isfinite(region_hi[d]) &&
                          region_lo[d] <= region_hi[d],
                      ErrorCode::invalid_argument, "region must be a compact box");
    detail::require(k >= 2, ErrorCode::invalid_argument, "k must be >= 2");
    detail::require(n_particles >= 1 && trials >= 1, ErrorCode::invalid_argument,
                    "particle and trial counts must be >= 1");
  }
};

struct TrialRecord {
  HyperparamPoint a_star;
  bool recovered = false;
  bool collapsed = false;
  std::size_t collapse_item = 0;
  // Posterior mass of {a : H(X)(a) = H(X)(a*)} on the evaluation set X,
  // before any update and after each one.
  std::vector<double> equivalence_mass;
  std::vector<double> ess;
  Partition truth;
  Partition output;
  ParamMeasure posterior;
};

struct ExperimentReport {
  std::vector<TrialRecord> trials;
  double recovery_rate = 0.0;
  double runtime_seconds = 0.0;  // wall clock, not part of the serialized report
};

namespace detail {

inline double equivalence_mass(const ParamMeasure& mu, const ClusteringFunctor& H,
                               const MetricSpace& X, const Partition& target) {
  double s = 0.0;
  for (const auto& p : mu.particles())
    if (p.w > 0.0 && H(X, p.a).same_blocks(target)) s += p.w;
  return s;
}

inline TrialRecord run_trial(const ConsistencyConfig& cfg,
                             const ClusteringFunctor& H, std::uint64_t seed) {
  TrialRecord rec;
  Rng rng(seed);
  rec.a_star = sample_uniform_point(H.space, rng);
  ParamMeasure mu = uniform_measure(H.space, cfg.n_particles, derive_seed(seed, 1));

  Rng eval_rng(derive_seed(seed, 2));
  const auto X_eval = MetricSpace::from_point_cloud(
      uniform_points(cfg.region_lo, cfg.region_hi, cfg.k, eval_rng));
  rec.truth = H(X_eval, rec.a_star);
  rec.equivalence_mass.push_back(equivalence_mass(mu, H, X_eval, rec.truth));

  for (std::size_t i = 0; i < cfg.n_updates; ++i) {
    const auto Xi = MetricSpace::from_point_cloud(
        uniform_points(cfg.region_lo, cfg.region_hi, cfg.k, rng));
    const Partition labels = H(Xi, rec.a_star);
    try {
      mu = bayes_update(mu, H, Xi, labels, cfg.likelihood, i);
    } catch (const PosteriorCollapse& e) {
      rec.collapsed = true;
      rec.collapse_item = e.item();
      rec.posterior = mu;
      return rec;
    }
    rec.ess.push_back(effective_sample_size(mu));
    rec.equivalence_mass.push_back(equivalence_mass(mu, H, X_eval, rec.truth));
  }

  rec.output = flatten(H, mu, X_eval, {CollectMode::ParticleExact, 0, 0});
  rec.recovered = rec.output.same_blocks(rec.truth);
  rec.posterior = std::move(mu);
  return rec;
}

}  // namespace detail

/// Per trial: draw a* uniformly, update a uniform particle prior on
/// n_updates random k-point datasets labeled by H(.)(a*), then flatten a
/// fresh k-point dataset with the posterior and check it reproduces
/// H(X)(a*). A collapsed posterior counts as a failed trial.
inline ExperimentReport consistency_experiment(const ConsistencyConfig& cfg) {
  cfg.validate();
  const auto H = make_functor(cfg.functor);
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.trials.resize(cfg.trials);
  parallel_for(cfg.trials, [&](std::size_t t) {
    report.trials[t] = detail::run_trial(cfg, H, derive_seed(cfg.seed, t));
  });
  std::size_t ok = 0;
  for (const auto& t : report.trials) ok += t.recovered ? 1 : 0;
  report.recovery_rate = static_cast<double>(ok) / static_cast<double>(cfg.trials);
  report.runtime_seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
  return report;
}

// ---------------------------------------------------------------------------

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<double> mass;   // bins

  std::size_t mode_bin() const {
    return static_cast<std::size_t>(
        std::max_element(mass.begin(), mass.end()) - mass.begin());
  }
};

/// Particle weight per equal-width bin along one axis of the space.
inline Histogram posterior_histogram(const ParamMeasure& mu, std::size_t axis,
                                     std::size_t bins) {
  detail::require(axis < mu.space().dims(), ErrorCode::out_of_range,
                  "histogram axis out of range");
  detail::require(bins >= 1, ErrorCode::invalid_argument, "bins must be >= 1");
  const Axis& ax = mu.space().axis(axis);
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b)
    h.edges[b] = ax.lo + (ax.hi - ax.lo) * static_cast<double>(b) /
                             static_cast<double>(bins);
  h.mass.assign(bins, 0.0);
  const double width = ax.hi - ax.lo;
  for (const auto& p : mu.particles()) {
    std::size_t b = 0;
    if (width > 0.0) {
      const double t = (p.a[axis] - ax.lo) / width * static_cast<double>(bins);
      b = static_cast<std::size_t>(std::clamp(std::floor(t), 0.0,
                                              static_cast<double>(bins - 1)));
    }
    h.mass[b] += p.w;
  }
  return h;
}

// ---------------------------------------------------------------------------

struct BlobConfig {
  std::size_t blobs = 3;
  std::size_t points_per_blob = 20;
  std::size_t dims = 2;
  double spread = 0.15;      // per-coordinate standard deviation
  double separation = 1.0;   // radius of the circle holding the centres
};

struct BlobData {
  std::vector<std::vector<double>> points;
  std::vector<long long> labels;
};

/// Gaussian blobs with centres evenly spaced on a circle in the first two
/// coordinates.
inline BlobData make_blobs(const BlobConfig& cfg, std::uint64_t seed) {
  detail::require(cfg.blobs >= 1 && cfg.points_per_blob >= 1 && cfg.dims >= 1,
                  ErrorCode::invalid_argument, "blob counts must be >= 1");
  Rng rng(seed);
  BlobData data;
  for (std::size_t b = 0; b < cfg.blobs; ++b) {
    std::vector<double> centre(cfg.dims, 0.0);
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(b) /
                         static_cast<double>(cfg.blobs);
    centre[0] = cfg.separation * std::cos(theta);
    if (cfg.dims > 1) centre[1] = cfg.separation * std::sin(theta);
    for (std::size_t i = 0; i < cfg.points_per_blob; ++i) {
      std::vector<double> p(cfg.dims);
      for (std::size_t d = 0; d < cfg.dims; ++d)
        p[d] = centre[d] + cfg.spread * rng.normal();
      data.points.push_back(std::move(p));
      data.labels.push_back(static_cast<long long>(b));
    }
  }
  return data;
}

/// Evenly spaced points (i + 1) / g on each axis of a (0,1]-type space:
/// 20 values in one dimension, a 4 x 5 grid in two.
inline std::vector<HyperparamPoint> parameter_grid(const HyperparamSpace& O) {
  std::vector<std::size_t> per_axis;
  if (O.dims() == 1) per_axis = {20};
  else if (O.dims() == 2) per_axis = {4, 5};
  else detail::fail(ErrorCode::invalid_argument,
                    "parameter grid supports one or two dimensions");
  std::vector<HyperparamPoint> grid;
  auto value = [&](std::size_t axis, std::size_t i) {
    const Axis& ax = O.axis(axis);
    return ax.lo + (ax.hi - ax.lo) * static_cast<double>(i + 1) /
                       static_cast<double>(per_axis[axis]);
  };
  if (O.dims() == 1) {
    for (std::size_t i = 0; i < per_axis[0]; ++i) grid.push_back({{value(0, i)}});
  } else {
    for (std::size_t i = 0; i < per_axis[0]; ++i)
      for (std::size_t j = 0; j < per_axis[1]; ++j)
        grid.push_back({{value(0, i), value(1, j)}});
  }
  return grid;
}

struct BenchmarkRow {
  std::string label;  // "grid" or "flatten"
  HyperparamPoint a;  // empty for the flatten row
  double ars = 0.0;
};

struct BenchmarkTable {
  std::vector<BenchmarkRow> rows;  // grid rows, then the flatten row
  double flatten_ars = 0.0;
  double best_grid_ars = 0.0;
  double median_grid_ars = 0.0;
};

inline BenchmarkTable benchmark_flatten_vs_fixed(const ClusteringFunctor& H,
                                                 const BlobConfig& blobs,
                                                 const ParamMeasure& mu0,
                                                 const FlattenOptions& opt,
                                                 std::uint64_t seed) {
  const auto data = make_blobs(blobs, seed);
  const auto X = MetricSpace::from_point_cloud(data.points);
  const auto truth = Partition::from_labels(data.labels);
  const auto grid = parameter_grid(H.space);

  BenchmarkTable table;
  std::vector<double> ars(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    ars[i] = adjusted_rand_score(H(X, grid[i]), truth);
  });
  for (std::size_t i = 0; i < grid.size(); ++i)
    table.rows.push_back({"grid", grid[i], ars[i]});

  table.flatten_ars = adjusted_rand_score(flatten(H, mu0, X, opt), truth);
  table.rows.push_back({"flatten", {}, table.flatten_ars});

  std::vector<double> sorted = ars;
  std::sort(sorted.begin(), sorted.end());
  table.best_grid_ars = sorted.back();
  const std::size_t g = sorted.size();
  table.median_grid_ars =
      g % 2 ? sorted[g / 2] : 0.5 * (sorted[g / 2 - 1] + sorted[g / 2]);
  return table;
}

}  // namespace flatclust
