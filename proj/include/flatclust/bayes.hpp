#pragma once

// Finitely supported probability measures over a hyperparameter space and
// Bayesian reweighting of them against labeled partitions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "flatclust/clustering.hpp"
#include "flatclust/error.hpp"
#include "flatclust/metric.hpp"
#include "flatclust/parallel.hpp"
#include "flatclust/partition.hpp"
#include "flatclust/rng.hpp"

namespace flatclust {

inline constexpr double kWeightTolerance = 1e-9;

struct Particle {
  HyperparamPoint a;
  double w = 0.0;

  bool operator==(const Particle&) const = default;
};

class ParamMeasure {
 public:
  ParamMeasure() = default;

  /// Weights are normalized here; they must be finite, non-negative and not
  /// all zero.
  ParamMeasure(HyperparamSpace space, std::vector<Particle> particles)
      : space_(std::move(space)), particles_(std::move(particles)) {
    detail::require(!particles_.empty(), ErrorCode::empty_input,
                    "measure has no particles");
    double total = 0.0;
    for (const auto& p : particles_) {
      space_.require_contains(p.a);
      detail::require(std::isfinite(p.w) && p.w >= 0.0,
                      ErrorCode::invalid_argument,
                      "particle weights must be finite and >= 0");
      total += p.w;
    }
    detail::require(total > 0.0, ErrorCode::invalid_argument,
                    "measure has no positive weight");
    for (auto& p : particles_) p.w /= total;
  }

  const HyperparamSpace& space() const { return space_; }
  const std::vector<Particle>& particles() const { return particles_; }
  std::size_t size() const { return particles_.size(); }

  std::vector<double> weights() const {
    std::vector<double> w(particles_.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = particles_[i].w;
    return w;
  }

  std::size_t support_size() const {
    return static_cast<std::size_t>(
        std::count_if(particles_.begin(), particles_.end(),
                      [](const Particle& p) { return p.w > 0.0; }));
  }

  bool operator==(const ParamMeasure&) const = default;

 private:
  HyperparamSpace space_;
  std::vector<Particle> particles_;
};

/// Categorical sampling over particle indices.
class ParticleSampler {
 public:
  explicit ParticleSampler(const ParamMeasure& mu) : cum_(mu.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      s += mu.particles()[i].w;
      cum_[i] = s;
      if (mu.particles()[i].w > 0.0) last_positive_ = i;
    }
  }

  std::size_t draw(Rng& rng) const {
    const double x = rng.uniform() * cum_.back();
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), x);
    const auto i = static_cast<std::size_t>(it - cum_.begin());
    return std::min(i, last_positive_);
  }

 private:
  std::vector<double> cum_;
  std::size_t last_positive_ = 0;
};

inline HyperparamPoint sample(const ParamMeasure& mu, Rng& rng) {
  return mu.particles()[ParticleSampler(mu).draw(rng)].a;
}

namespace detail {

inline double sample_axis(const Axis& ax, Rng& rng) {
  if (ax.lo == ax.hi) return ax.lo;
  for (;;) {
    const double u = rng.uniform();
    // hi - width*u covers (lo, hi]; lo + width*u covers [lo, hi).
    const double x = (ax.lo_open && !ax.hi_open)
                         ? ax.hi - (ax.hi - ax.lo) * u
                         : ax.lo + (ax.hi - ax.lo) * u;
    if (ax.contains(x)) return x;
  }
}

}  // namespace detail

inline HyperparamPoint sample_uniform_point(const HyperparamSpace& O,
                                            Rng& rng) {
  HyperparamPoint a;
  a.coords.reserve(O.dims());
  for (const auto& ax : O.axes()) a.coords.push_back(detail::sample_axis(ax, rng));
  return a;
}

/// n_particles i.i.d. uniform draws from the box, equal weights.
inline ParamMeasure uniform_measure(const HyperparamSpace& O,
                                    std::size_t n_particles,
                                    std::uint64_t seed) {
  detail::require(n_particles >= 1, ErrorCode::invalid_argument,
                  "uniform measure needs at least one particle");
  Rng rng(seed);
  std::vector<Particle> ps;
  ps.reserve(n_particles);
  const double w = 1.0 / static_cast<double>(n_particles);
  for (std::size_t i = 0; i < n_particles; ++i)
    ps.push_back({sample_uniform_point(O, rng), w});
  return ParamMeasure(O, std::move(ps));
}

inline ParamMeasure dirac_measure(const HyperparamSpace& O,
                                  const HyperparamPoint& a) {
  return ParamMeasure(O, {{a, 1.0}});
}

inline double effective_sample_size(const ParamMeasure& mu) {
  double s = 0.0;
  for (const auto& p : mu.particles()) s += p.w * p.w;
  return 1.0 / s;
}

// ---------------------------------------------------------------------------

enum class Likelihood { Rand, ExactMatch };

inline double likelihood_value(Likelihood kind, const Partition& observed,
                               const Partition& produced) {
  return kind == Likelihood::Rand ? rand_likelihood_scaled(observed, produced)
                                  : exact_match_likelihood(observed, produced);
}

struct LabeledItem {
  MetricSpace space;
  Partition labels;
};

class LabeledDataset {
 public:
  LabeledDataset() = default;
  explicit LabeledDataset(std::vector<LabeledItem> items)
      : items_(std::move(items)) {
    for (std::size_t i = 0; i < items_.size(); ++i)
      detail::require(items_[i].space.size() == items_[i].labels.ground_size(),
                      ErrorCode::dimension_mismatch,
                      "item " + std::to_string(i) +
                          ": partition does not cover the metric space");
  }

  const std::vector<LabeledItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

 private:
  std::vector<LabeledItem> items_;
};

/// Raised when every reweighted particle has zero weight.
class PosteriorCollapse : public Error {
 public:
  PosteriorCollapse(std::size_t item, const std::string& what)
      : Error(ErrorCode::posterior_collapse, what), item_(item) {}

  std::size_t item() const noexcept { return item_; }

 private:
  std::size_t item_;
};

/// w_i' proportional to w_i * likelihood(observed | H(X)(a_i)). Particle
/// positions are unchanged and zero-weight particles stay at zero.
inline ParamMeasure bayes_update(const ParamMeasure& mu,
                                 const ClusteringFunctor& H,
                                 const MetricSpace& X,
                                 const Partition& observed,
                                 Likelihood kind = Likelihood::Rand,
                                 std::size_t item_index = 0) {
  detail::require(X.size() == observed.ground_size(),
                  ErrorCode::dimension_mismatch,
                  "observed partition does not match the metric space");
  detail::require(kind != Likelihood::Rand || X.size() >= 2,
                  ErrorCode::invalid_argument,
                  "rand likelihood needs at least two points");
  const auto& ps = mu.particles();
  std::vector<double> lik(ps.size(), 0.0);
  parallel_for(ps.size(), [&](std::size_t i) {
    if (ps[i].w > 0.0) lik[i] = likelihood_value(kind, observed, H(X, ps[i].a));
  });
  std::vector<Particle> out = ps;
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].w = ps[i].w * lik[i];
    total += out[i].w;
  }
  if (!(total > 0.0))
    throw PosteriorCollapse(item_index,
                            "posterior collapse at item " +
                                std::to_string(item_index) +
                                ": every particle has zero likelihood");
  return ParamMeasure(mu.space(), std::move(out));
}

struct UpdateTrace {
  ParamMeasure posterior;
  std::vector<double> ess;  // after each item
};

inline UpdateTrace bayes_update_all(const ParamMeasure& mu0,
                                    const ClusteringFunctor& H,
                                    const LabeledDataset& data,
                                    Likelihood kind = Likelihood::Rand) {
  detail::require(!data.empty(), ErrorCode::empty_input, "dataset is empty");
  UpdateTrace trace{mu0, {}};
  trace.ess.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& item = data.items()[i];
    trace.posterior =
        bayes_update(trace.posterior, H, item.space, item.labels, kind, i);
    trace.ess.push_back(effective_sample_size(trace.posterior));
  }
  return trace;
}

}  // namespace flatclust
