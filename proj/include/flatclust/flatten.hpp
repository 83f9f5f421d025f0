#pragma once

// Flattening a hyperparameter-indexed clustering to a single partition:
// gather the clusters that appear across the measure, weight each by the
// measure of the hyperparameters producing it, and select the heaviest
// non-overlapping family through a binary integer program.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "flatclust/bayes.hpp"
#include "flatclust/bip.hpp"
#include "flatclust/clustering.hpp"
#include "flatclust/error.hpp"
#include "flatclust/metric.hpp"
#include "flatclust/parallel.hpp"
#include "flatclust/partition.hpp"
#include "flatclust/rng.hpp"

namespace flatclust {

enum class CollectMode {
  Sampling,       // Monte Carlo draws from the measure
  ParticleExact,  // every support particle, weighted exactly
};

/// The distinct clusters seen across hyperparameter values, with the mass
/// of the hyperparameters that produce each one.
struct PartitionCollection {
  std::size_t ground_size = 0;
  CollectMode mode = CollectMode::ParticleExact;
  std::vector<Block> sets;
  std::vector<double> mass;
  // provenance[i]: the sources (particle indices, or sample indices in
  // sampling mode) whose partition contains sets[i], ascending.
  std::vector<std::vector<std::size_t>> provenance;
  // Weight carried by each source.
  std::vector<double> source_weight;

  std::size_t size() const { return sets.size(); }
};

namespace detail {

inline void sort_collection(PartitionCollection& S) {
  std::vector<std::size_t> idx(S.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (S.mass[a] != S.mass[b]) return S.mass[a] > S.mass[b];
    return S.sets[a] < S.sets[b];
  });
  PartitionCollection out{S.ground_size, S.mode, {}, {}, {}, S.source_weight};
  for (std::size_t i : idx) {
    out.sets.push_back(std::move(S.sets[i]));
    out.mass.push_back(S.mass[i]);
    out.provenance.push_back(std::move(S.provenance[i]));
  }
  S = std::move(out);
}

// Deduplicates the blocks of per-source partitions, in source order.
inline PartitionCollection gather(std::size_t ground_size, CollectMode mode,
                                  const std::vector<const Partition*>& parts,
                                  std::vector<double> source_weight) {
  PartitionCollection S{ground_size, mode, {}, {}, {}, std::move(source_weight)};
  std::map<Block, std::size_t> index;
  for (std::size_t src = 0; src < parts.size(); ++src) {
    if (parts[src] == nullptr) continue;
    for (const auto& b : parts[src]->blocks()) {
      auto [it, fresh] = index.try_emplace(b, S.sets.size());
      if (fresh) {
        S.sets.push_back(b);
        S.mass.push_back(0.0);
        S.provenance.emplace_back();
      }
      S.mass[it->second] += S.source_weight[src];
      S.provenance[it->second].push_back(src);
    }
  }
  // Frequencies exactly, rather than a running sum of 1/n.
  if (mode == CollectMode::Sampling)
    for (std::size_t i = 0; i < S.size(); ++i)
      S.mass[i] = static_cast<double>(S.provenance[i].size()) /
                  static_cast<double>(parts.size());
  sort_collection(S);
  return S;
}

}  // namespace detail

/// Evaluates H across the measure. In sampling mode draws n_samples
/// hyperparameters with Rng(seed) and sets mass to appearance frequency; in
/// particle-exact mode n_samples and seed are ignored and mass is the total
/// weight of the particles producing each set.
inline PartitionCollection collect_partitions(const ClusteringFunctor& H,
                                              const ParamMeasure& mu,
                                              const MetricSpace& X,
                                              CollectMode mode,
                                              std::size_t n_samples = 0,
                                              std::uint64_t seed = 0) {
  detail::require(mu.size() > 0, ErrorCode::empty_input,
                  "measure has empty support");
  detail::require(X.size() > 0, ErrorCode::empty_input, "metric space is empty");
  const auto& ps = mu.particles();

  if (mode == CollectMode::ParticleExact) {
    std::vector<Partition> parts(ps.size());
    parallel_for(ps.size(), [&](std::size_t i) {
      if (ps[i].w > 0.0) parts[i] = H(X, ps[i].a);
    });
    std::vector<const Partition*> refs(ps.size(), nullptr);
    for (std::size_t i = 0; i < ps.size(); ++i)
      if (ps[i].w > 0.0) refs[i] = &parts[i];
    return detail::gather(X.size(), mode, refs, mu.weights());
  }

  detail::require(n_samples >= 1, ErrorCode::invalid_argument,
                  "sampling mode needs at least one sample");
  Rng rng(seed);
  const ParticleSampler sampler(mu);
  std::vector<std::size_t> drawn(n_samples);
  for (auto& d : drawn) d = sampler.draw(rng);

  // Each distinct particle is evaluated once.
  std::vector<std::size_t> unique = drawn;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<Partition> parts(unique.size());
  parallel_for(unique.size(),
               [&](std::size_t i) { parts[i] = H(X, ps[unique[i]].a); });

  std::vector<const Partition*> refs(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const auto pos = std::lower_bound(unique.begin(), unique.end(), drawn[s]);
    refs[s] = &parts[static_cast<std::size_t>(pos - unique.begin())];
  }
  return detail::gather(X.size(), mode, refs,
                        std::vector<double>(n_samples,
                                            1.0 / static_cast<double>(n_samples)));
}

namespace detail {

inline bool intersects(const Block& a, const Block& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return true;
    if (a[i] < b[j]) ++i;
    else ++j;
  }
  return false;
}

inline bool contains(const Block& outer, const Block& inner) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

}  // namespace detail

/// c_i = mass_i, A = (M-1) I, B_ij = [s_i and s_j intersect], u_i = M.
/// Row i allows v_i = 1 only when no set overlapping s_i is selected.
inline BinaryIntegerProgram build_bip(const PartitionCollection& S) {
  const std::size_t M = S.size();
  detail::require(M > 0, ErrorCode::empty_input, "partition collection is empty");
  BinaryIntegerProgram prog;
  prog.n = prog.m = M;
  prog.c = S.mass;
  prog.A = scaled_diagonal(M, M, static_cast<double>(M - 1));
  prog.B = BoolMatrix(M, M);
  for (std::size_t i = 0; i < M; ++i) {
    prog.B(i, i) = 1;
    for (std::size_t j = i + 1; j < M; ++j)
      if (detail::intersects(S.sets[i], S.sets[j])) prog.B(i, j) = prog.B(j, i) = 1;
  }
  prog.u.assign(M, static_cast<double>(M));
  return prog;
}

/// Blocks from the selected sets; every point they leave uncovered becomes a
/// singleton flagged as noise.
inline Partition decode_selection(const PartitionCollection& S,
                                  std::span<const std::uint8_t> v) {
  std::vector<Block> blocks;
  std::vector<bool> covered(S.ground_size, false);
  for (std::size_t i = 0; i < S.size(); ++i) {
    if (!v[i]) continue;
    blocks.push_back(S.sets[i]);
    for (std::size_t x : S.sets[i]) covered[x] = true;
  }
  std::vector<bool> noise(S.ground_size, false);
  for (std::size_t x = 0; x < S.ground_size; ++x)
    if (!covered[x]) {
      blocks.push_back({x});
      noise[x] = true;
    }
  return Partition(S.ground_size, std::move(blocks), std::move(noise));
}

struct FlattenResult {
  Partition partition;
  PartitionCollection collection;
  BinaryIntegerProgram program;  // empty for the tree path
  BinaryVector selection;
  double objective = 0.0;
};

struct FlattenOptions {
  CollectMode mode = CollectMode::ParticleExact;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

inline FlattenResult flatten_detailed(const ClusteringFunctor& H,
                                      const ParamMeasure& mu,
                                      const MetricSpace& X,
                                      const FlattenOptions& opt = {}) {
  FlattenResult r;
  r.collection = collect_partitions(H, mu, X, opt.mode, opt.n_samples, opt.seed);
  r.program = build_bip(r.collection);
  auto sol = solve_exact(r.program);
  r.selection = std::move(sol.v);
  r.objective = sol.objective;
  r.partition = decode_selection(r.collection, r.selection);
  return r;
}

inline Partition flatten(const ClusteringFunctor& H, const ParamMeasure& mu,
                         const MetricSpace& X, const FlattenOptions& opt = {}) {
  return flatten_detailed(H, mu, X, opt).partition;
}

// ---------------------------------------------------------------------------
// Morphisms induced by bijective natural transformations

using JointMass = std::function<double(std::size_t, std::size_t)>;

/// joint(i, j) = weight of the sources producing both S_X.sets[i] and
/// S_Y.sets[j]. Both collections must come from the same sources (same
/// measure, mode and seed).
inline JointMass provenance_joint_mass(const PartitionCollection& SX,
                                       const PartitionCollection& SY) {
  detail::require(SX.source_weight == SY.source_weight,
                  ErrorCode::invalid_argument,
                  "collections were built from different sources");
  return [&SX, &SY](std::size_t i, std::size_t j) {
    const auto& a = SX.provenance[i];
    const auto& b = SY.provenance[j];
    double s = 0.0;
    std::size_t p = 0, q = 0;
    while (p < a.size() && q < b.size()) {
      if (a[p] == b[q]) {
        s += SX.source_weight[a[p]];
        ++p;
        ++q;
      } else if (a[p] < b[q]) {
        ++p;
      } else {
        ++q;
      }
    }
    return s;
  };
}

/// The program morphism Flatten(S_X) -> Flatten(S_Y) induced by a bijection
/// f between the ground sets.
inline BipMorphism build_morphism(const PartitionCollection& SX,
                                  const PartitionCollection& SY,
                                  std::span<const std::size_t> f,
                                  const JointMass& joint_mass) {
  const std::size_t n = SX.ground_size;
  detail::require(SY.ground_size == n && f.size() == n,
                  ErrorCode::dimension_mismatch,
                  "map and collections disagree on the ground size");
  std::vector<bool> hit(n, false);
  for (std::size_t y : f) {
    detail::require(y < n && !hit[y], ErrorCode::not_bijective,
                    "map is not a bijection");
    hit[y] = true;
  }
  const std::size_t mx = SX.size();
  const std::size_t my = SY.size();
  detail::require(mx > 0 && my > 0, ErrorCode::empty_input,
                  "partition collection is empty");
  detail::require(my <= mx, ErrorCode::invalid_argument,
                  "target collection is larger than the source collection");
  detail::require(mx > 1 || my == 1, ErrorCode::invalid_argument,
                  "degenerate collection sizes");

  // member[j][y]: point y lies in target set j.
  std::vector<std::vector<bool>> member(my, std::vector<bool>(n, false));
  for (std::size_t j = 0; j < my; ++j)
    for (std::size_t y : SY.sets[j]) member[j][y] = true;

  BoolMatrix P_B(my, mx);
  RealMatrix P_c(mx, my);
  for (std::size_t i = 0; i < mx; ++i)
    for (std::size_t j = 0; j < my; ++j) {
      const bool inside = std::all_of(
          SX.sets[i].begin(), SX.sets[i].end(),
          [&](std::size_t x) { return member[j][f[x]]; });
      if (!inside) continue;
      P_B(j, i) = 1;
      detail::require(SY.mass[j] > 0.0, ErrorCode::zero_mass,
                      "target set " + std::to_string(j) +
                          " has zero mass but receives a source set");
      P_c(i, j) = joint_mass(i, j) / SY.mass[j];
    }

  const double a_scale =
      mx == 1 ? 1.0
              : std::sqrt(static_cast<double>(my - 1) /
                          static_cast<double>(mx - 1));
  RealMatrix P_A = scaled_diagonal(my, mx, a_scale);
  RealMatrix P_u = scaled_diagonal(
      my, mx, static_cast<double>(my) / static_cast<double>(mx));
  BipMorphism phi;
  phi.P_c = std::move(P_c);
  phi.P_u = std::move(P_u);
  phi.P_A_star = P_A.transpose();
  phi.P_A = std::move(P_A);
  phi.P_B_star = P_B.transpose();
  phi.P_B = std::move(P_B);
  return phi;
}

// ---------------------------------------------------------------------------
// Tree fast path for totally ordered hyperparameters

/// Selection for a laminar collection (any two sets nested or disjoint) by
/// dynamic programming over the containment forest: a set is kept unless
/// the best total among its children is at least as large, so ties go to
/// the smaller sets. Throws not_laminar on a proper overlap.
inline BinaryVector tree_select(const PartitionCollection& S) {
  const std::size_t M = S.size();

  // Children before parents: ascending size, then collection order.
  std::vector<std::size_t> by_size(M);
  for (std::size_t i = 0; i < M; ++i) by_size[i] = i;
  std::stable_sort(by_size.begin(), by_size.end(),
                   [&](std::size_t a, std::size_t b) {
                     return S.sets[a].size() < S.sets[b].size();
                   });

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> parent(M, kNone);
  for (std::size_t p = 0; p < M; ++p) {
    const std::size_t i = by_size[p];
    for (std::size_t q = p + 1; q < M; ++q) {
      const std::size_t j = by_size[q];
      if (!detail::intersects(S.sets[i], S.sets[j])) continue;
      detail::require(detail::contains(S.sets[j], S.sets[i]),
                      ErrorCode::not_laminar,
                      "collected sets overlap without nesting");
      if (parent[i] == kNone) parent[i] = j;
    }
  }

  std::vector<double> child_sum(M, 0.0);
  std::vector<bool> keep(M, false);
  for (std::size_t i : by_size) {
    keep[i] = S.mass[i] > child_sum[i];
    if (parent[i] != kNone)
      child_sum[parent[i]] += keep[i] ? S.mass[i] : child_sum[i];
  }

  // Top-down: a kept set is selected unless an ancestor already is.
  BinaryVector selection(M, 0);
  std::vector<bool> covered(M, false);
  for (auto it = by_size.rbegin(); it != by_size.rend(); ++it) {
    const std::size_t i = *it;
    covered[i] = parent[i] != kNone &&
                 (covered[parent[i]] || selection[parent[i]]);
    if (!covered[i] && keep[i]) selection[i] = 1;
  }
  return selection;
}

/// Flattening through tree_select instead of the integer program. Needs a
/// one-dimensional (totally ordered) hyperparameter space.
inline FlattenResult flatten_tree(const ClusteringFunctor& H,
                                  const ParamMeasure& mu, const MetricSpace& X,
                                  const FlattenOptions& opt = {}) {
  detail::require(H.space.dims() == 1, ErrorCode::invalid_argument,
                  "tree flattening needs a one-dimensional hyperparameter space");
  FlattenResult r;
  r.collection = collect_partitions(H, mu, X, opt.mode, opt.n_samples, opt.seed);
  r.selection = tree_select(r.collection);
  double obj = 0.0;
  for (std::size_t i = 0; i < r.collection.size(); ++i)
    if (r.selection[i]) obj += r.collection.mass[i];
  r.objective = obj;
  r.partition = decode_selection(r.collection, r.selection);
  return r;
}

}  // namespace flatclust
