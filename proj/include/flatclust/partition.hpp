#pragma once

// Partitions of {0, ..., n-1}, partition morphisms, the Rand-index
// likelihood over partitions, and the adjusted Rand score.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "flatclust/error.hpp"

namespace flatclust {

using Block = std::vector<std::size_t>;

class Partition {
 public:
  Partition() = default;

  /// Validates and canonicalizes. `noise_flags` is either empty or one flag
  /// per point.
  Partition(std::size_t ground_size, std::vector<Block> blocks,
            std::vector<bool> noise_flags = {})
      : n_(ground_size), blocks_(std::move(blocks)),
        noise_(std::move(noise_flags)) {
    detail::require(noise_.empty() || noise_.size() == n_,
                    ErrorCode::dimension_mismatch,
                    "noise flags must be empty or one per point");
    std::vector<bool> seen(n_, false);
    std::size_t covered = 0;
    for (auto& b : blocks_) {
      detail::require(!b.empty(), ErrorCode::invalid_argument,
                      "partition has an empty block");
      std::sort(b.begin(), b.end());
      for (std::size_t x : b) {
        detail::require(x < n_, ErrorCode::out_of_range,
                        "block member " + std::to_string(x) +
                            " out of range");
        detail::require(!seen[x], ErrorCode::invalid_argument,
                        "point " + std::to_string(x) +
                            " appears in more than one block");
        seen[x] = true;
        ++covered;
      }
    }
    detail::require(covered == n_, ErrorCode::invalid_argument,
                    "blocks do not cover the ground set");
    std::sort(blocks_.begin(), blocks_.end(),
              [](const Block& a, const Block& b) { return a.front() < b.front(); });
    if (std::none_of(noise_.begin(), noise_.end(), [](bool f) { return f; }))
      noise_.clear();
  }

  /// Blocks from integer labels; equal labels share a block. Negative labels
  /// mark noise: each such point becomes its own flagged singleton.
  static Partition from_labels(std::span<const long long> labels) {
    std::map<long long, Block> groups;
    std::vector<Block> blocks;
    std::vector<bool> noise(labels.size(), false);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0) {
        blocks.push_back({i});
        noise[i] = true;
      } else {
        groups[labels[i]].push_back(i);
      }
    }
    for (auto& [label, b] : groups) blocks.push_back(std::move(b));
    return Partition(labels.size(), std::move(blocks), std::move(noise));
  }

  static Partition singletons(std::size_t n) {
    std::vector<Block> blocks(n);
    for (std::size_t i = 0; i < n; ++i) blocks[i] = {i};
    return Partition(n, std::move(blocks));
  }

  static Partition whole(std::size_t n) {
    Block b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = i;
    return Partition(n, n == 0 ? std::vector<Block>{} : std::vector<Block>{b});
  }

  std::size_t ground_size() const { return n_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t block_count() const { return blocks_.size(); }

  bool has_noise() const { return !noise_.empty(); }
  bool is_noise(std::size_t i) const { return !noise_.empty() && noise_[i]; }
  const std::vector<bool>& noise_flags() const { return noise_; }

  /// Block index of every point.
  std::vector<std::size_t> labels() const {
    std::vector<std::size_t> out(n_);
    for (std::size_t b = 0; b < blocks_.size(); ++b)
      for (std::size_t x : blocks_[b]) out[x] = b;
    return out;
  }

  /// Same blocks; noise flags ignored.
  bool same_blocks(const Partition& other) const {
    return n_ == other.n_ && blocks_ == other.blocks_;
  }

  bool operator==(const Partition&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<Block> blocks_;
  std::vector<bool> noise_;
};

/// True iff every block of P lands inside a single block of Q under f.
inline bool is_partition_morphism(std::span<const std::size_t> f,
                                  const Partition& P, const Partition& Q) {
  detail::require(f.size() == P.ground_size(), ErrorCode::dimension_mismatch,
                  "map is not total on the source ground set");
  for (std::size_t y : f)
    detail::require(y < Q.ground_size(), ErrorCode::out_of_range,
                    "map image index " + std::to_string(y) + " out of range");
  const auto q_label = Q.labels();
  for (const auto& block : P.blocks()) {
    const std::size_t target = q_label[f[block.front()]];
    for (std::size_t x : block)
      if (q_label[f[x]] != target) return false;
  }
  return true;
}

inline bool refines(const Partition& P, const Partition& Q) {
  detail::require(P.ground_size() == Q.ground_size(),
                  ErrorCode::dimension_mismatch, "ground sizes differ");
  std::vector<std::size_t> id(P.ground_size());
  for (std::size_t i = 0; i < id.size(); ++i) id[i] = i;
  return is_partition_morphism(id, P, Q);
}

// ---------------------------------------------------------------------------
// Bell numbers

using BigInt = boost::multiprecision::cpp_int;
using BigFloat = boost::multiprecision::cpp_bin_float_50;

inline constexpr std::size_t kMaxBellGround = 500;

namespace detail {

class BellCache {
 public:
  static BellCache& instance() {
    static BellCache cache;
    return cache;
  }

  BigInt get(std::size_t n) {
    std::lock_guard lock(mu_);
    // Bell triangle: each row starts with the last entry of the previous
    // row, and B_r is the first entry of row r.
    while (bell_.size() <= n) {
      std::vector<BigInt> next;
      next.reserve(row_.size() + 1);
      next.push_back(row_.back());
      for (const auto& x : row_) next.push_back(next.back() + x);
      row_ = std::move(next);
      bell_.push_back(row_.front());
    }
    return bell_[n];
  }

 private:
  BellCache() : row_{1}, bell_{1} {}

  std::mutex mu_;
  std::vector<BigInt> row_;
  std::vector<BigInt> bell_;
};

}  // namespace detail

/// Exact Bell number B_n (number of partitions of an n-set).
inline BigInt bell_number(std::size_t n) {
  detail::require(n <= kMaxBellGround, ErrorCode::out_of_range,
                  "Bell numbers are supported up to n = 500");
  return detail::BellCache::instance().get(n);
}

/// B_{n-1} / B_n for 1 <= n <= 500.
inline double bell_ratio(std::size_t n) {
  detail::require(n >= 1 && n <= kMaxBellGround, ErrorCode::out_of_range,
                  "bell_ratio needs 1 <= n <= 500");
  BigFloat r = BigFloat(bell_number(n - 1)) / BigFloat(bell_number(n));
  return r.convert_to<double>();
}

// ---------------------------------------------------------------------------
// Rand-index likelihood

struct PairCounts {
  std::uint64_t both = 0;      // co-clustered by both partitions
  std::uint64_t neither = 0;   // co-clustered by neither
  std::uint64_t observed_only = 0;
  std::uint64_t produced_only = 0;

  std::uint64_t total() const {
    return both + neither + observed_only + produced_only;
  }
  std::uint64_t agreements() const { return both + neither; }
};

/// Counts over unordered pairs of distinct points.
inline PairCounts count_pairs(const Partition& observed,
                              const Partition& produced) {
  detail::require(observed.ground_size() == produced.ground_size(),
                  ErrorCode::dimension_mismatch, "ground sizes differ");
  const auto lo = observed.labels();
  const auto lp = produced.labels();
  PairCounts pc;
  const std::size_t n = lo.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool o = lo[i] == lo[j];
      const bool p = lp[i] == lp[j];
      if (o && p) ++pc.both;
      else if (!o && !p) ++pc.neither;
      else if (o) ++pc.observed_only;
      else ++pc.produced_only;
    }
  return pc;
}

inline std::uint64_t co_clustered_pairs(const Partition& P) {
  std::uint64_t k = 0;
  for (const auto& b : P.blocks()) k += b.size() * (b.size() - 1) / 2;
  return k;
}

/// Sum over every partition P' of the ground set of |both(P')| +
/// |neither(P')| relative to `produced`, in closed form:
/// k * B_{n-1} + (m - k) * (B_n - B_{n-1}).
inline BigInt rand_normalizer(const Partition& produced) {
  const std::size_t n = produced.ground_size();
  detail::require(n >= 2, ErrorCode::invalid_argument,
                  "rand likelihood needs at least two points");
  const std::uint64_t m = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t k = co_clustered_pairs(produced);
  const BigInt bn = bell_number(n);
  const BigInt bn1 = bell_number(n - 1);
  return BigInt(k) * bn1 + BigInt(m - k) * (bn - bn1);
}

/// B_n times the Rand likelihood. The B_n factor depends only on n, so this
/// is the quantity to use when comparing likelihoods at a fixed ground size;
/// it stays representable where the normalized value underflows.
inline double rand_likelihood_scaled(const Partition& observed,
                                     const Partition& produced) {
  const std::size_t n = produced.ground_size();
  detail::require(n >= 2, ErrorCode::invalid_argument,
                  "rand likelihood needs at least two points");
  const auto pc = count_pairs(observed, produced);
  const double r = bell_ratio(n);
  const double m = static_cast<double>(pc.total());
  const double k = static_cast<double>(co_clustered_pairs(produced));
  return static_cast<double>(pc.agreements()) / (k * r + (m - k) * (1.0 - r));
}

/// Probability of `observed` under the Rand-index pmf centred on
/// `produced`. Underflows to 0 for large ground sizes; prefer
/// rand_likelihood_scaled for reweighting.
inline double rand_likelihood(const Partition& observed,
                              const Partition& produced) {
  const auto pc = count_pairs(observed, produced);
  detail::require(produced.ground_size() >= 2, ErrorCode::invalid_argument,
                  "rand likelihood needs at least two points");
  BigFloat v = BigFloat(pc.agreements()) / BigFloat(rand_normalizer(produced));
  return v.convert_to<double>();
}

/// Point-mass likelihood: 1 if the partitions have the same blocks.
inline double exact_match_likelihood(const Partition& observed,
                                     const Partition& produced) {
  detail::require(observed.ground_size() == produced.ground_size(),
                  ErrorCode::dimension_mismatch, "ground sizes differ");
  return observed.same_blocks(produced) ? 1.0 : 0.0;
}

/// Adjusted Rand score from the pair confusion counts (same conventions as
/// scikit-learn, including 1.0 when both partitions are trivial alike).
inline double adjusted_rand_score(const Partition& P, const Partition& Q) {
  const auto pc = count_pairs(P, Q);
  const double tp = static_cast<double>(pc.both);
  const double tn = static_cast<double>(pc.neither);
  const double fn = static_cast<double>(pc.observed_only);
  const double fp = static_cast<double>(pc.produced_only);
  if (fn == 0.0 && fp == 0.0) return 1.0;
  return 2.0 * (tp * tn - fn * fp) /
         ((tp + fn) * (fn + tn) + (tp + fp) * (fp + tn));
}

}  // namespace flatclust
