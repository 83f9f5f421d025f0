#pragma once

// Binary integer programs (n, m, c, A, B, u): maximize c.v over v in {0,1}^m
// subject to Av + Bv <= u. Morphisms between programs, and two exact
// solvers that agree bit for bit (enumeration and branch-and-bound).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "flatclust/error.hpp"
#include "flatclust/matrix.hpp"

namespace flatclust {

inline constexpr double kBipTolerance = 1e-9;

struct BinaryIntegerProgram {
  std::size_t n = 0;  // rows
  std::size_t m = 0;  // variables
  std::vector<double> c;
  RealMatrix A;
  BoolMatrix B;
  std::vector<double> u;

  void validate() const {
    using detail::require;
    require(c.size() == m && u.size() == n, ErrorCode::dimension_mismatch,
            "program vectors do not match (n, m)");
    require(A.rows() == n && A.cols() == m && B.rows() == n && B.cols() == m,
            ErrorCode::dimension_mismatch, "program matrices are not n x m");
    auto finite = [](double x) { return std::isfinite(x); };
    require(std::all_of(c.begin(), c.end(), finite) &&
                std::all_of(u.begin(), u.end(), finite) &&
                std::all_of(A.data().begin(), A.data().end(), finite),
            ErrorCode::non_finite, "program has a non-finite entry");
    require(std::all_of(B.data().begin(), B.data().end(),
                        [](std::uint8_t b) { return b <= 1; }),
            ErrorCode::invalid_argument, "B must be {0,1}-valued");
  }

  /// A + B as reals.
  RealMatrix combined() const {
    RealMatrix M = A;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) M(i, j) += B(i, j);
    return M;
  }

  bool operator==(const BinaryIntegerProgram&) const = default;
};

using BinaryVector = std::vector<std::uint8_t>;

struct BipSolution {
  BinaryVector v;
  double objective = 0.0;
};

/// (A + B) v <= u within kBipTolerance, rows summed in column order.
inline bool check_feasible(const BinaryIntegerProgram& prog,
                           std::span<const std::uint8_t> v) {
  detail::require(v.size() == prog.m, ErrorCode::dimension_mismatch,
                  "vector length differs from variable count");
  for (std::size_t i = 0; i < prog.n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < prog.m; ++j)
      if (v[j]) s += prog.A(i, j) + prog.B(i, j);
    if (s > prog.u[i] + kBipTolerance) return false;
  }
  return true;
}

/// c.v summed in column order. Both solvers score candidates with this so
/// ties are decided on identical floating-point values.
inline double objective_value(const BinaryIntegerProgram& prog,
                              std::span<const std::uint8_t> v) {
  double s = 0.0;
  for (std::size_t j = 0; j < prog.m; ++j)
    if (v[j]) s += prog.c[j];
  return s;
}

namespace detail {

// Higher objective wins; equal objectives go to the lexicographically
// smaller vector.
inline bool better(double obj, const BinaryVector& v, bool have_best,
                   double best_obj, const BinaryVector& best_v) {
  if (!have_best) return true;
  if (obj != best_obj) return obj > best_obj;
  return v < best_v;
}

}  // namespace detail

inline constexpr std::size_t kMaxBruteForceVars = 25;

/// Enumerates all 2^m vectors.
inline BipSolution solve_bruteforce(const BinaryIntegerProgram& prog) {
  prog.validate();
  detail::require(prog.m <= kMaxBruteForceVars, ErrorCode::too_large,
                  "brute force is limited to 25 variables");
  BipSolution best;
  bool found = false;
  BinaryVector v(prog.m, 0);
  const std::uint64_t total = std::uint64_t{1} << prog.m;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    // Bit j of the mask is v[m-1-j] so masks run in lexicographic order.
    for (std::size_t j = 0; j < prog.m; ++j)
      v[j] = static_cast<std::uint8_t>((mask >> (prog.m - 1 - j)) & 1U);
    if (!check_feasible(prog, v)) continue;
    const double obj = objective_value(prog, v);
    if (detail::better(obj, v, found, best.objective, best.v)) {
      best.v = v;
      best.objective = obj;
      found = true;
    }
  }
  detail::require(found, ErrorCode::infeasible,
                  "program has no feasible binary vector");
  return best;
}

namespace detail {

class BranchAndBound {
 public:
  explicit BranchAndBound(const BinaryIntegerProgram& prog)
      : prog_(prog), M_(prog.combined()), n_(prog.n), m_(prog.m) {
    order_.resize(m_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) {
                       return prog.c[a] > prog.c[b];
                     });

    // neg_suffix_[p * n + i]: sum of negative coefficients of row i over the
    // variables at branching positions >= p, i.e. the most a row can still
    // shrink.
    neg_suffix_.assign((m_ + 1) * n_, 0.0);
    for (std::size_t p = m_; p-- > 0;)
      for (std::size_t i = 0; i < n_; ++i)
        neg_suffix_[p * n_ + i] =
            neg_suffix_[(p + 1) * n_ + i] + std::min(0.0, M_(i, order_[p]));

    // Static pairwise conflicts: j and k can never both be 1 if some row
    // overflows even with every other negative coefficient switched on.
    words_ = (m_ + 63) / 64;
    conflict_.assign(m_ * words_, 0);
    for (std::size_t j = 0; j < m_; ++j)
      for (std::size_t k = j + 1; k < m_; ++k)
        if (pair_conflicts(j, k)) {
          conflict_[j * words_ + k / 64] |= std::uint64_t{1} << (k % 64);
          conflict_[k * words_ + j / 64] |= std::uint64_t{1} << (j % 64);
        }

    rows_.assign(n_, 0.0);
    v_.assign(m_, 0);
  }

  BipSolution run() {
    search(0, 0.0);
    detail::require(found_, ErrorCode::infeasible,
                    "program has no feasible binary vector");
    return best_;
  }

 private:
  static constexpr double kPruneSlack = 1e-9;

  bool pair_conflicts(std::size_t j, std::size_t k) const {
    for (std::size_t i = 0; i < n_; ++i) {
      const double rest = neg_suffix_[i] - std::min(0.0, M_(i, j)) -
                          std::min(0.0, M_(i, k));
      if (M_(i, j) + M_(i, k) + rest > prog_.u[i] + 2 * kBipTolerance)
        return true;
    }
    return false;
  }

  bool conflicts(std::size_t j, std::size_t k) const {
    return (conflict_[j * words_ + k / 64] >> (k % 64)) & 1U;
  }

  // Whether variable j (at position >= pos) can still be switched on.
  bool addable(std::size_t pos, std::size_t j) const {
    const double* ns = &neg_suffix_[pos * n_];
    for (std::size_t i = 0; i < n_; ++i) {
      const double mij = M_(i, j);
      if (rows_[i] + mij + ns[i] - std::min(0.0, mij) >
          prog_.u[i] + 2 * kBipTolerance)
        return false;
    }
    return true;
  }

  bool rows_recoverable(std::size_t pos) const {
    const double* ns = &neg_suffix_[pos * n_];
    for (std::size_t i = 0; i < n_; ++i)
      if (rows_[i] + ns[i] > prog_.u[i] + 2 * kBipTolerance) return false;
    return true;
  }

  // Upper bound on the objective still obtainable from positions >= pos:
  // addable positive-weight variables are greedily covered by cliques of the
  // static conflict graph, and each clique contributes its largest weight.
  double remaining_bound(std::size_t pos) {
    double bound = 0.0;
    leaders_.clear();
    for (std::size_t p = pos; p < m_; ++p) {
      const std::size_t j = order_[p];
      if (prog_.c[j] <= 0.0) break;  // order_ is by descending c
      if (!addable(pos, j)) continue;
      bool placed = false;
      for (auto& clique : leaders_) {
        bool all = true;
        for (std::size_t member : clique)
          if (!conflicts(member, j)) {
            all = false;
            break;
          }
        if (all) {
          clique.push_back(j);
          placed = true;
          break;
        }
      }
      if (!placed) {
        leaders_.push_back({j});
        bound += prog_.c[j];
      }
    }
    return bound;
  }

  void search(std::size_t pos, double partial) {
    if (!rows_recoverable(pos)) return;
    if (pos == m_) {
      if (!check_feasible(prog_, v_)) return;
      const double obj = objective_value(prog_, v_);
      if (better(obj, v_, found_, best_.objective, best_.v)) {
        best_.v = v_;
        best_.objective = obj;
        found_ = true;
      }
      return;
    }
    if (found_) {
      const double slack = kPruneSlack * (1.0 + std::abs(best_.objective));
      if (partial + remaining_bound(pos) < best_.objective - slack) return;
    }
    const std::size_t j = order_[pos];
    if (addable(pos, j)) {
      v_[j] = 1;
      for (std::size_t i = 0; i < n_; ++i) rows_[i] += M_(i, j);
      search(pos + 1, partial + prog_.c[j]);
      for (std::size_t i = 0; i < n_; ++i) rows_[i] -= M_(i, j);
      v_[j] = 0;
    }
    search(pos + 1, partial);
  }

  const BinaryIntegerProgram& prog_;
  RealMatrix M_;
  std::size_t n_, m_;
  std::vector<std::size_t> order_;
  std::vector<double> neg_suffix_;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> conflict_;
  std::vector<double> rows_;
  BinaryVector v_;
  BipSolution best_;
  bool found_ = false;
  std::vector<std::vector<std::size_t>> leaders_;
};

}  // namespace detail

/// Exact solver. Returns the same vector and objective as solve_bruteforce:
/// the maximum of c.v, lexicographically smallest among ties.
inline BipSolution solve_exact(const BinaryIntegerProgram& prog) {
  prog.validate();
  return detail::BranchAndBound(prog).run();
}

// ---------------------------------------------------------------------------
// Morphisms

/// (P_c, P_u, P_A, P_A*, P_B, P_B*) from (n, m, ...) to (n', m', ...).
struct BipMorphism {
  RealMatrix P_c;       // m x m'
  RealMatrix P_u;       // n' x n
  RealMatrix P_A;       // n' x n
  RealMatrix P_A_star;  // m x m'
  BoolMatrix P_B;       // n' x n
  BoolMatrix P_B_star;  // m x m'

  static BipMorphism identity(const BinaryIntegerProgram& prog) {
    return {RealMatrix::identity(prog.m), RealMatrix::identity(prog.n),
            RealMatrix::identity(prog.n), RealMatrix::identity(prog.m),
            BoolMatrix::identity(prog.n), BoolMatrix::identity(prog.m)};
  }
};

namespace detail {

inline bool approx_equal(const std::vector<double>& a,
                         const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > kBipTolerance) return false;
  return true;
}

inline void require_shape(const RealMatrix& M, std::size_t r, std::size_t c,
                          const char* name) {
  require(M.rows() == r && M.cols() == c, ErrorCode::dimension_mismatch,
          std::string(name) + " has the wrong shape");
}

inline void require_shape(const BoolMatrix& M, std::size_t r, std::size_t c,
                          const char* name) {
  require(M.rows() == r && M.cols() == c, ErrorCode::dimension_mismatch,
          std::string(name) + " has the wrong shape");
}

}  // namespace detail

/// P_c c' = c, P_u u = u', P_A A P_A* = A' and, with boolean products,
/// P_B B P_B* = B'. Real equations hold within kBipTolerance.
inline bool verify_morphism(const BinaryIntegerProgram& src,
                            const BinaryIntegerProgram& dst,
                            const BipMorphism& phi) {
  src.validate();
  dst.validate();
  detail::require_shape(phi.P_c, src.m, dst.m, "P_c");
  detail::require_shape(phi.P_u, dst.n, src.n, "P_u");
  detail::require_shape(phi.P_A, dst.n, src.n, "P_A");
  detail::require_shape(phi.P_A_star, src.m, dst.m, "P_A*");
  detail::require_shape(phi.P_B, dst.n, src.n, "P_B");
  detail::require_shape(phi.P_B_star, src.m, dst.m, "P_B*");

  if (!detail::approx_equal(multiply(phi.P_c, dst.c), src.c)) return false;
  if (!detail::approx_equal(multiply(phi.P_u, src.u), dst.u)) return false;
  const RealMatrix a = multiply(multiply(phi.P_A, src.A), phi.P_A_star);
  if (!detail::approx_equal(a.data(), dst.A.data())) return false;
  const BoolMatrix b =
      logical_multiply(logical_multiply(phi.P_B, src.B), phi.P_B_star);
  return b == dst.B;
}

/// psi after phi, for phi: X -> Y and psi: Y -> Z. Source-side factors
/// (P_c and the star matrices) compose in the opposite order.
inline BipMorphism compose_morphisms(const BipMorphism& phi,
                                     const BipMorphism& psi) {
  detail::require(phi.P_c.cols() == psi.P_c.rows() &&
                      phi.P_u.rows() == psi.P_u.cols() &&
                      phi.P_A.rows() == psi.P_A.cols() &&
                      phi.P_A_star.cols() == psi.P_A_star.rows() &&
                      phi.P_B.rows() == psi.P_B.cols() &&
                      phi.P_B_star.cols() == psi.P_B_star.rows(),
                  ErrorCode::dimension_mismatch,
                  "morphisms are not composable");
  return {multiply(phi.P_c, psi.P_c),
          multiply(psi.P_u, phi.P_u),
          multiply(psi.P_A, phi.P_A),
          multiply(phi.P_A_star, psi.P_A_star),
          logical_multiply(psi.P_B, phi.P_B),
          logical_multiply(phi.P_B_star, psi.P_B_star)};
}

}  // namespace flatclust
