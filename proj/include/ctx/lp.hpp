#pragma once

// Exact linear feasibility: find x >= 0 with A x = b over the rationals, or
// a Farkas separator y with y^T A <= 0 and y^T b > 0.
//
// Phase-1 simplex on a dense tableau with one artificial column per row.
// Pricing is Dantzig's most-negative rule until a run of degenerate pivots
// is seen; from then on Bland's smallest-index rule is used for the rest of
// the solve, which rules out cycling. Ties in the ratio test always go to the
// smallest basic index.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ctx/error.hpp"
#include "ctx/rational.hpp"

namespace ctx::lp {

struct Term {
  std::size_t var;
  Rational coeff;
};

struct Row {
  std::string label;
  std::vector<Term> terms;
  Rational rhs;
};

/// Equality rows over `variables` nonnegative unknowns.
struct LinearSystem {
  std::size_t variables = 0;
  std::vector<Row> rows;
};

struct LpResult {
  bool feasible = false;
  /// A basic feasible point when feasible.
  std::vector<Rational> point;
  /// One multiplier per row when infeasible.
  std::vector<Rational> separator;
  std::size_t pivots = 0;
};

namespace detail {

class Tableau {
 public:
  explicit Tableau(const LinearSystem& sys)
      : m_(sys.rows.size()), n_(sys.variables), cols_(n_ + m_), flip_(m_, false), basis_(m_),
        t_(m_, std::vector<Rational>(cols_)), rhs_(m_), cost_(cols_) {
    for (std::size_t i = 0; i < m_; ++i) {
      const Row& row = sys.rows[i];
      flip_[i] = row.rhs.sign() < 0;
      for (const auto& [j, a] : row.terms) {
        if (j >= n_) throw Error(ErrorKind::InvalidArgument, "row '" + row.label + "' references unknown variable");
        t_[i][j] += flip_[i] ? -a : a;
      }
      t_[i][n_ + i] = Rational(1);
      rhs_[i] = flip_[i] ? -row.rhs : row.rhs;
      basis_[i] = n_ + i;
    }
    // Minimize the sum of artificials: reduced cost of column j is -sum_i t_ij.
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (!t_[i][j].is_zero()) cost_[j] -= t_[i][j];
      }
      objective_ += rhs_[i];
    }
  }

  LpResult solve() {
    LpResult result;
    for (;;) {
      const std::size_t entering = bland_ ? first_negative() : most_negative();
      if (entering == cols_) break;

      std::size_t leave = m_;
      Rational best;
      for (std::size_t i = 0; i < m_; ++i) {
        if (t_[i][entering].sign() <= 0) continue;
        Rational ratio = rhs_[i] / t_[i][entering];
        if (leave == m_ || ratio < best || (ratio == best && basis_[i] < basis_[leave])) {
          leave = i;
          best = std::move(ratio);
        }
      }
      // Phase 1 is bounded below by zero, so some row always qualifies.
      if (best.is_zero()) {
        if (++degenerate_run_ >= kDegenerateLimit) bland_ = true;
      } else {
        degenerate_run_ = 0;
      }
      pivot(leave, entering);
      ++result.pivots;
    }

    if (objective_.is_zero()) {
      result.feasible = true;
      result.point.assign(n_, Rational());
      for (std::size_t i = 0; i < m_; ++i) {
        if (basis_[i] < n_) result.point[basis_[i]] = rhs_[i];
      }
    } else {
      result.separator.resize(m_);
      for (std::size_t i = 0; i < m_; ++i) {
        Rational y = Rational(1) - cost_[n_ + i];
        result.separator[i] = flip_[i] ? -y : y;
      }
    }
    return result;
  }

 private:
  static constexpr std::size_t kDegenerateLimit = 50;

  // Artificials never re-enter once they leave, so only original columns are priced.
  std::size_t first_negative() const {
    for (std::size_t j = 0; j < n_; ++j) {
      if (cost_[j].sign() < 0) return j;
    }
    return cols_;
  }

  std::size_t most_negative() const {
    std::size_t best = cols_;
    for (std::size_t j = 0; j < n_; ++j) {
      if (cost_[j].sign() < 0 && (best == cols_ || cost_[j] < cost_[best])) best = j;
    }
    return best;
  }

  void pivot(std::size_t r, std::size_t q) {
    auto& prow = t_[r];
    const Rational inv = prow[q].reciprocal();
    nz_.clear();
    for (std::size_t j = 0; j < cols_; ++j) {
      if (!prow[j].is_zero()) {
        prow[j] *= inv;
        nz_.push_back(j);
      }
    }
    rhs_[r] *= inv;

    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r || t_[i][q].is_zero()) continue;
      const Rational f = t_[i][q];
      auto& row = t_[i];
      for (const std::size_t j : nz_) row[j] -= f * prow[j];
      if (!rhs_[r].is_zero()) rhs_[i] -= f * rhs_[r];
    }
    if (!cost_[q].is_zero()) {
      const Rational f = cost_[q];
      for (const std::size_t j : nz_) cost_[j] -= f * prow[j];
      objective_ += f * rhs_[r];
    }
    basis_[r] = q;
  }

  std::size_t m_;
  std::size_t n_;
  std::size_t cols_;
  std::vector<bool> flip_;
  std::vector<std::size_t> basis_;
  std::vector<std::vector<Rational>> t_;
  std::vector<Rational> rhs_;
  std::vector<Rational> cost_;
  Rational objective_;
  std::vector<std::size_t> nz_;
  bool bland_ = false;
  std::size_t degenerate_run_ = 0;
};

}  // namespace detail

inline LpResult lp_feasibility(const LinearSystem& sys) {
  if (sys.rows.empty()) {
    LpResult r;
    r.feasible = true;
    r.point.assign(sys.variables, Rational());
    return r;
  }
  return detail::Tableau(sys).solve();
}

// ---------------------------------------------------------------------------
// Independent verifiers. These only evaluate the posed rows; they share no
// code with the tableau.

/// x >= 0 and every row holds with exact equality.
inline bool verify_point(const LinearSystem& sys, const std::vector<Rational>& x) {
  if (x.size() != sys.variables) return false;
  for (const auto& v : x) {
    if (v.sign() < 0) return false;
  }
  for (const auto& row : sys.rows) {
    Rational lhs;
    for (const auto& [j, a] : row.terms) lhs += a * x[j];
    if (lhs != row.rhs) return false;
  }
  return true;
}

/// The combination sum_i y_i row_i has every coefficient <= 0 and a strictly
/// positive right-hand side, so no x >= 0 can satisfy all rows.
inline bool verify_separator(const LinearSystem& sys, const std::vector<Rational>& y) {
  if (y.size() != sys.rows.size()) return false;
  std::vector<Rational> combined(sys.variables);
  Rational rhs;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i].is_zero()) continue;
    for (const auto& [j, a] : sys.rows[i].terms) combined[j] += y[i] * a;
    rhs += y[i] * sys.rows[i].rhs;
  }
  if (rhs.sign() <= 0) return false;
  for (const auto& c : combined) {
    if (c.sign() > 0) return false;
  }
  return true;
}

/// Right-hand side of the separator combination (positive when it certifies).
inline Rational separator_rhs(const LinearSystem& sys, const std::vector<Rational>& y) {
  Rational rhs;
  for (std::size_t i = 0; i < y.size() && i < sys.rows.size(); ++i) rhs += y[i] * sys.rows[i].rhs;
  return rhs;
}

}  // namespace ctx::lp
