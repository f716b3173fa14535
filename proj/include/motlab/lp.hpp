#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "motlab/errors.hpp"
#include "motlab/measures.hpp"
#include "motlab/numeric.hpp"

namespace motlab {

enum class LpSense { minimize, maximize };
enum class LpStatus { optimal, infeasible, unbounded };

/// Equality-constrained LP in standard form: optimize c'x subject to
/// Ax = b, x >= 0.
struct StandardLp {
  LpSense sense = LpSense::minimize;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> matrix;  // row-major rows x cols
  std::vector<double> rhs;
  std::vector<double> objective;

  double& at(std::size_t r, std::size_t c) { return matrix[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return matrix[r * cols + c]; }
};

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  double value = 0;
  std::vector<double> primal;
  /// Dual multipliers per constraint row (original orientation and
  /// sense); populated only on optimal.
  std::vector<double> duals;
  long iterations = 0;
  /// Largest |A x - b| at the reported point; for infeasible status it
  /// holds the phase-1 objective (total infeasibility).
  double max_residual = 0;
};

/// Entering/leaving tolerance of the simplex kernel.
inline constexpr double kPivotTol = 1e-10;

namespace lp_detail {

class Simplex {
 public:
  explicit Simplex(const StandardLp& lp)
      : m_(lp.rows), n_(lp.cols), width_(lp.cols + lp.rows + 1) {
    if (lp.matrix.size() != lp.rows * lp.cols || lp.rhs.size() != lp.rows ||
        lp.objective.size() != lp.cols)
      throw DimensionMismatchError("inconsistent LP dimensions");
    if (!all_finite(lp.matrix) || !all_finite(lp.rhs) ||
        !all_finite(lp.objective))
      throw NonFiniteError("non-finite LP input");

    minimize_ = lp.sense == LpSense::minimize;
    bmax_ = 0;
    for (double b : lp.rhs) bmax_ = std::max(bmax_, std::abs(b));
    feas_tol_ = 1e-9 * (1.0 + bmax_);

    tableau_.assign(m_ * width_, 0.0);
    flipped_.assign(m_, false);
    basis_.resize(m_);
    is_basic_.assign(width_ - 1, false);
    double p1 = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      double sign = lp.rhs[i] < 0 ? -1.0 : 1.0;
      flipped_[i] = sign < 0;
      double* row = &tableau_[i * width_];
      for (std::size_t j = 0; j < n_; ++j) row[j] = sign * lp.at(i, j);
      row[n_ + i] = 1.0;
      row[width_ - 1] = sign * lp.rhs[i];
      basis_[i] = n_ + i;
      is_basic_[n_ + i] = true;
      p1 += row[width_ - 1];
    }

    // Objective rows carry reduced costs plus, in the last slot, the
    // negated current objective value.
    d1_.assign(width_, 0.0);
    d2_.assign(width_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      double col = 0;
      for (std::size_t i = 0; i < m_; ++i) col += tableau_[i * width_ + j];
      d1_[j] = -col;
      d2_[j] = minimize_ ? lp.objective[j] : -lp.objective[j];
    }
    d1_[width_ - 1] = -p1;
    max_iterations_ = 200 * static_cast<long>(m_ + n_);
  }

  LpSolution run(const StandardLp& lp) {
    LpSolution out;
    // Phase 1: minimize the artificial mass.
    if (!optimize(d1_, true)) throw Error("phase-1 simplex unbounded");
    double infeas = -d1_[width_ - 1];
    if (infeas > feas_tol_) {
      out.status = LpStatus::infeasible;
      out.iterations = iterations_;
      out.max_residual = infeas;
      return out;
    }
    drive_out_artificials();

    // Phase 2 on the true objective.
    phase2_ = true;
    if (!optimize(d2_, false)) {
      out.status = LpStatus::unbounded;
      out.iterations = iterations_;
      out.value = minimize_ ? -std::numeric_limits<double>::infinity()
                            : std::numeric_limits<double>::infinity();
      return out;
    }

    out.status = LpStatus::optimal;
    out.iterations = iterations_;
    out.primal.assign(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) out.primal[basis_[i]] = tableau_[i * width_ + width_ - 1];
    double vmin = -d2_[width_ - 1];
    out.value = minimize_ ? vmin : -vmin;
    out.duals.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      double y = -d2_[n_ + i];
      if (flipped_[i]) y = -y;
      out.duals[i] = minimize_ ? y : -y;
    }
    out.max_residual = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      double ax = 0;
      for (std::size_t j = 0; j < n_; ++j) ax += lp.at(i, j) * out.primal[j];
      out.max_residual = std::max(out.max_residual, std::abs(ax - lp.rhs[i]));
    }
    return out;
  }

 private:
  // Returns false on unbounded.
  bool optimize(std::vector<double>& d, bool phase1) {
    for (;;) {
      std::size_t enter = width_;
      if (bland_) {
        for (std::size_t j = 0; j < n_; ++j) {
          if (!is_basic_[j] && d[j] < -kPivotTol) {
            enter = j;
            break;
          }
        }
      } else {
        double best = -kPivotTol;
        for (std::size_t j = 0; j < n_; ++j) {
          if (!is_basic_[j] && d[j] < best) {
            best = d[j];
            enter = j;
          }
        }
      }
      if (enter == width_) return true;  // optimal for this phase

      std::size_t leave = pick_leaving_row(enter, phase1);
      if (leave == m_) return false;  // unbounded column
      pivot(leave, enter, phase1);
    }
  }

  std::size_t pick_leaving_row(std::size_t enter, bool phase1) {
    std::size_t best = m_;
    double best_ratio = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      double a = tableau_[i * width_ + enter];
      double rhs = tableau_[i * width_ + width_ - 1];
      double ratio;
      if (a > kPivotTol) {
        ratio = rhs / a;
      } else if (!phase1 && a < -1e-7 && basis_[i] >= n_ &&
                 rhs <= 1e-11 * (1.0 + bmax_)) {
        // A zero-level basic artificial (structurally redundant row for
        // the current column set) must not grow; force it out through a
        // degenerate pivot on the negative entry.
        tableau_[i * width_ + width_ - 1] = 0;
        ratio = 0;
      } else {
        continue;
      }
      if (best == m_ || ratio < best_ratio ||
          (ratio == best_ratio && basis_[i] < basis_[best])) {
        best = i;
        best_ratio = ratio;
      }
    }
    return best;
  }

  void pivot(std::size_t r, std::size_t s, bool phase1) {
    if (++iterations_ > max_iterations_)
      throw IterationLimitError("simplex pivot cap exceeded (" +
                                std::to_string(max_iterations_) + ")");
    double* pr = &tableau_[r * width_];
    double ratio = pr[width_ - 1] / pr[s];
    if (ratio <= 1e-12) {
      if (++degenerate_streak_ > 50) bland_ = true;
    } else {
      degenerate_streak_ = 0;
    }

    double inv = 1.0 / pr[s];
    for (std::size_t j = 0; j < width_; ++j) pr[j] *= inv;
    pr[s] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &tableau_[i * width_];
      double f = row[s];
      if (f == 0) continue;
      for (std::size_t j = 0; j < width_; ++j) row[j] -= f * pr[j];
      row[s] = 0.0;
    }
    eliminate(d2_, pr, s);
    if (phase1) eliminate(d1_, pr, s);

    is_basic_[basis_[r]] = false;
    basis_[r] = s;
    is_basic_[s] = true;
  }

  void eliminate(std::vector<double>& d, const double* pr, std::size_t s) {
    double f = d[s];
    if (f == 0) return;
    for (std::size_t j = 0; j < width_; ++j) d[j] -= f * pr[j];
    d[s] = 0.0;
  }

  void drive_out_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      const double* row = &tableau_[i * width_];
      std::size_t s = width_;
      for (std::size_t j = 0; j < n_; ++j) {
        if (!is_basic_[j] && std::abs(row[j]) > 1e-7) {
          s = j;
          break;
        }
      }
      // No usable column: the row is redundant for the current columns
      // and its artificial stays basic at level ~0.
      if (s < width_) pivot(i, s, true);
    }
  }

  std::size_t m_, n_, width_;
  bool minimize_ = true;
  bool phase2_ = false;
  bool bland_ = false;
  int degenerate_streak_ = 0;
  long iterations_ = 0;
  long max_iterations_ = 0;
  double bmax_ = 0, feas_tol_ = 0;
  std::vector<double> tableau_, d1_, d2_;
  std::vector<std::size_t> basis_;
  std::vector<bool> is_basic_;
  std::vector<bool> flipped_;
};

}  // namespace lp_detail

/// Two-phase dense primal simplex. Deterministic pivoting: most
/// negative reduced cost with lowest-index tie-break, switching to
/// Bland's rule for the rest of the solve after more than 50
/// consecutive degenerate pivots.
inline LpSolution solve_lp(const StandardLp& lp) {
  lp_detail::Simplex s(lp);
  return s.run(lp);
}

/// Optimal transport between discrete marginals with a dense cost
/// matrix; one column-marginal constraint is dropped as redundant.
struct OtResult {
  double value = 0;
  DenseMatrix plan;
  long iterations = 0;
};

inline OtResult solve_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const DenseMatrix& cost, LpSense sense) {
  const std::size_t n = mu.size(), m = nu.size();
  if (cost.rows() != n || cost.cols() != m)
    throw DimensionMismatchError("cost matrix does not match supports");
  if (!all_finite(cost.data())) throw NonFiniteError("non-finite cost entry");

  StandardLp lp;
  lp.sense = sense;
  lp.rows = n + m - 1;
  lp.cols = n * m;
  lp.matrix.assign(lp.rows * lp.cols, 0.0);
  lp.rhs.resize(lp.rows);
  lp.objective = cost.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) lp.at(i, i * m + j) = 1.0;
    lp.rhs[i] = mu.weights()[i];
  }
  for (std::size_t j = 0; j + 1 < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) lp.at(n + j, i * m + j) = 1.0;
    lp.rhs[n + j] = nu.weights()[j];
  }

  LpSolution sol = solve_lp(lp);
  // The product coupling is always feasible.
  if (sol.status != LpStatus::optimal)
    throw Error("transport LP did not solve to optimality");

  OtResult out;
  out.value = sol.value;
  out.iterations = sol.iterations;
  out.plan = DenseMatrix(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.plan(i, j) = sol.primal[i * m + j];
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(out.plan.row_sum(i) - mu.weights()[i]) > 1e-8)
      throw Error("transport plan violates a row marginal");
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (std::abs(out.plan.col_sum(j) - nu.weights()[j]) > 1e-8)
      throw Error("transport plan violates a column marginal");
  }
  return out;
}

}  // namespace motlab
