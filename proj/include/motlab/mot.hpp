#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "motlab/costexpr.hpp"
#include "motlab/errors.hpp"
#include "motlab/lp.hpp"
#include "motlab/measures.hpp"
#include "motlab/numeric.hpp"

namespace motlab {

/// Finitely supported probability measure on the plane, stored as a
/// mass matrix over increasing atom grids. Canonical form drops
/// zero-mass rows/columns and renormalizes total mass to 1.
class Coupling {
 public:
  Coupling(std::vector<double> x_atoms, std::vector<double> y_atoms,
           DenseMatrix mass) {
    if (mass.rows() != x_atoms.size() || mass.cols() != y_atoms.size())
      throw DimensionMismatchError("mass matrix does not match atom lists");
    if (!all_finite(x_atoms) || !all_finite(y_atoms) ||
        !all_finite(mass.data()))
      throw NonFiniteError("non-finite coupling input");
    for (double& v : mass.data()) {
      if (v < 0) {
        if (v < -1e-9) throw Error("negative coupling mass");
        v = 0;
      }
    }

    sort_axis(x_atoms, mass, true);
    sort_axis(y_atoms, mass, false);
    drop_zero_rows_cols(x_atoms, y_atoms, mass);
    merge_axis(x_atoms, mass, true);
    merge_axis(y_atoms, mass, false);

    double total = mass.total();
    if (total <= 0) throw EmptySupportError("coupling carries no mass");
    for (double& v : mass.data()) v /= total;

    x_atoms_ = std::move(x_atoms);
    y_atoms_ = std::move(y_atoms);
    mass_ = std::move(mass);
  }

  /// Coupling concentrated on the diagonal x2 = x1.
  static Coupling identity(const DiscreteMeasure& mu) {
    DenseMatrix m(mu.size(), mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) m(i, i) = mu.weights()[i];
    return Coupling(mu.atoms(), mu.atoms(), std::move(m));
  }

  /// Independent product of the two marginals.
  static Coupling product(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    DenseMatrix m(mu.size(), nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
      for (std::size_t j = 0; j < nu.size(); ++j)
        m(i, j) = mu.weights()[i] * nu.weights()[j];
    return Coupling(mu.atoms(), nu.atoms(), std::move(m));
  }

  const std::vector<double>& x_atoms() const { return x_atoms_; }
  const std::vector<double>& y_atoms() const { return y_atoms_; }
  const DenseMatrix& mass() const { return mass_; }

  DiscreteMeasure first_marginal() const {
    std::vector<double> w(x_atoms_.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = mass_.row_sum(i);
    return DiscreteMeasure(x_atoms_, std::move(w));
  }

  DiscreteMeasure second_marginal() const {
    std::vector<double> w(y_atoms_.size());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = mass_.col_sum(j);
    return DiscreteMeasure(y_atoms_, std::move(w));
  }

  bool operator==(const Coupling&) const = default;

 private:
  static void sort_axis(std::vector<double>& atoms, DenseMatrix& mass,
                        bool rows) {
    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
    bool sorted = true;
    for (std::size_t i = 0; i < order.size(); ++i)
      if (order[i] != i) sorted = false;
    if (sorted) return;
    std::vector<double> na(atoms.size());
    DenseMatrix nm(mass.rows(), mass.cols());
    for (std::size_t k = 0; k < order.size(); ++k) {
      na[k] = atoms[order[k]];
      if (rows) {
        for (std::size_t j = 0; j < mass.cols(); ++j)
          nm(k, j) = mass(order[k], j);
      } else {
        for (std::size_t i = 0; i < mass.rows(); ++i)
          nm(i, k) = mass(i, order[k]);
      }
    }
    atoms = std::move(na);
    mass = std::move(nm);
  }

  static void merge_axis(std::vector<double>& atoms, DenseMatrix& mass,
                         bool rows) {
    std::size_t n = atoms.size();
    std::vector<std::size_t> cluster(n);
    std::vector<double> cw, cwx, cpos;
    std::vector<bool> merged;
    auto line_mass = [&](std::size_t k) {
      return rows ? mass.row_sum(k) : mass.col_sum(k);
    };
    for (std::size_t k = 0; k < n; ++k) {
      double x = atoms[k], w = line_mass(k);
      if (!cw.empty()) {
        double centroid = merged.back() ? cwx.back() / cw.back() : cpos.back();
        if (x - centroid < kAtomMergeTol) {
          cw.back() += w;
          cwx.back() += w * x;
          merged.back() = true;
          cluster[k] = cw.size() - 1;
          continue;
        }
      }
      cw.push_back(w);
      cwx.push_back(w * x);
      cpos.push_back(x);
      merged.push_back(false);
      cluster[k] = cw.size() - 1;
    }
    if (cw.size() == n) return;
    std::vector<double> na(cw.size());
    for (std::size_t c = 0; c < cw.size(); ++c)
      na[c] = merged[c] && cw[c] > 0 ? cwx[c] / cw[c] : cpos[c];
    DenseMatrix nm(rows ? cw.size() : mass.rows(),
                   rows ? mass.cols() : cw.size());
    for (std::size_t i = 0; i < mass.rows(); ++i)
      for (std::size_t j = 0; j < mass.cols(); ++j) {
        if (rows)
          nm(cluster[i], j) += mass(i, j);
        else
          nm(i, cluster[j]) += mass(i, j);
      }
    atoms = std::move(na);
    mass = std::move(nm);
  }

  static void drop_zero_rows_cols(std::vector<double>& xs,
                                  std::vector<double>& ys, DenseMatrix& mass) {
    std::vector<std::size_t> ri, ci;
    for (std::size_t i = 0; i < mass.rows(); ++i)
      if (mass.row_sum(i) > 0) ri.push_back(i);
    for (std::size_t j = 0; j < mass.cols(); ++j)
      if (mass.col_sum(j) > 0) ci.push_back(j);
    if (ri.empty() || ci.empty()) throw EmptySupportError("coupling carries no mass");
    if (ri.size() == mass.rows() && ci.size() == mass.cols()) return;
    std::vector<double> nx(ri.size()), ny(ci.size());
    DenseMatrix nm(ri.size(), ci.size());
    for (std::size_t i = 0; i < ri.size(); ++i) nx[i] = xs[ri[i]];
    for (std::size_t j = 0; j < ci.size(); ++j) ny[j] = ys[ci[j]];
    for (std::size_t i = 0; i < ri.size(); ++i)
      for (std::size_t j = 0; j < ci.size(); ++j) nm(i, j) = mass(ri[i], ci[j]);
    xs = std::move(nx);
    ys = std::move(ny);
    mass = std::move(nm);
  }

  std::vector<double> x_atoms_, y_atoms_;
  DenseMatrix mass_;
};

/// Largest barycenter defect max_i |sum_j q_ij (y_j - x_i)|; zero (up
/// to tolerance) exactly when the coupling is a martingale coupling of
/// its own marginals.
inline double martingale_residual(const Coupling& q) {
  double worst = 0;
  for (std::size_t i = 0; i < q.x_atoms().size(); ++i) {
    double bar = 0;
    for (std::size_t j = 0; j < q.y_atoms().size(); ++j)
      bar += q.mass()(i, j) * (q.y_atoms()[j] - q.x_atoms()[i]);
    worst = std::max(worst, std::abs(bar));
  }
  return worst;
}

inline double coupling_scale(const Coupling& q) {
  double s = 0;
  for (double x : q.x_atoms()) s = std::max(s, std::abs(x));
  for (double y : q.y_atoms()) s = std::max(s, std::abs(y));
  return s;
}

/// Residual tolerance used by martingale membership checks.
inline double martingale_tol(const Coupling& q) {
  return 1e-8 * (1.0 + coupling_scale(q));
}

struct MotProblem {
  MeasurePair pair;
  PayoffExpr payoff;
  LpSense sense = LpSense::maximize;
};

struct SolveReport {
  double value = 0;
  Coupling optimizer;
  double martingale_residual = 0;
  long lp_iterations = 0;
};

namespace mot_detail {

inline DenseMatrix eval_on_grid(const PayoffExpr& payoff,
                                const std::vector<double>& xs,
                                const std::vector<double>& ys) {
  DenseMatrix m(xs.size(), ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j)
      m(i, j) = payoff.eval(xs[i], ys[j]);
  return m;
}

/// Optional extra inequality on the coupling: sum coeffs.q >= bound
/// (lower = true) or <= bound, written with a slack column.
struct FaceConstraint {
  DenseMatrix coeffs;
  double bound = 0;
  bool lower = true;
};

/// LP over couplings on the product grid of `pair`: row sums, column
/// sums (last one dropped as redundant) and per-atom barycenter
/// constraints. Variable (i,j) sits at index i*ny + j.
inline StandardLp build_mot_lp(const MeasurePair& pair,
                               const DenseMatrix& objective, LpSense sense,
                               const FaceConstraint* face) {
  const auto& xs = pair.mu1.atoms();
  const auto& ys = pair.mu2.atoms();
  const std::size_t nx = xs.size(), ny = ys.size();
  const std::size_t ncells = nx * ny;

  StandardLp lp;
  lp.sense = sense;
  lp.rows = nx + (ny - 1) + nx + (face ? 1 : 0);
  lp.cols = ncells + (face ? 1 : 0);
  lp.matrix.assign(lp.rows * lp.cols, 0.0);
  lp.rhs.assign(lp.rows, 0.0);
  lp.objective.assign(lp.cols, 0.0);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      lp.objective[i * ny + j] = objective(i, j);

  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) lp.at(i, i * ny + j) = 1.0;
    lp.rhs[i] = pair.mu1.weights()[i];
  }
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) lp.at(nx + j, i * ny + j) = 1.0;
    lp.rhs[nx + j] = pair.mu2.weights()[j];
  }
  for (std::size_t i = 0; i < nx; ++i) {
    std::size_t r = nx + ny - 1 + i;
    for (std::size_t j = 0; j < ny; ++j)
      lp.at(r, i * ny + j) = ys[j] - xs[i];
    lp.rhs[r] = 0.0;
  }
  if (face) {
    std::size_t r = lp.rows - 1;
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j)
        lp.at(r, i * ny + j) = face->coeffs(i, j);
    lp.at(r, ncells) = face->lower ? -1.0 : 1.0;
    lp.rhs[r] = face->bound;
  }
  return lp;
}

inline Coupling coupling_from_primal(const MeasurePair& pair,
                                     const std::vector<double>& primal) {
  const std::size_t nx = pair.mu1.size(), ny = pair.mu2.size();
  DenseMatrix m(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) m(i, j) = primal[i * ny + j];
  return Coupling(pair.mu1.atoms(), pair.mu2.atoms(), std::move(m));
}

}  // namespace mot_detail

/// Phase-1 feasibility of the martingale transport constraints; by
/// Strassen this agrees with check_convex_order.
inline std::optional<Coupling> find_martingale_coupling(
    const MeasurePair& pair) {
  DenseMatrix zero(pair.mu1.size(), pair.mu2.size());
  StandardLp lp =
      mot_detail::build_mot_lp(pair, zero, LpSense::minimize, nullptr);
  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal) return std::nullopt;
  return mot_detail::coupling_from_primal(pair, sol.primal);
}

inline bool mot_feasible(const MeasurePair& pair) {
  return find_martingale_coupling(pair).has_value();
}

/// Solves the discrete martingale optimal transport problem. The pair
/// is re-verified for convex order first; failure is reported with the
/// analytic witness rather than an LP certificate.
inline SolveReport solve_mot(const MotProblem& p) {
  OrderVerdict verdict = check_convex_order(p.pair.mu1, p.pair.mu2);
  if (!verdict.holds()) throw NotInConvexOrderError(verdict);
  DenseMatrix payoff =
      mot_detail::eval_on_grid(p.payoff, p.pair.mu1.atoms(), p.pair.mu2.atoms());
  StandardLp lp = mot_detail::build_mot_lp(p.pair, payoff, p.sense, nullptr);
  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal)
    throw Error("martingale LP not solvable although the pair is in convex order");
  Coupling opt = mot_detail::coupling_from_primal(p.pair, sol.primal);
  return SolveReport{sol.value, std::move(opt), martingale_residual(opt),
                     sol.iterations};
}

/// Probes the epsilon-optimal face of a solved MOT problem along the
/// given payoff directions. With an empty direction list the defaults
/// are +-payoff, +-|x2-x1|, +-x1*x2 and four seeded random linear
/// functionals on the mass matrix.
inline std::vector<Coupling> optimizer_probe(
    const MotProblem& p, const std::vector<PayoffExpr>& directions = {},
    std::optional<double> eps_opt = std::nullopt,
    std::uint64_t seed = 0x6d6f746c61623031ull) {
  SolveReport base = solve_mot(p);
  const double m = base.value;
  const double eps = eps_opt.value_or(1e-8 * (1.0 + std::abs(m)));

  const auto& xs = p.pair.mu1.atoms();
  const auto& ys = p.pair.mu2.atoms();
  DenseMatrix payoff = mot_detail::eval_on_grid(p.payoff, xs, ys);

  std::vector<DenseMatrix> dirs;
  if (directions.empty()) {
    DenseMatrix spread(xs.size(), ys.size()), prod(xs.size(), ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = 0; j < ys.size(); ++j) {
        spread(i, j) = std::abs(ys[j] - xs[i]);
        prod(i, j) = xs[i] * ys[j];
      }
    auto negate = [](DenseMatrix m2) {
      for (double& v : m2.data()) v = -v;
      return m2;
    };
    dirs.push_back(payoff);
    dirs.push_back(negate(payoff));
    dirs.push_back(spread);
    dirs.push_back(negate(spread));
    dirs.push_back(prod);
    dirs.push_back(negate(prod));
    std::uint64_t state = seed;
    auto next_unit = [&state]() {
      // xorshift64*; avoids distribution objects so streams are
      // identical across standard libraries.
      state ^= state >> 12;
      state ^= state << 25;
      state ^= state >> 27;
      std::uint64_t z = state * 0x2545F4914F6CDD1Dull;
      return static_cast<double>(z >> 11) * 0x1.0p-52 - 1.0;
    };
    for (int k = 0; k < 4; ++k) {
      DenseMatrix r(xs.size(), ys.size());
      for (double& v : r.data()) v = next_unit();
      dirs.push_back(std::move(r));
    }
  } else {
    for (const PayoffExpr& d : directions)
      dirs.push_back(mot_detail::eval_on_grid(d, xs, ys));
  }

  mot_detail::FaceConstraint face;
  face.coeffs = payoff;
  if (p.sense == LpSense::maximize) {
    face.bound = m - eps;
    face.lower = true;
  } else {
    face.bound = m + eps;
    face.lower = false;
  }

  std::vector<Coupling> out;
  out.reserve(dirs.size());
  for (const DenseMatrix& psi : dirs) {
    StandardLp lp =
        mot_detail::build_mot_lp(p.pair, psi, LpSense::maximize, &face);
    LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal)
      throw Error("face probe LP failed to solve");
    Coupling q = mot_detail::coupling_from_primal(p.pair, sol.primal);
    double val = 0;
    for (std::size_t i = 0; i < q.x_atoms().size(); ++i)
      for (std::size_t j = 0; j < q.y_atoms().size(); ++j)
        val += q.mass()(i, j) * p.payoff.eval(q.x_atoms()[i], q.y_atoms()[j]);
    if (std::abs(val - m) > eps + 1e-8 * (1.0 + std::abs(m)))
      throw Error("face probe left the epsilon-optimal face");
    out.push_back(std::move(q));
  }
  return out;
}

struct ProjectionResult {
  double distance = 0;
  Coupling nearest;
  long lp_iterations = 0;
  int rounds = 0;
};

namespace proj_detail {

struct Cell {
  double x, y, mass;
};

inline std::vector<Cell> positive_cells(const Coupling& q) {
  std::vector<Cell> out;
  for (std::size_t i = 0; i < q.x_atoms().size(); ++i)
    for (std::size_t j = 0; j < q.y_atoms().size(); ++j)
      if (q.mass()(i, j) > 0)
        out.push_back({q.x_atoms()[i], q.y_atoms()[j], q.mass()(i, j)});
  return out;
}

inline std::size_t grid_index(const std::vector<double>& grid, double v) {
  auto it = std::lower_bound(grid.begin(), grid.end(), v);
  std::size_t best = grid.size();
  double dist = std::numeric_limits<double>::infinity();
  if (it != grid.end()) {
    best = static_cast<std::size_t>(it - grid.begin());
    dist = std::abs(*it - v);
  }
  if (it != grid.begin()) {
    std::size_t c = static_cast<std::size_t>(it - grid.begin()) - 1;
    if (std::abs(grid[c] - v) < dist) {
      best = c;
      dist = std::abs(grid[c] - v);
    }
  }
  if (best == grid.size() || dist > 1e-9 * (1.0 + std::abs(v)))
    throw Error("coupling atom does not lie on the target grid");
  return best;
}

/// Exact W1 projection onto the martingale couplings of `pair`
/// (optionally intersected with a payoff face). Solved as a joint LP
/// over transport columns pi[(source cell) -> (grid cell)]; beyond desk
/// scale the LP is solved over a growing working set of columns with a
/// full reduced-cost scan as the optimality certificate, which yields
/// the same optimum as the one-shot LP.
class ProjectionSolver {
 public:
  ProjectionSolver(const Coupling& q, const MeasurePair& pair,
                   const mot_detail::FaceConstraint* face,
                   const Coupling* anchor)
      : q_(q),
        pair_(pair),
        face_(face),
        X_(pair.mu1.atoms()),
        Y_(pair.mu2.atoms()),
        nx_(X_.size()),
        ny_(Y_.size()),
        ncells_(nx_ * ny_),
        source_(positive_cells(q)) {
    rows_ = source_.size() + nx_ + (ny_ - 1) + nx_ + (face ? 1 : 0);
    if (anchor) {
      anchor_ = *anchor;
    } else {
      auto found = find_martingale_coupling(pair);
      if (!found) {
        OrderVerdict v = check_convex_order(pair.mu1, pair.mu2);
        throw NotInConvexOrderError(v);
      }
      anchor_ = std::move(*found);
    }
  }

  ProjectionResult run() {
    seed_initial_columns();
    LpSolution sol;
    int round = 0;
    for (;; ++round) {
      if (round > kMaxRounds)
        throw IterationLimitError("projection column generation did not settle");
      StandardLp master = build_master();
      sol = solve_lp(master);
      if (sol.status != LpStatus::optimal)
        throw Error("projection master LP failed");
      iterations_ += sol.iterations;
      if (!add_violating_columns(sol)) break;
      retain_columns(sol);
    }

    DenseMatrix nearest(nx_, ny_);
    for (std::size_t k = 0; k < columns_.size(); ++k) {
      double v = sol.primal[k];
      if (v > 0) {
        std::size_t c = columns_[k].second;
        nearest(c / ny_, c % ny_) += v;
      }
    }
    ProjectionResult out{sol.value,
                         Coupling(X_, Y_, std::move(nearest)), iterations_,
                         round + 1};
    return out;
  }

 private:
  static constexpr int kMaxRounds = 1000;

  double cost_of(std::size_t s, std::size_t cell) const {
    const Cell& src = source_[s];
    return std::abs(src.x - X_[cell / ny_]) + std::abs(src.y - Y_[cell % ny_]);
  }

  void add_column(std::size_t s, std::size_t cell) {
    std::uint64_t key = static_cast<std::uint64_t>(s) * ncells_ + cell;
    if (seen_.insert(key).second) columns_.emplace_back(s, cell);
  }

  void seed_initial_columns() {
    // Northwest-corner transport between q and the anchor coupling
    // keeps the first master feasible.
    std::vector<std::pair<std::size_t, double>> tgt;
    for (std::size_t i = 0; i < anchor_.x_atoms().size(); ++i)
      for (std::size_t j = 0; j < anchor_.y_atoms().size(); ++j)
        if (anchor_.mass()(i, j) > 0)
          tgt.emplace_back(grid_index(X_, anchor_.x_atoms()[i]) * ny_ +
                               grid_index(Y_, anchor_.y_atoms()[j]),
                           anchor_.mass()(i, j));
    std::size_t s = 0, t = 0;
    double rs = source_.empty() ? 0 : source_[0].mass;
    double rt = tgt.empty() ? 0 : tgt[0].second;
    while (s < source_.size() && t < tgt.size()) {
      add_column(s, tgt[t].first);
      double step = std::min(rs, rt);
      rs -= step;
      rt -= step;
      if (rs <= 0 && ++s < source_.size()) rs = source_[s].mass;
      if (rt <= 0 && ++t < tgt.size()) rt = tgt[t].second;
    }
    // A small neighborhood of each source cell: the optimal plan keeps
    // mass local, so this usually saves a few pricing rounds.
    for (std::size_t k = 0; k < source_.size(); ++k) {
      std::size_t a = grid_neighbor(X_, source_[k].x);
      std::size_t b = grid_neighbor(Y_, source_[k].y);
      for (std::size_t da = a >= 1 ? a - 1 : 0; da <= std::min(a + 1, nx_ - 1);
           ++da)
        for (std::size_t db = b >= 1 ? b - 1 : 0;
             db <= std::min(b + 1, ny_ - 1); ++db)
          add_column(k, da * ny_ + db);
    }
  }

  static std::size_t grid_neighbor(const std::vector<double>& grid, double v) {
    auto it = std::lower_bound(grid.begin(), grid.end(), v);
    if (it == grid.end()) return grid.size() - 1;
    return static_cast<std::size_t>(it - grid.begin());
  }

  StandardLp build_master() const {
    StandardLp lp;
    lp.sense = LpSense::minimize;
    lp.rows = rows_;
    lp.cols = columns_.size() + (face_ ? 1 : 0);
    lp.matrix.assign(lp.rows * lp.cols, 0.0);
    lp.rhs.assign(lp.rows, 0.0);
    lp.objective.assign(lp.cols, 0.0);

    const std::size_t S = source_.size();
    for (std::size_t s = 0; s < S; ++s) lp.rhs[s] = source_[s].mass;
    for (std::size_t a = 0; a < nx_; ++a)
      lp.rhs[S + a] = pair_.mu1.weights()[a];
    for (std::size_t b = 0; b + 1 < ny_; ++b)
      lp.rhs[S + nx_ + b] = pair_.mu2.weights()[b];
    // Barycenter rows have rhs 0.
    if (face_) lp.rhs[rows_ - 1] = face_->bound;

    for (std::size_t k = 0; k < columns_.size(); ++k) {
      auto [s, cell] = columns_[k];
      std::size_t a = cell / ny_, b = cell % ny_;
      lp.at(s, k) = 1.0;
      lp.at(S + a, k) = 1.0;
      if (b + 1 < ny_) lp.at(S + nx_ + b, k) = 1.0;
      lp.at(S + nx_ + ny_ - 1 + a, k) = Y_[b] - X_[a];
      if (face_) lp.at(rows_ - 1, k) = face_->coeffs(a, b);
      lp.objective[k] = cost_of(s, cell);
    }
    if (face_) {
      std::size_t slack = columns_.size();
      lp.at(rows_ - 1, slack) = face_->lower ? -1.0 : 1.0;
    }
    return lp;
  }

  double reduced_cost(const std::vector<double>& y, std::size_t s,
                      std::size_t cell) const {
    const std::size_t S = source_.size();
    std::size_t a = cell / ny_, b = cell % ny_;
    double rc = cost_of(s, cell) - y[s] - y[S + a] -
                (Y_[b] - X_[a]) * y[S + nx_ + ny_ - 1 + a];
    if (b + 1 < ny_) rc -= y[S + nx_ + b];
    if (face_) rc -= face_->coeffs(a, b) * y[rows_ - 1];
    return rc;
  }

  bool add_violating_columns(const LpSolution& sol) {
    struct Cand {
      double rc;
      std::uint64_t key;
    };
    std::vector<Cand> cands;
    for (std::size_t s = 0; s < source_.size(); ++s) {
      for (std::size_t cell = 0; cell < ncells_; ++cell) {
        std::uint64_t key = static_cast<std::uint64_t>(s) * ncells_ + cell;
        if (seen_.contains(key)) continue;
        double rc = reduced_cost(sol.duals, s, cell);
        if (rc < -1e-9) cands.push_back({rc, key});
      }
    }
    if (cands.empty()) return false;
    std::sort(cands.begin(), cands.end(), [](const Cand& u, const Cand& v) {
      return u.rc < v.rc || (u.rc == v.rc && u.key < v.key);
    });
    std::size_t take = std::min(cands.size(), std::max<std::size_t>(512, rows_));
    pending_.clear();
    for (std::size_t k = 0; k < take; ++k) pending_.push_back(cands[k].key);
    return true;
  }

  void retain_columns(const LpSolution& sol) {
    // Keep the optimal support plus a bounded band of near-active
    // columns so the next master still contains the current optimum.
    struct Keep {
      double rc;
      std::size_t idx;
    };
    std::vector<std::pair<std::size_t, std::size_t>> kept;
    std::vector<Keep> band;
    for (std::size_t k = 0; k < columns_.size(); ++k) {
      if (sol.primal[k] > 0) {
        kept.push_back(columns_[k]);
      } else {
        double rc = reduced_cost(sol.duals, columns_[k].first, columns_[k].second);
        if (rc <= 1e-7) band.push_back({rc, k});
      }
    }
    std::sort(band.begin(), band.end(), [&](const Keep& u, const Keep& v) {
      return u.rc < v.rc || (u.rc == v.rc && u.idx < v.idx);
    });
    std::size_t cap = 4 * rows_;
    for (std::size_t k = 0; k < band.size() && k < cap; ++k)
      kept.push_back(columns_[band[k].idx]);

    columns_.clear();
    seen_.clear();
    for (auto& col : kept) add_column(col.first, col.second);
    for (std::uint64_t key : pending_)
      add_column(static_cast<std::size_t>(key / ncells_),
                 static_cast<std::size_t>(key % ncells_));
    pending_.clear();
  }

  const Coupling& q_;
  const MeasurePair& pair_;
  const mot_detail::FaceConstraint* face_;
  const std::vector<double>& X_;
  const std::vector<double>& Y_;
  std::size_t nx_, ny_, ncells_, rows_ = 0;
  std::vector<Cell> source_;
  Coupling anchor_ = Coupling({0.0}, {0.0}, DenseMatrix(1, 1, 1.0));
  std::vector<std::pair<std::size_t, std::size_t>> columns_;
  std::vector<std::uint64_t> pending_;
  std::unordered_set<std::uint64_t> seen_;
  long iterations_ = 0;
};

}  // namespace proj_detail

/// W1 distance (ground cost |dx| + |dy|) from q to the set of
/// martingale couplings of `pair`, with a nearest member. Distance is
/// zero (up to 1e-8) exactly when q lies in that set.
inline ProjectionResult project_to_martingale_set(const Coupling& q,
                                                  const MeasurePair& pair) {
  OrderVerdict verdict = check_convex_order(pair.mu1, pair.mu2);
  if (!verdict.holds()) throw NotInConvexOrderError(verdict);
  proj_detail::ProjectionSolver solver(q, pair, nullptr, nullptr);
  return solver.run();
}

/// W1 distance from q to the epsilon-optimal face of the problem
/// (couplings of `pair` whose payoff is within eps of `value`).
/// `anchor` must be a member of the face, typically a solved optimizer.
inline ProjectionResult project_to_eps_face(const Coupling& q,
                                            const MotProblem& p, double value,
                                            double eps,
                                            const Coupling& anchor) {
  OrderVerdict verdict = check_convex_order(p.pair.mu1, p.pair.mu2);
  if (!verdict.holds()) throw NotInConvexOrderError(verdict);
  mot_detail::FaceConstraint face;
  face.coeffs = mot_detail::eval_on_grid(p.payoff, p.pair.mu1.atoms(),
                                         p.pair.mu2.atoms());
  if (p.sense == LpSense::maximize) {
    face.bound = value - eps;
    face.lower = true;
  } else {
    face.bound = value + eps;
    face.lower = false;
  }
  proj_detail::ProjectionSolver solver(q, p.pair, &face, &anchor);
  return solver.run();
}

/// W1 between two couplings viewed as measures on the plane, ground
/// cost |dx| + |dy|; solved as a dense transport LP over the positive
/// cells, so intended for desk-scale supports.
inline double coupling_w1(const Coupling& q, const Coupling& r) {
  auto a = proj_detail::positive_cells(q);
  auto b = proj_detail::positive_cells(r);
  StandardLp lp;
  lp.sense = LpSense::minimize;
  lp.rows = a.size() + b.size() - 1;
  lp.cols = a.size() * b.size();
  lp.matrix.assign(lp.rows * lp.cols, 0.0);
  lp.rhs.assign(lp.rows, 0.0);
  lp.objective.resize(lp.cols);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      lp.at(i, i * b.size() + j) = 1.0;
      lp.objective[i * b.size() + j] =
          std::abs(a[i].x - b[j].x) + std::abs(a[i].y - b[j].y);
    }
    lp.rhs[i] = a[i].mass;
  }
  for (std::size_t j = 0; j + 1 < b.size(); ++j) {
    for (std::size_t i = 0; i < a.size(); ++i)
      lp.at(a.size() + j, i * b.size() + j) = 1.0;
    lp.rhs[a.size() + j] = b[j].mass;
  }
  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal)
    throw Error("coupling transport LP failed");
  return sol.value;
}

}  // namespace motlab
