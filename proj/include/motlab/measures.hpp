#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "motlab/errors.hpp"
#include "motlab/numeric.hpp"

namespace motlab {

/// Atoms closer than this are merged during canonicalization.
inline constexpr double kAtomMergeTol = 1e-12;
/// Total mass must stay within this of 1 in canonical form.
inline constexpr double kMassTol = 1e-12;
/// Default tolerance for convex-order checks, one order above the LP
/// solver tolerance so order checks and LP feasibility agree.
inline constexpr double kOrderTol = 1e-9;

/// Finitely supported probability measure on the real line, kept in
/// canonical form: atoms strictly increasing, weights positive,
/// total mass 1 within kMassTol.
class DiscreteMeasure {
 public:
  /// Canonicalizing constructor: sorts, merges atoms closer than
  /// kAtomMergeTol (weighted centroid), drops zero weights and
  /// renormalizes the total mass to 1.
  DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights) {
    if (atoms.size() != weights.size())
      throw DimensionMismatchError("atoms/weights length mismatch");
    if (atoms.empty()) throw EmptySupportError("measure needs at least one atom");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (!std::isfinite(atoms[i]) || !std::isfinite(weights[i]))
        throw NonFiniteError("non-finite atom or weight");
    }
    // Tiny negative weights (e.g. LP output noise) are treated as zero.
    for (double& w : weights) {
      if (w < 0) {
        if (w < -1e-9) throw Error("negative weight");
        w = 0;
      }
    }

    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });

    // Cluster sorted atoms; a merged cluster is tracked by its running
    // weighted centroid so the merge preserves the mean. Singleton
    // clusters keep the original atom value exactly.
    std::vector<double> cw, cwx, cpos;
    std::vector<bool> merged;
    for (std::size_t k : order) {
      if (weights[k] <= 0) continue;
      double x = atoms[k], w = weights[k];
      if (!cw.empty()) {
        double centroid = merged.back() ? cwx.back() / cw.back() : cpos.back();
        if (x - centroid < kAtomMergeTol) {
          cw.back() += w;
          cwx.back() += w * x;
          merged.back() = true;
          continue;
        }
      }
      cw.push_back(w);
      cwx.push_back(w * x);
      cpos.push_back(x);
      merged.push_back(false);
    }
    if (cw.empty()) throw EmptySupportError("no positive weight");

    double total = std::accumulate(cw.begin(), cw.end(), 0.0);
    atoms_.resize(cw.size());
    weights_.resize(cw.size());
    for (std::size_t i = 0; i < cw.size(); ++i) {
      atoms_[i] = merged[i] ? cwx[i] / cw[i] : cpos[i];
      weights_[i] = cw[i] / total;
    }
    mean_ = 0;
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      mean_ += weights_[i] * atoms_[i];
  }

  static DiscreteMeasure dirac(double c) { return DiscreteMeasure({c}, {1.0}); }

  /// Equal weights on the given support points.
  static DiscreteMeasure uniform(std::vector<double> atoms) {
    std::vector<double> w(atoms.size(), 1.0);
    return DiscreteMeasure(std::move(atoms), std::move(w));
  }

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }
  double mean() const { return mean_; }

  /// Potential u(x) = sum_i w_i |x - a_i|; convex, piecewise linear,
  /// kinks only at atoms.
  double potential(double x) const {
    double u = 0;
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      u += weights_[i] * std::abs(x - atoms_[i]);
    return u;
  }

  bool operator==(const DiscreteMeasure&) const = default;

 private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
  double mean_ = 0;
};

inline DiscreteMeasure canonicalize(std::vector<double> atoms,
                                    std::vector<double> weights) {
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

inline double potential(const DiscreteMeasure& mu, double x) {
  return mu.potential(x);
}

/// Pair of marginals; convex order is re-verified by every MOT solve
/// rather than enforced at construction.
struct MeasurePair {
  DiscreteMeasure mu1;
  DiscreteMeasure mu2;
  bool operator==(const MeasurePair&) const = default;
};

enum class OrderKind { holds, fails_mean, fails_at };

struct OrderVerdict {
  OrderKind kind = OrderKind::holds;
  /// Witness point for fails_at; unused otherwise.
  double witness = 0.0;
  /// For fails_at: potentials (u1, u2) at the witness.
  /// For fails_mean: the two means.
  double lhs = 0.0;
  double rhs = 0.0;

  bool holds() const { return kind == OrderKind::holds; }
};

/// Pair failed the convex-order check required by Strassen's theorem.
struct NotInConvexOrderError : Error {
  OrderVerdict verdict;
  explicit NotInConvexOrderError(OrderVerdict v)
      : Error(v.kind == OrderKind::fails_mean
                  ? "pair not in convex order: means differ"
                  : "pair not in convex order: potential crossing at x = " +
                        format_double(v.witness)),
        verdict(v) {}
};

/// Convex-order check via potential functions. With equal means the
/// difference of the two potentials is piecewise linear with kinks only
/// at atoms and tends to 0 at +-infinity, so evaluating at the union of
/// atoms decides the order. The witness for a failure is the midpoint
/// of the kink run where the violation is largest.
inline OrderVerdict check_convex_order(const DiscreteMeasure& mu1,
                                       const DiscreteMeasure& mu2,
                                       double tol = kOrderTol) {
  if (tol < 0) throw Error("negative tolerance");
  if (std::abs(mu1.mean() - mu2.mean()) > tol)
    return {OrderKind::fails_mean, 0.0, mu1.mean(), mu2.mean()};

  std::vector<double> xs;
  xs.reserve(mu1.size() + mu2.size());
  xs.insert(xs.end(), mu1.atoms().begin(), mu1.atoms().end());
  xs.insert(xs.end(), mu2.atoms().begin(), mu2.atoms().end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  std::vector<double> violation(xs.size());
  double vmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    violation[i] = mu1.potential(xs[i]) - mu2.potential(xs[i]);
    vmax = std::max(vmax, violation[i]);
  }
  if (vmax <= tol) return {OrderKind::holds};

  double tie = 1e-12 * (1.0 + std::abs(vmax));
  std::size_t first = 0;
  while (violation[first] < vmax - tie) ++first;
  std::size_t last = first;
  while (last + 1 < xs.size() && violation[last + 1] >= vmax - tie) ++last;
  double witness = 0.5 * (xs[first] + xs[last]);
  return {OrderKind::fails_at, witness, mu1.potential(witness),
          mu2.potential(witness)};
}

/// 1-Wasserstein distance on the line: L1 distance between quantile
/// functions, computed by a merged sweep over cumulative-weight
/// breakpoints.
inline double w1(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const auto& xa = mu.atoms();
  const auto& wa = mu.weights();
  const auto& xb = nu.atoms();
  const auto& wb = nu.weights();
  std::size_t i = 0, j = 0;
  double ca = 0, cb = 0, last = 0, total = 0;
  while (i < xa.size() && j < xb.size()) {
    double na = ca + wa[i];
    double nb = cb + wb[j];
    double next = std::min(na, nb);
    total += (next - last) * std::abs(xa[i] - xb[j]);
    last = next;
    if (na < nb) {
      ca = na;
      ++i;
    } else if (nb < na) {
      cb = nb;
      ++j;
    } else {
      ca = na;
      cb = nb;
      ++i;
      ++j;
    }
  }
  return total;
}

/// Sum of componentwise W1 distances between marginal pairs.
inline double w_oplus(const MeasurePair& p, const MeasurePair& q) {
  return w1(p.mu1, q.mu1) + w1(p.mu2, q.mu2);
}

/// Quantile-block quantization: splits [0,1] into n equal blocks and
/// places weight 1/n at the conditional mean of each block. Atoms
/// straddling a block boundary are split proportionally, so the mean is
/// preserved and quantize(mu, n) precedes mu in convex order.
inline DiscreteMeasure quantize(const DiscreteMeasure& mu, std::size_t n) {
  if (n == 0) throw Error("quantize needs n >= 1");
  std::vector<double> mass(n, 0.0), acc(n, 0.0);
  double cum = 0;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double c0 = cum;
    double c1 = cum + mu.weights()[i];
    cum = c1;
    auto k0 = static_cast<std::size_t>(
        std::clamp(std::floor(c0 * dn), 0.0, dn - 1.0));
    for (std::size_t k = k0; k < n; ++k) {
      double lo = std::max(c0, static_cast<double>(k) / dn);
      double hi = std::min(c1, static_cast<double>(k + 1) / dn);
      if (hi <= lo) {
        if (static_cast<double>(k) / dn >= c1) break;
        continue;
      }
      mass[k] += hi - lo;
      acc[k] += (hi - lo) * mu.atoms()[i];
    }
  }
  std::vector<double> atoms(n), weights(n, 1.0 / dn);
  for (std::size_t k = 0; k < n; ++k) {
    // mass[k] is 1/n up to rounding; an empty block can only appear
    // through cumulative-weight round-off at the far right tail.
    atoms[k] = mass[k] > 0 ? acc[k] / mass[k]
                           : (k > 0 ? atoms[k - 1] : mu.mean());
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

}  // namespace motlab
