#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "motlab/lp.hpp"
#include "motlab/measures.hpp"
#include "motlab/mot.hpp"

namespace motlab {

/// Factorization of a coupling into its first marginal and the
/// conditional laws of the second coordinate, one kernel per base atom.
struct Disintegration {
  DiscreteMeasure base;
  std::vector<DiscreteMeasure> kernels;
};

inline Disintegration disintegrate(const Coupling& q) {
  DiscreteMeasure base = q.first_marginal();
  std::vector<DiscreteMeasure> kernels;
  kernels.reserve(q.x_atoms().size());
  for (std::size_t i = 0; i < q.x_atoms().size(); ++i) {
    std::vector<double> row(q.y_atoms().size());
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = q.mass()(i, j);
    // Canonical couplings have no zero rows, so the row normalizes.
    kernels.emplace_back(q.y_atoms(), std::move(row));
  }
  return Disintegration{std::move(base), std::move(kernels)};
}

/// Adapted 1-Wasserstein distance: optimal transport between the two
/// first marginals under the ground cost
///   c(x, x') = |x - x'| + W1(kernel at x, kernel at x'),
/// with every kernel-pair W1 evaluated by the exact quantile sweep.
inline double aw_distance(const Coupling& q, const Coupling& r) {
  Disintegration dq = disintegrate(q);
  Disintegration dr = disintegrate(r);
  DenseMatrix cost(dq.base.size(), dr.base.size());
  for (std::size_t i = 0; i < dq.base.size(); ++i)
    for (std::size_t k = 0; k < dr.base.size(); ++k)
      cost(i, k) = std::abs(dq.base.atoms()[i] - dr.base.atoms()[k]) +
                   w1(dq.kernels[i], dr.kernels[k]);
  return solve_ot(dq.base, dr.base, cost, LpSense::minimize).value;
}

}  // namespace motlab
