#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "motlab/lp.hpp"
#include "test_support.hpp"

using namespace motlab;
using testsup::Rng;
using Catch::Approx;

namespace {

StandardLp make_lp(LpSense sense, std::size_t rows, std::size_t cols,
                   std::vector<double> matrix, std::vector<double> rhs,
                   std::vector<double> objective) {
  StandardLp lp;
  lp.sense = sense;
  lp.rows = rows;
  lp.cols = cols;
  lp.matrix = std::move(matrix);
  lp.rhs = std::move(rhs);
  lp.objective = std::move(objective);
  return lp;
}

/// Random LP with a known feasible point and trivial recession cone,
/// so an optimum always exists.
StandardLp random_feasible_lp(Rng& rng, std::size_t rows, std::size_t cols) {
  StandardLp lp;
  lp.sense = LpSense::minimize;
  lp.rows = rows;
  lp.cols = cols;
  lp.matrix.resize(rows * cols);
  for (double& v : lp.matrix) v = 0.1 + rng.unit();
  std::vector<double> x0(cols);
  for (double& v : x0) v = rng.unit();
  lp.rhs.assign(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) lp.rhs[i] += lp.at(i, j) * x0[j];
  lp.objective.resize(cols);
  for (double& v : lp.objective) v = rng.uniform(-1, 1);
  return lp;
}

}  // namespace

TEST_CASE("one-dimensional box") {
  // maximize x subject to x + s = 1
  StandardLp lp = make_lp(LpSense::maximize, 1, 2, {1, 1}, {1}, {1, 0});
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::optimal);
  REQUIRE(sol.value == Approx(1.0));
  REQUIRE(sol.primal[0] == Approx(1.0));
}

TEST_CASE("contradictory equalities are infeasible") {
  StandardLp lp = make_lp(LpSense::minimize, 2, 1, {1, 1}, {1, 2}, {0});
  REQUIRE(solve_lp(lp).status == LpStatus::infeasible);
}

TEST_CASE("unbounded direction is detected") {
  // maximize x subject to x - s = 0
  StandardLp lp = make_lp(LpSense::maximize, 1, 2, {1, -1}, {0}, {1, 0});
  REQUIRE(solve_lp(lp).status == LpStatus::unbounded);
}

TEST_CASE("input validation") {
  StandardLp lp = make_lp(LpSense::minimize, 1, 2, {1, 1}, {1}, {1});
  REQUIRE_THROWS_AS(solve_lp(lp), DimensionMismatchError);
  lp.objective = {1, std::nan("")};
  REQUIRE_THROWS_AS(solve_lp(lp), NonFiniteError);
}

TEST_CASE("2x2 transport polytope against a parameter sweep") {
  DiscreteMeasure mu = DiscreteMeasure::uniform({0, 1});
  DiscreteMeasure nu = DiscreteMeasure::uniform({0, 1});
  DenseMatrix cost = DenseMatrix::from_rows({{0, 1}, {1, 0}});
  OtResult res = solve_ot(mu, nu, cost, LpSense::minimize);

  // Feasible plans form a one-parameter family [[t, .5-t], [.5-t, t]].
  double best = 1e30;
  for (int k = 0; k <= 1000; ++k) {
    double t = 0.5 * k / 1000.0;
    best = std::min(best, 2.0 * (0.5 - t));
  }
  REQUIRE(res.value == Approx(best).margin(1e-10));
  REQUIRE(res.plan(0, 0) == Approx(0.5).margin(1e-10));
  REQUIRE(res.plan(1, 1) == Approx(0.5).margin(1e-10));
}

TEST_CASE("solve_ot examples") {
  OtResult singleton =
      solve_ot(DiscreteMeasure::dirac(0), DiscreteMeasure::dirac(1),
               DenseMatrix::from_rows({{7}}), LpSense::minimize);
  REQUIRE(singleton.value == Approx(7.0));
  REQUIRE(singleton.plan(0, 0) == Approx(1.0));

  DiscreteMeasure u01 = DiscreteMeasure::uniform({0, 1});
  DenseMatrix id_cost = DenseMatrix::from_rows({{0, 1}, {1, 0}});
  OtResult identity = solve_ot(u01, u01, id_cost, LpSense::minimize);
  REQUIRE(identity.value == Approx(0.0).margin(1e-12));

  DiscreteMeasure u23 = DiscreteMeasure::uniform({2, 3});
  DenseMatrix abs_cost(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      abs_cost(i, j) = std::abs(u01.atoms()[i] - u23.atoms()[j]);
  REQUIRE(solve_ot(u01, u23, abs_cost, LpSense::minimize).value == Approx(2.0));
}

TEST_CASE("optimal solutions satisfy the reporting invariants") {
  Rng rng(21);
  for (int k = 0; k < 50; ++k) {
    StandardLp lp = random_feasible_lp(rng, 2 + rng.index(4), 3 + rng.index(8));
    LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);

    double bmax = 0;
    for (double b : lp.rhs) bmax = std::max(bmax, std::abs(b));
    REQUIRE(sol.max_residual <= 1e-8 * (1.0 + bmax));
    for (double x : sol.primal) REQUIRE(x >= -1e-10);

    // Weak-duality spot check: re-evaluated objective matches.
    double dot = 0;
    for (std::size_t j = 0; j < lp.cols; ++j)
      dot += lp.objective[j] * sol.primal[j];
    REQUIRE(std::abs(dot - sol.value) <= 1e-10 * (1.0 + std::abs(sol.value)));

    // Strong duality: y'b equals the optimal value.
    double yb = 0;
    for (std::size_t i = 0; i < lp.rows; ++i) yb += sol.duals[i] * lp.rhs[i];
    REQUIRE(yb == Approx(sol.value).margin(1e-8 * (1.0 + std::abs(sol.value))));

    // Dual feasibility: reduced costs are nonnegative for minimize.
    for (std::size_t j = 0; j < lp.cols; ++j) {
      double rc = lp.objective[j];
      for (std::size_t i = 0; i < lp.rows; ++i)
        rc -= sol.duals[i] * lp.at(i, j);
      REQUIRE(rc >= -1e-7);
    }
  }
}

TEST_CASE("column permutation leaves the value unchanged") {
  Rng rng(22);
  for (int k = 0; k < 20; ++k) {
    StandardLp lp = random_feasible_lp(rng, 3, 6);
    LpSolution base = solve_lp(lp);

    std::vector<std::size_t> perm(lp.cols);
    for (std::size_t j = 0; j < lp.cols; ++j) perm[j] = j;
    for (std::size_t j = lp.cols; j > 1; --j)
      std::swap(perm[j - 1], perm[rng.index(j)]);

    StandardLp shuffled = lp;
    for (std::size_t j = 0; j < lp.cols; ++j) {
      shuffled.objective[perm[j]] = lp.objective[j];
      for (std::size_t i = 0; i < lp.rows; ++i)
        shuffled.at(i, perm[j]) = lp.at(i, j);
    }
    LpSolution other = solve_lp(shuffled);
    REQUIRE(other.status == LpStatus::optimal);
    REQUIRE(other.value == Approx(base.value).margin(1e-10));
  }
}

TEST_CASE("max sense equals the negated min of the negated objective") {
  Rng rng(23);
  for (int k = 0; k < 20; ++k) {
    StandardLp lp = random_feasible_lp(rng, 3, 7);
    lp.sense = LpSense::maximize;
    // Bounded above: total mass is pinned by the first constraint and
    // all coefficients are positive, so max is finite.
    LpSolution mx = solve_lp(lp);
    StandardLp neg = lp;
    neg.sense = LpSense::minimize;
    for (double& c : neg.objective) c = -c;
    LpSolution mn = solve_lp(neg);
    REQUIRE(mx.status == LpStatus::optimal);
    REQUIRE(mx.value == Approx(-mn.value).margin(1e-12 * (1.0 + std::abs(mx.value))));
  }
}
