#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "motlab/json_io.hpp"
#include "motlab/lp.hpp"
#include "motlab/measures.hpp"
#include "test_support.hpp"

using namespace motlab;
using testsup::Rng;
using Catch::Approx;

TEST_CASE("canonicalize merges duplicates and renormalizes") {
  DiscreteMeasure m({1, 0, 1}, {0.25, 0.5, 0.25});
  REQUIRE(m.atoms() == std::vector<double>{0, 1});
  REQUIRE(m.weights() == std::vector<double>{0.5, 0.5});

  DiscreteMeasure single({3}, {2.0});
  REQUIRE(single.atoms() == std::vector<double>{3});
  REQUIRE(single.weights() == std::vector<double>{1.0});

  DiscreteMeasure dropped({0, 1}, {0.5, 0.0});
  REQUIRE(dropped.atoms() == std::vector<double>{0});
  REQUIRE(dropped.weights() == std::vector<double>{1.0});
}

TEST_CASE("canonicalize error paths") {
  REQUIRE_THROWS_AS(DiscreteMeasure({}, {}), EmptySupportError);
  REQUIRE_THROWS_AS(DiscreteMeasure({0.0, 1.0}, {0.0, 0.0}), EmptySupportError);
  REQUIRE_THROWS_AS(DiscreteMeasure({std::nan("")}, {1.0}), NonFiniteError);
  REQUIRE_THROWS_AS(DiscreteMeasure({0.0}, {std::nan("")}), NonFiniteError);
  REQUIRE_THROWS_AS(DiscreteMeasure({0.0, 1.0}, {0.5}), DimensionMismatchError);
}

TEST_CASE("canonical form invariants on random input") {
  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    DiscreteMeasure m = testsup::random_measure(rng, 15);
    double mass = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      REQUIRE(m.weights()[i] > 0);
      if (i + 1 < m.size()) REQUIRE(m.atoms()[i] < m.atoms()[i + 1]);
      mass += m.weights()[i];
    }
    REQUIRE(mass == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("potential values") {
  DiscreteMeasure u11 = DiscreteMeasure::uniform({-1, 1});
  REQUIRE(u11.potential(0) == Approx(1.0));
  DiscreteMeasure u22 = DiscreteMeasure::uniform({-2, 2});
  REQUIRE(u22.potential(0) == Approx(2.0));
  DiscreteMeasure d = DiscreteMeasure::dirac(0.75);
  for (double x : {-2.0, 0.0, 0.75, 3.5})
    REQUIRE(d.potential(x) == Approx(std::abs(x - 0.75)));
}

TEST_CASE("potential is convex and dominates |x - mean|") {
  Rng rng(12);
  for (int k = 0; k < 100; ++k) {
    DiscreteMeasure m = testsup::random_measure(rng, 12);
    double a = rng.uniform(-4, 4), b = rng.uniform(-4, 4), c = rng.uniform(-4, 4);
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    if (c - a < 1e-9) continue;
    double lhs = m.potential(b);
    double rhs = ((c - b) * m.potential(a) + (b - a) * m.potential(c)) / (c - a);
    REQUIRE(lhs <= rhs + 1e-12);
    REQUIRE(m.potential(b) >= std::abs(b - m.mean()) - 1e-12);
  }
}

TEST_CASE("check_convex_order examples") {
  DiscreteMeasure d0 = DiscreteMeasure::dirac(0);
  REQUIRE(check_convex_order(d0, d0).holds());

  DiscreteMeasure u1 = DiscreteMeasure::uniform({-1, 1});
  DiscreteMeasure u2 = DiscreteMeasure::uniform({-2, 2});
  REQUIRE(check_convex_order(u1, u2).holds());

  OrderVerdict rev = check_convex_order(u2, u1);
  REQUIRE(rev.kind == OrderKind::fails_at);
  REQUIRE(rev.witness == Approx(0.0).margin(1e-12));
  REQUIRE(rev.lhs > rev.rhs);

  OrderVerdict means = check_convex_order(d0, DiscreteMeasure::dirac(1));
  REQUIRE(means.kind == OrderKind::fails_mean);
}

TEST_CASE("convex order properties against a dense-grid oracle") {
  Rng rng(13);
  for (int k = 0; k < 100; ++k) {
    DiscreteMeasure m = testsup::random_measure(rng, 10);
    REQUIRE(check_convex_order(m, m).holds());

    MeasurePair p = testsup::random_ordered_pair(rng, 8);
    OrderVerdict v = check_convex_order(p.mu1, p.mu2);
    REQUIRE(v.holds());
    REQUIRE(p.mu1.mean() == Approx(p.mu2.mean()).margin(1e-9));

    // Dense grid spot-check: the potential domination must hold off
    // the atoms as well.
    for (int g = 0; g <= 50; ++g) {
      double x = -5.0 + 10.0 * g / 50.0;
      REQUIRE(p.mu1.potential(x) <= p.mu2.potential(x) + 1e-9);
    }

    // The measures differ, so the reversed order must fail and the
    // reported witness must be a genuine violation point.
    if (w1(p.mu1, p.mu2) > 1e-6) {
      OrderVerdict rev = check_convex_order(p.mu2, p.mu1);
      REQUIRE(!rev.holds());
      if (rev.kind == OrderKind::fails_at)
        REQUIRE(p.mu2.potential(rev.witness) >
                p.mu1.potential(rev.witness) + 1e-9);
    }
  }
}

TEST_CASE("w1 examples") {
  REQUIRE(w1(DiscreteMeasure::dirac(0), DiscreteMeasure::dirac(1)) == Approx(1.0));
  REQUIRE(w1(DiscreteMeasure::uniform({0, 1}), DiscreteMeasure::dirac(0.5)) ==
          Approx(0.5));
  DiscreteMeasure m = DiscreteMeasure::uniform({-1, 0.5, 2});
  REQUIRE(w1(m, m) == 0.0);
}

TEST_CASE("w1 is a metric") {
  Rng rng(14);
  for (int k = 0; k < 100; ++k) {
    DiscreteMeasure a = testsup::random_measure(rng, 10);
    DiscreteMeasure b = testsup::random_measure(rng, 10);
    DiscreteMeasure c = testsup::random_measure(rng, 10);
    REQUIRE(w1(a, b) == w1(b, a));  // symmetric exactly
    REQUIRE(w1(a, c) <= w1(a, b) + w1(b, c) + 1e-9);
    if (!(a == b)) REQUIRE(w1(a, b) > 0);
  }
}

TEST_CASE("w1 quantile sweep equals the transport LP value") {
  Rng rng(15);
  for (int k = 0; k < 100; ++k) {
    DiscreteMeasure a = testsup::random_measure(rng, 20);
    DiscreteMeasure b = testsup::random_measure(rng, 20);
    DenseMatrix cost(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j)
        cost(i, j) = std::abs(a.atoms()[i] - b.atoms()[j]);
    double lp_value = solve_ot(a, b, cost, LpSense::minimize).value;
    REQUIRE(w1(a, b) == Approx(lp_value).margin(1e-8));
  }
}

TEST_CASE("w_oplus examples") {
  DiscreteMeasure d0 = DiscreteMeasure::dirac(0);
  DiscreteMeasure d1 = DiscreteMeasure::dirac(1);
  DiscreteMeasure d2 = DiscreteMeasure::dirac(2);
  REQUIRE(w_oplus({d0, d0}, {d0, d0}) == 0.0);
  REQUIRE(w_oplus({d0, d1}, {d2, d1}) == Approx(2.0));
  MeasurePair p{DiscreteMeasure::uniform({-1, 1}), DiscreteMeasure::uniform({-2, 2})};
  REQUIRE(w_oplus(p, {d0, d0}) == Approx(3.0));
}

TEST_CASE("quantize examples") {
  REQUIRE(quantize(DiscreteMeasure::dirac(2.5), 7) == DiscreteMeasure::dirac(2.5));

  std::vector<double> grid(1000);
  for (int k = 0; k < 1000; ++k) grid[k] = k / 1000.0;
  DiscreteMeasure fine = DiscreteMeasure::uniform(grid);
  DiscreteMeasure two = quantize(fine, 2);
  REQUIRE(two.size() == 2);
  REQUIRE(two.atoms()[0] == Approx(0.2495).margin(1e-12));
  REQUIRE(two.atoms()[1] == Approx(0.7495).margin(1e-12));
  REQUIRE(two.weights()[0] == Approx(0.5).margin(1e-12));

  DiscreteMeasure four = DiscreteMeasure::uniform({-2, -1, 1, 2});
  DiscreteMeasure halves = quantize(four, 2);
  REQUIRE(halves.atoms() == std::vector<double>{-1.5, 1.5});

  // n = 1 collapses to the mean.
  DiscreteMeasure m({0.0, 1.0, 5.0}, {0.2, 0.3, 0.5});
  DiscreteMeasure one = quantize(m, 1);
  REQUIRE(one.size() == 1);
  REQUIRE(one.atoms()[0] == Approx(m.mean()).margin(1e-12));
}

TEST_CASE("quantize preserves means and convex order") {
  Rng rng(16);
  for (int k = 0; k < 100; ++k) {
    DiscreteMeasure m = testsup::random_measure(rng, 14);
    std::size_t n = 1 + rng.index(10);
    DiscreteMeasure q = quantize(m, n);
    REQUIRE(q.mean() == Approx(m.mean()).margin(1e-12));
    REQUIRE(check_convex_order(q, m).holds());
  }
}

TEST_CASE("quantize keeps convex-ordered pairs ordered") {
  Rng rng(17);
  for (int k = 0; k < 100; ++k) {
    MeasurePair p = testsup::random_ordered_pair(rng, 10);
    std::size_t n = 1 + rng.index(12);
    REQUIRE(check_convex_order(quantize(p.mu1, n), quantize(p.mu2, n)).holds());
  }
}

TEST_CASE("quantize refinement error is nonincreasing on grid measures") {
  Rng rng(18);
  for (int k = 0; k < 50; ++k) {
    DiscreteMeasure m = testsup::random_grid_measure(rng, 64);
    double prev = w1(quantize(m, 2), m);
    for (std::size_t n = 4; n <= 32; n *= 2) {
      double cur = w1(quantize(m, n), m);
      REQUIRE(cur <= prev + 1e-12);
      prev = cur;
    }
  }
}

TEST_CASE("measure JSON round trip is exact") {
  Rng rng(19);
  for (int k = 0; k < 50; ++k) {
    DiscreteMeasure m = testsup::random_measure(rng, 12);
    DiscreteMeasure back = measure_from_json_text(to_json(m));
    REQUIRE(back == m);
  }
  REQUIRE_THROWS_AS(measure_from_json_text("{\"atoms\":[0]}"), JsonError);
  REQUIRE_THROWS_AS(measure_from_json_text("{\"atoms\":[0],\"weights\":\"x\"}"),
                    JsonError);
}
