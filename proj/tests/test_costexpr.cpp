#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "motlab/costexpr.hpp"

using namespace motlab;
using Catch::Approx;

TEST_CASE("parse and evaluate the canonical payoffs") {
  REQUIRE(PayoffExpr::parse("abs(x2 - x1)").eval(1, -2) == Approx(3.0));
  REQUIRE(PayoffExpr::parse("call(x2, 1.5)").eval(0, 2) == Approx(0.5));
  REQUIRE(PayoffExpr::parse("x1*x2").eval(-1, 2) == Approx(-2.0));
  REQUIRE(PayoffExpr::parse("call(x2, 1.5) - 0.25*x1").eval(2, 3) ==
          Approx(1.5 - 0.5));
  REQUIRE(PayoffExpr::parse("put(x2, 1)").eval(0, 0.25) == Approx(0.75));
}

TEST_CASE("malformed input reports 1-based columns") {
  try {
    PayoffExpr::parse("x1 + + x2");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(e.column == 6);
  }

  try {
    PayoffExpr::parse("max(x1 x2)");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(e.column == 8);
  }

  REQUIRE_THROWS_AS(PayoffExpr::parse("foo(x1)"), ParseError);
  REQUIRE_THROWS_AS(PayoffExpr::parse("x1 +"), ParseError);
  REQUIRE_THROWS_AS(PayoffExpr::parse("(x1"), ParseError);
  REQUIRE_THROWS_AS(PayoffExpr::parse("x1 @ x2"), ParseError);
  REQUIRE_THROWS_AS(PayoffExpr::parse(""), ParseError);
  REQUIRE_THROWS_AS(PayoffExpr::parse("abs(x1, x2)"), ParseError);
}

TEST_CASE("precedence corpus with hand-computed values") {
  const std::vector<std::pair<const char*, double>> corpus = {
      // evaluated at x1 = 2, x2 = -3
      {"x1 + x2 * 2", 2 + -3 * 2.0},
      {"(x1 + x2) * 2", (2 - 3) * 2.0},
      {"x1 - x2 - 1", 2 - (-3) - 1},
      {"x1 - (x2 - 1)", 2 - (-3 - 1)},
      {"-x1 * x2", (-2.0) * (-3.0)},
      {"-(x1 * x2)", -(2.0 * -3.0)},
      {"2 * -x1", 2 * -2.0},
      {"x1 / 2 / 2", 0.5},
      {"x1 / (2 / 2)", 2.0},
      {"x1 + x2 / 3", 2 + (-3.0 / 3)},
      {"abs(x2) * 2 + 1", 7.0},
      {"max(x1, x2)", 2.0},
      {"min(x1, x2)", -3.0},
      {"max(x1, x2) - min(x1, x2)", 5.0},
      {"call(x1, 1)", 1.0},
      {"call(x2, 1)", 0.0},
      {"put(x2, -1)", 2.0},
      {"put(x1, -1)", 0.0},
      {"abs(x2 - x1) - abs(x1 - x2)", 0.0},
      {"1.5e2 + x1", 152.0},
      {"-x1 + -x2", 1.0},
      {"2*x1 - 3*x2 + 4", 17.0},
      {"min(max(x1, x2), 1.5)", 1.5},
      {"call(abs(x2), 2.5)", 0.5},
  };
  for (const auto& [text, expected] : corpus) {
    CAPTURE(text);
    REQUIRE(PayoffExpr::parse(text).eval(2, -3) == Approx(expected).margin(1e-12));
  }
}

TEST_CASE("print then reparse yields the identical AST") {
  const char* samples[] = {
      "abs(x2 - x1)",
      "call(x2, 1.5) - 0.25*x1",
      "-(x1 + x2) * max(x1, 0.5) / (1 + abs(x2))",
      "x1 - x2 - 1 - -2",
      "min(x1, x2) * -3 + put(x2, 0.125)",
      "2 * -x1 / (x2 - 4)",
  };
  for (const char* text : samples) {
    CAPTURE(text);
    PayoffExpr parsed = PayoffExpr::parse(text);
    PayoffExpr reparsed = PayoffExpr::parse(parsed.to_string());
    REQUIRE(parsed.same_ast(reparsed));
    REQUIRE(parsed.to_string() == reparsed.to_string());
  }
}

TEST_CASE("evaluation rejects non-finite results") {
  PayoffExpr div = PayoffExpr::parse("x1 / x2");
  REQUIRE(div.eval(1, 2) == Approx(0.5));
  REQUIRE_THROWS_AS(div.eval(1, 0), EvalError);
  REQUIRE_THROWS_AS(div.eval(1, 1e-320), EvalError);
}

TEST_CASE("linear growth lint") {
  REQUIRE(PayoffExpr::parse("abs(x2 - x1)").lint_linear_growth().ok);
  REQUIRE(PayoffExpr::parse("3*x1").lint_linear_growth().ok);
  REQUIRE(PayoffExpr::parse("x1 / 2").lint_linear_growth().ok);

  LintResult prod = PayoffExpr::parse("x1*x2").lint_linear_growth();
  REQUIRE(!prod.ok);
  REQUIRE(prod.reason == "product of variable terms");

  LintResult self = PayoffExpr::parse("x1*x1").lint_linear_growth();
  REQUIRE(!self.ok);

  LintResult div = PayoffExpr::parse("1 / x2").lint_linear_growth();
  REQUIRE(!div.ok);
  REQUIRE(div.reason == "division by variable term");

  REQUIRE(!PayoffExpr::parse("abs(x1) + max(0, x1*x2)").lint_linear_growth().ok);
}
