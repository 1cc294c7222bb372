#include <cmath>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "mlk/expr.hpp"
#include "mlk/expr_parse.hpp"

using namespace mlk;

namespace {

Expr var_x() { return variable("x"); }
Expr var_xi() { return variable("xi"); }

cplx fd_derivative(const Expr& e, Env env, const std::string& var,
                   double delta = 1e-5) {
  Env lo = env, hi = env;
  hi[var] += delta;
  lo[var] -= delta;
  return (eval(e, hi) - eval(e, lo)) / (2.0 * delta);
}

std::shared_ptr<const UniformTable1D> sin_table() {
  const double lo = -3.2, dx = 1e-3;
  const std::size_t n = 6401;
  std::vector<cplx> f(n);
  for (std::size_t i = 0; i < n; ++i)
    f[i] = cplx(std::sin(lo + dx * static_cast<double>(i)), 0.0);
  return std::make_shared<UniformTable1D>(lo, dx, std::move(f),
                                          OutOfRange::clamp);
}

std::shared_ptr<const UniformTable2D> gauss2_table() {
  const double lo = -2.5, d = 5e-3;
  const std::int64_t n = 1001;
  std::vector<cplx> f(static_cast<std::size_t>(n * n));
  for (std::int64_t i = 0; i < n; ++i) {
    double x = lo + d * static_cast<double>(i);
    for (std::int64_t j = 0; j < n; ++j) {
      double y = lo + d * static_cast<double>(j);
      f[static_cast<std::size_t>(i * n + j)] =
          cplx(std::exp(-(x * x + y * y) / 2.0), 0.0);
    }
  }
  return std::make_shared<UniformTable2D>(lo, d, n, lo, d, n, std::move(f),
                                          OutOfRange::zero);
}

}  // namespace

TEST_CASE("constant folding in builders") {
  // [TRIVIAL] arithmetic on constants collapses to a constant node.
  CHECK(is_const(add(constant(2.0), constant(3.0)), cplx(5.0, 0.0)));
  CHECK(is_const(mul(constant(2.0), constant(-3.0)), cplx(-6.0, 0.0)));
  CHECK(is_zero(mul(constant(0.0), var_x())));
  CHECK(is_zero(mul(var_x(), constant(0.0))));
  CHECK(mul(constant(1.0), var_x())->kind == ExprKind::variable);
  CHECK(add(constant(0.0), var_x())->kind == ExprKind::variable);
  CHECK(is_one(pow(var_x(), 0.0)));
  CHECK(pow(var_x(), 1.0)->kind == ExprKind::variable);
  CHECK(is_const(exp(constant(0.0)), cplx(1.0, 0.0)));
}

TEST_CASE("tree evaluation against hand-computed values") {
  // [DERIVED] f(x, xi) = x^2 + sin(xi), evaluated by hand.
  Expr e = add(pow(var_x(), 2.0), sin(var_xi()));
  Env env{{"x", cplx(1.5, 0.0)}, {"xi", cplx(0.7, 0.0)}};
  cplx got = eval(e, env);
  CHECK(std::abs(got - cplx(2.25 + std::sin(0.7), 0.0)) < 1e-15);

  // Complex constants propagate: (i * x) at x = 2 is 2i.
  Expr ix = mul(constant(cplx(0.0, 1.0)), var_x());
  CHECK(std::abs(eval(ix, {{"x", cplx(2.0, 0.0)}}) - cplx(0.0, 2.0)) < 1e-15);

  // Unbound variables are an error naming the variable.
  CHECK_THROWS_WITH(eval(e, {{"x", cplx(1.0, 0.0)}}),
                    Catch::Matchers::ContainsSubstring("xi"));
}

TEST_CASE("zero-absorbing product guards poles under cutoffs") {
  // bump(x; 0, 1) * 1/(x - 1) at x = 1: the pole sits exactly on the
  // support boundary where the bump vanishes; the product must be zero,
  // not NaN.
  Expr e = mul(bump(var_x(), 0.0, 1.0),
               div(constant(1.0), sub(var_x(), constant(1.0))));
  cplx v = eval(e, {{"x", cplx(1.0, 0.0)}});
  CHECK(v == cplx(0.0, 0.0));

  // Same through the compiled path.
  CompiledExpr ce(e, {"x"});
  cplx cv = ce({cplx(1.0, 0.0)});
  CHECK(cv == cplx(0.0, 0.0));
}

TEST_CASE("bump derivative is finite on the whole line") {
  Expr b = bump(var_x(), 0.0, 1.0);
  Expr db = differentiate(b, "x");
  for (double x : {-1.5, -1.0, -0.999999, 0.0, 0.5, 0.999999, 1.0, 1.5}) {
    cplx v = eval(db, {{"x", cplx(x, 0.0)}});
    CHECK(std::isfinite(v.real()));
    CHECK(std::isfinite(v.imag()));
  }
  // Exactly at the boundary the derivative is zero (the cutoff is flat to
  // all orders there).
  CHECK(eval(db, {{"x", cplx(1.0, 0.0)}}) == cplx(0.0, 0.0));
  CHECK(eval(db, {{"x", cplx(-1.0, 0.0)}}) == cplx(0.0, 0.0));
}

TEST_CASE("symbolic derivatives match central finite differences") {
  // Property: for every node kind, d/dvar computed symbolically agrees
  // with a central finite difference at 100 fixed-seed random points to
  // 1e-6 (relative to max(1, |derivative|)).
  auto t1 = sin_table();
  auto t2 = gauss2_table();

  struct Case {
    Expr e;
    std::vector<std::string> vars;
    double lo, hi;
  };
  std::vector<Case> cases;
  // Polynomial in two variables.
  cases.push_back({add(sub(pow(var_x(), 3.0),
                           mul(constant(2.0), mul(var_x(), var_xi()))),
                       pow(var_xi(), 2.0)),
                   {"x", "xi"},
                   -2.0,
                   2.0});
  // exp/sin/cos composition over a safe denominator.
  cases.push_back({div(exp(mul(sin(var_x()), cos(var_xi()))),
                       add(constant(2.0), pow(var_x(), 2.0))),
                   {"x", "xi"},
                   -3.0,
                   3.0});
  // Japanese bracket via sqrt.
  cases.push_back(
      {sqrt(add(constant(1.0), pow(var_x(), 2.0))), {"x"}, -4.0, 4.0});
  // Fractional power of a positive base.
  cases.push_back({pow(add(constant(1.0), pow(var_x(), 2.0)), 2.5),
                   {"x"},
                   -2.0,
                   2.0});
  // Compactly supported cutoff times a polynomial; the sample box
  // straddles the support boundary.
  cases.push_back(
      {mul(bump(var_x(), 0.0, 1.0), pow(var_xi(), 2.0)),
       {"x", "xi"},
       -2.0,
       2.0});
  // Interpolation tables, 1D and 2D.
  cases.push_back({interp(t1, "x"), {"x"}, -2.5, 2.5});
  cases.push_back({interp(t2, "x", "xi"), {"x", "xi"}, -1.8, 1.8});

  std::mt19937 rng(20240817u);
  for (const Case& c : cases) {
    std::vector<Expr> grads;
    for (const auto& v : c.vars) grads.push_back(differentiate(c.e, v));
    std::uniform_real_distribution<double> dist(c.lo, c.hi);
    for (int trial = 0; trial < 100; ++trial) {
      Env env;
      for (const auto& v : c.vars) env[v] = cplx(dist(rng), 0.0);
      for (std::size_t k = 0; k < c.vars.size(); ++k) {
        cplx sym = eval(grads[k], env);
        cplx fd = fd_derivative(c.e, env, c.vars[k]);
        double scale = std::max(1.0, std::abs(sym));
        REQUIRE(std::abs(sym - fd) <= 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("second derivatives stay exact for polynomials") {
  // [DERIVED] d^2/dx^2 (x^4) = 12 x^2. Nested differentiation keeps
  // closure and sharp values.
  Expr e = pow(var_x(), 4.0);
  Expr d2 = differentiate(differentiate(e, "x"), "x");
  for (double x : {-1.3, 0.0, 0.4, 2.0}) {
    cplx got = eval(d2, {{"x", cplx(x, 0.0)}});
    CHECK(std::abs(got - cplx(12.0 * x * x, 0.0)) < 1e-12);
  }
}

TEST_CASE("substitution composes expressions") {
  // (x^2 + xi) with x -> z + 1 equals (z+1)^2 + xi.
  Expr e = add(pow(var_x(), 2.0), var_xi());
  Expr s = substitute(e, "x", add(variable("z"), constant(1.0)));
  Env env{{"z", cplx(0.7, 0.0)}, {"xi", cplx(-0.3, 0.0)}};
  cplx got = eval(s, env);
  CHECK(std::abs(got - cplx(1.7 * 1.7 - 0.3, 0.0)) < 1e-15);
  // The original tree is untouched (immutability).
  CHECK_THROWS(eval(e, env));
}

TEST_CASE("free variable collection") {
  Expr e = add(mul(var_x(), var_xi()), mul(variable("h"), var_x()));
  auto vars = free_variables(e);
  REQUIRE(vars.size() == 3);
  CHECK(vars[0] == "h");
  CHECK(vars[1] == "x");
  CHECK(vars[2] == "xi");
  CHECK(depends_on(e, "h"));
  CHECK_FALSE(depends_on(e, "theta"));
}

TEST_CASE("interpolation nodes track a known function") {
  auto t1 = sin_table();
  Expr f = interp(t1, "x");
  Expr df = differentiate(f, "x");
  Expr d2f = differentiate(df, "x");
  for (double x : {-2.7, -1.1, 0.0, 0.37, 1.9, 2.8}) {
    Env env{{"x", cplx(x, 0.0)}};
    CHECK(std::abs(eval(f, env) - cplx(std::sin(x), 0.0)) < 1e-8);
    CHECK(std::abs(eval(df, env) - cplx(std::cos(x), 0.0)) < 1e-6);
    CHECK(std::abs(eval(d2f, env) - cplx(-std::sin(x), 0.0)) < 1e-3);
  }

  auto t2 = gauss2_table();
  Expr g = interp(t2, "x", "xi");
  Expr gx = differentiate(g, "x");
  Expr gxi = differentiate(g, "xi");
  for (auto [x, y] : std::vector<std::pair<double, double>>{
           {0.0, 0.0}, {0.5, -0.8}, {-1.2, 1.4}}) {
    Env env{{"x", cplx(x, 0.0)}, {"xi", cplx(y, 0.0)}};
    double ref = std::exp(-(x * x + y * y) / 2.0);
    CHECK(std::abs(eval(g, env) - cplx(ref, 0.0)) < 1e-7);
    CHECK(std::abs(eval(gx, env) - cplx(-x * ref, 0.0)) < 1e-5);
    CHECK(std::abs(eval(gxi, env) - cplx(-y * ref, 0.0)) < 1e-5);
  }
  // Outside the table the zero policy applies.
  CHECK(eval(g, {{"x", cplx(50.0, 0.0)}, {"xi", cplx(0.0, 0.0)}}) ==
        cplx(0.0, 0.0));
}

TEST_CASE("compiled evaluation is identical to tree evaluation") {
  auto t1 = sin_table();
  Expr e = add(mul(bump(var_x(), 0.0, 1.5), exp(sin(var_xi()))),
               mul(interp(t1, "x"), pow(var_xi(), 2.0)));
  CompiledExpr ce(e, {"x", "xi"});
  std::mt19937 rng(7u);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<cplx> regs;
  for (int trial = 0; trial < 200; ++trial) {
    double x = dist(rng), xi = dist(rng);
    cplx tree = eval(e, {{"x", cplx(x, 0.0)}, {"xi", cplx(xi, 0.0)}});
    cplx vals[2] = {cplx(x, 0.0), cplx(xi, 0.0)};
    cplx fast = ce(vals, 2, regs);
    // Same operations in the same order: bitwise equal.
    REQUIRE(tree == fast);
  }
  CHECK_THROWS_AS(CompiledExpr(e, {"x"}), invalid_argument_error);
}

TEST_CASE("parser accepts the documented grammar") {
  Expr e = parse_expression("(mul (bump x 0 1) xi)");
  Env env{{"x", cplx(0.5, 0.0)}, {"xi", cplx(3.0, 0.0)}};
  double ref = bump_value(0.5, 0.0, 1.0) * 3.0;
  CHECK(std::abs(eval(e, env) - cplx(ref, 0.0)) < 1e-15);

  // n-ary add/mul fold left; neg is sugar; i is the imaginary unit.
  Expr f = parse_expression("(add 1 2 3 (neg x))");
  CHECK(std::abs(eval(f, {{"x", cplx(1.5, 0.0)}}) - cplx(4.5, 0.0)) < 1e-15);
  Expr g = parse_expression("(mul i i)");
  CHECK(std::abs(eval(g, {}) - cplx(-1.0, 0.0)) < 1e-15);
  Expr p = parse_expression("(pow (add 1 (mul x x)) 2.5)");
  CHECK(std::abs(eval(p, {{"x", cplx(2.0, 0.0)}}) -
                 cplx(std::pow(5.0, 2.5), 0.0)) < 1e-12);
  // Scientific notation and negative literals.
  Expr q = parse_expression("(mul -2.5e-1 x)");
  CHECK(std::abs(eval(q, {{"x", cplx(4.0, 0.0)}}) - cplx(-1.0, 0.0)) < 1e-15);
}

TEST_CASE("parser diagnostics name the offending token") {
  using Catch::Matchers::ContainsSubstring;
  CHECK_THROWS_WITH(parse_expression("(foo x)"), ContainsSubstring("foo"));
  CHECK_THROWS_WITH(parse_expression("(add x"),
                    ContainsSubstring("missing ')'"));
  CHECK_THROWS_WITH(parse_expression("(pow x y)"), ContainsSubstring("y"));
  CHECK_THROWS_WITH(parse_expression("(bump x 0 -1)"),
                    ContainsSubstring("radius"));
  CHECK_THROWS_WITH(parse_expression("x y"), ContainsSubstring("trailing"));
  CHECK_THROWS_WITH(parse_expression(")"), ContainsSubstring("')'"));
  CHECK_THROWS_WITH(parse_expression("(sub x)"),
                    ContainsSubstring("at least 2"));
  CHECK_THROWS_WITH(parse_expression("(sin x x)"),
                    ContainsSubstring("at most 1"));

  // Line/column tracking: error on line 2.
  try {
    parse_expression("(add x\n  (foo y))");
    FAIL("expected parse_error");
  } catch (const parse_error& pe) {
    CHECK(pe.line == 2);
    CHECK(pe.token == "foo");
  }
}

TEST_CASE("printer output reparses to the same function") {
  auto check_roundtrip = [](const Expr& e, const Env& env) {
    Expr back = parse_expression(to_string(e));
    CHECK(std::abs(eval(e, env) - eval(back, env)) < 1e-15);
  };
  Env env{{"x", cplx(0.3, 0.0)}, {"xi", cplx(-1.2, 0.0)}};
  check_roundtrip(add(pow(var_x(), 2.0), sin(var_xi())), env);
  check_roundtrip(mul(bump(var_x(), 0.25, 0.75), var_xi()), env);
  check_roundtrip(mul(constant(cplx(0.0, 1.0)), var_x()), env);
  check_roundtrip(div(constant(1.0), add(constant(2.0), cos(var_x()))), env);
}

TEST_CASE("coordinate name conventions") {
  CHECK(x_names(1) == std::vector<std::string>{"x"});
  CHECK(x_names(2) == (std::vector<std::string>{"x1", "x2"}));
  CHECK(xi_names(2) == (std::vector<std::string>{"xi1", "xi2"}));
  CHECK(theta_names(1) == std::vector<std::string>{"theta"});
  CHECK(eta_names(2) == (std::vector<std::string>{"eta1", "eta2"}));
}
