// Quantization checks. Oracles: exact operator identities (Op(1) = id,
// Op(x) = multiplication, Op(xi) = (h/i) d/dx on closed-form states), a
// hand-expanded polynomial composition, a closed-form Gaussian multiplier,
// and hand-built decay laws.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "mlk/quantize.hpp"
#include "mlk/states.hpp"

using namespace mlk;

namespace {

SampledFunction unit_gaussian(const Grid& g, double h) {
  return gaussian_state(g, h, 1.0);
}

double max_abs_diff(const SampledFunction& a, const SampledFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

Expr sym_x() { return variable("x"); }
Expr sym_xi() { return variable("xi"); }

}  // namespace

TEST_CASE("quantized constant symbol is the identity") {
  Grid g = make_grid(-8.0, 8.0, 512);
  double h = 0.125;
  SampledFunction u = unit_gaussian(g, h);
  HSymbol one(1, constant(1.0));
  SampledFunction v = op_apply(one, u);
  CHECK(max_abs_diff(u, v) < 1e-12);

  SeparableSymbol one_sep(1, {SeparableTerm{constant(1.0), constant(1.0)}});
  SampledFunction w = op_apply(one_sep, u);
  CHECK(max_abs_diff(u, w) < 1e-12);
}

TEST_CASE("quantized position symbol multiplies by x") {
  Grid g = make_grid(-8.0, 8.0, 512);
  double h = 0.125;
  SampledFunction u = unit_gaussian(g, h);
  HSymbol a(1, sym_x());
  SampledFunction v = op_apply(a, u);
  for (std::int64_t i = 0; i < g.size(); ++i) {
    cplx want = cplx(g.axis(0).node(i), 0.0) * u.values[static_cast<std::size_t>(i)];
    REQUIRE(std::abs(v.values[static_cast<std::size_t>(i)] - want) < 1e-12);
  }
}

TEST_CASE("quantized momentum symbol differentiates") {
  // [DERIVED] Op(xi) e^{-x^2/2} = (h/i) d/dx e^{-x^2/2}
  //                            = i h x e^{-x^2/2}.
  Grid g = make_grid(-8.0, 8.0, 512);
  double h = 0.125;
  SampledFunction u = unit_gaussian(g, h);
  HSymbol a(1, sym_xi());
  SampledFunction v = op_apply(a, u);
  double worst = 0.0;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    double x = g.axis(0).node(i);
    cplx want = cplx(0.0, h * x) * cplx(std::exp(-x * x / 2.0), 0.0);
    worst = std::max(worst,
                     std::abs(v.values[static_cast<std::size_t>(i)] - want));
  }
  CHECK(worst < 1e-9);

  // Mixed symbol x.xi: left quantization puts x outside the derivative.
  HSymbol m(1, mul(sym_x(), sym_xi()));
  SampledFunction w = op_apply(m, u);
  worst = 0.0;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    double x = g.axis(0).node(i);
    cplx want = cplx(0.0, h * x * x) * cplx(std::exp(-x * x / 2.0), 0.0);
    worst = std::max(worst,
                     std::abs(w.values[static_cast<std::size_t>(i)] - want));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("gaussian frequency multiplier has a closed form") {
  // [DERIVED] For a(xi) = e^{-xi^2/2} and u = e^{-x^2/2},
  //   (Op(a) u)(x) = (1+h^2)^{-1/2} e^{-x^2 / (2 (1+h^2))}
  // by the Gaussian convolution integral.
  Grid g = make_grid(-8.0, 8.0, 512);
  double h = 0.125;
  SampledFunction u = unit_gaussian(g, h);
  SeparableSymbol a(
      1, {SeparableTerm{constant(1.0),
                        exp(mul(constant(-0.5), mul(sym_xi(), sym_xi())))}});
  SampledFunction v = op_apply(a, u);
  double worst = 0.0;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    double x = g.axis(0).node(i);
    double want = std::exp(-x * x / (2.0 * (1.0 + h * h))) /
                  std::sqrt(1.0 + h * h);
    worst = std::max(worst,
                     std::abs(v.values[static_cast<std::size_t>(i)] -
                              cplx(want, 0.0)));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("separable fast path matches the dense path") {
  Grid g = make_grid(-8.0, 8.0, 512);
  double h = 0.1;
  SampledFunction u = unit_gaussian(g, h);
  SeparableSymbol a(
      1, {SeparableTerm{bump(sym_x(), 0.0, 2.0), sin(sym_xi())},
          SeparableTerm{mul(sym_x(), sym_x()), cos(sym_xi())}});
  SampledFunction fast = op_apply(a, u);
  SampledFunction dense = op_apply(a.as_symbol(), u);
  CHECK(max_abs_diff(fast, dense) < 1e-10);
}

TEST_CASE("separable fast path matches the dense path in 2D") {
  Grid g = make_grid(-4.0, 4.0, 32, -4.0, 4.0, 32);
  double h = 0.25;
  std::vector<cplx> vals(static_cast<std::size_t>(g.size()));
  for (std::int64_t i = 0; i < g.size(); ++i) {
    auto p = g.node(i);
    vals[static_cast<std::size_t>(i)] =
        cplx(std::exp(-(p[0] * p[0] + p[1] * p[1]) / 2.0), 0.0);
  }
  SampledFunction u(g, h, std::move(vals));
  SeparableSymbol a(
      2, {SeparableTerm{mul(bump(variable("x1"), 0.0, 3.0),
                            bump(variable("x2"), 0.0, 3.0)),
                        mul(sin(variable("xi1")), cos(variable("xi2")))}});
  SampledFunction fast = op_apply(a, u);
  SampledFunction dense = op_apply(a.as_symbol(), u);
  CHECK(max_abs_diff(fast, dense) < 1e-10);
}

TEST_CASE("composition expansion has the hand-computed coefficients") {
  // [DERIVED] For a = xi^2, b = x^2 the expansion terminates at order 2:
  //   a # b = x^2 xi^2 - 4 i h x xi - 2 h^2.
  HSymbol a(1, mul(sym_xi(), sym_xi()));
  HSymbol b(1, mul(sym_x(), sym_x()));
  HSymbol ab = sharp(a, b, 2);
  Env env{{"x", cplx(1.3, 0.0)}, {"xi", cplx(0.7, 0.0)}, {"h", cplx(0.2, 0.0)}};
  cplx got = eval(ab.expr, env);
  cplx want = cplx(1.3 * 1.3 * 0.7 * 0.7 - 2.0 * 0.2 * 0.2,
                   -4.0 * 0.2 * 1.3 * 0.7);
  CHECK(std::abs(got - want) < 1e-14);

  // Operator-level check: Op(a)Op(b)u agrees with Op(a#b)u up to
  // discretization error because the expansion is exact here.
  Grid g = make_grid(-8.0, 8.0, 512);
  double h = 0.1;
  SampledFunction u = unit_gaussian(g, h);
  SampledFunction lhs = op_apply(a, op_apply(b, u));
  Expr sharp_h = substitute(ab.expr, "h", constant(h));
  SampledFunction rhs = op_apply(HSymbol(1, sharp_h), u);
  CHECK(max_abs_diff(lhs, rhs) < 1e-9);
}

TEST_CASE("commutator of position and momentum") {
  // [DERIVED] [Op(xi), Op(x)] = h/i as operators.
  Grid g = make_grid(-8.0, 8.0, 512);
  double h = 0.125;
  SampledFunction u = unit_gaussian(g, h);
  HSymbol xi_s(1, sym_xi());
  HSymbol x_s(1, sym_x());
  SampledFunction ab = op_apply(xi_s, op_apply(x_s, u));
  SampledFunction ba = op_apply(x_s, op_apply(xi_s, u));
  double worst = 0.0;
  for (std::size_t i = 0; i < ab.values.size(); ++i) {
    cplx comm = ab.values[i] - ba.values[i];
    cplx want = cplx(0.0, -h) * u.values[i];
    worst = std::max(worst, std::abs(comm - want));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("composition remainder decays at the truncation order") {
  // Property: || Op(a)Op(b)u - Op(a #_J b)u || = O(h^{J+1}) for smooth
  // bounded symbols. Slopes measured over h = 2^-3 .. 2^-8. The frequency
  // factor sin(xi) + cos(xi) has no vanishing derivative at xi = 0, where
  // the Gaussian test state concentrates, so every expansion order is
  // genuinely exercised.
  Grid g = make_grid(-8.0, 8.0, 512);
  Expr trig = add(sin(sym_xi()), cos(sym_xi()));
  HSymbol a(1, mul(bump(sym_x(), 0.0, 2.0), trig));
  HSymbol b = a;
  SeparableSymbol a_sep(1, {SeparableTerm{bump(sym_x(), 0.0, 2.0), trig}});
  SeparableSymbol b_sep = a_sep;
  std::vector<double> hs;
  for (int k = 3; k <= 8; ++k) hs.push_back(std::pow(2.0, -k));

  for (int J : {1, 2}) {
    HSymbol ab = sharp(a, b, J);
    std::vector<double> mags;
    for (double h : hs) {
      SampledFunction u = unit_gaussian(g, h);
      SampledFunction lhs = op_apply(a_sep, op_apply(b_sep, u));
      SampledFunction rhs =
          op_apply(HSymbol(1, substitute(ab.expr, "h", constant(h))), u);
      std::vector<cplx> diff(lhs.values.size());
      for (std::size_t i = 0; i < diff.size(); ++i)
        diff[i] = lhs.values[i] - rhs.values[i];
      mags.push_back(l2_norm(SampledFunction(g, h, std::move(diff))));
    }
    SweepRegression reg = decay_fit(hs, mags);
    INFO("J = " << J << " slope " << reg.slope << " r2 " << reg.r_squared);
    CHECK(reg.slope > static_cast<double>(J) + 0.8);
    CHECK(reg.slope < static_cast<double>(J) + 1.35);
    CHECK(reg.r_squared > 0.98);
  }
}

TEST_CASE("poisson bracket of the canonical pair") {
  HSymbol xi_s(1, sym_xi());
  HSymbol x_s(1, sym_x());
  HSymbol br = poisson_bracket(xi_s, x_s);
  Env env{{"x", cplx(2.0, 0.0)}, {"xi", cplx(-1.0, 0.0)}, {"h", cplx(0.1, 0.0)}};
  CHECK(std::abs(eval(br.expr, env) - cplx(1.0, 0.0)) < 1e-15);
  HSymbol br2 = poisson_bracket(x_s, xi_s);
  CHECK(std::abs(eval(br2.expr, env) - cplx(-1.0, 0.0)) < 1e-15);
}

TEST_CASE("kernel matrix agrees with operator application") {
  Grid g = make_grid(-4.0, 4.0, 512);
  double h = 1.0 / 64.0;
  HSymbol a(1, mul(bump(sym_x(), 0.0, 3.0), bump(sym_xi(), 0.0, 2.0)));
  std::vector<cplx> K = op_kernel_matrix(a, g, h);

  std::vector<cplx> vals(static_cast<std::size_t>(g.size()));
  for (std::int64_t i = 0; i < g.size(); ++i) {
    double x = g.axis(0).node(i);
    vals[static_cast<std::size_t>(i)] = cplx(std::exp(-x * x), 0.0);
  }
  SampledFunction u(g, h, std::move(vals));
  SampledFunction via_kernel = kernel_matrix_apply(K, u);
  SampledFunction direct = op_apply(a, u);
  CHECK(max_abs_diff(via_kernel, direct) < 1e-8);
}

TEST_CASE("kernel of a frequency multiplier has the parseval norm") {
  // [DERIVED] For a = c(xi), K(x, y) = k(x-y) with
  //   int |k(s)|^2 ds = (2 pi h)^{-1} int |c|^2 dxi,
  // so the double integral over the box is L times that.
  Grid g = make_grid(-4.0, 4.0, 512);
  double h = 1.0 / 64.0;
  HSymbol a(1, bump(sym_xi(), 0.0, 2.0));
  std::vector<cplx> K = op_kernel_matrix(a, g, h);
  const double dx = g.axis(0).spacing();
  double frob2 = 0.0;
  for (const cplx& v : K) frob2 += std::norm(v);
  frob2 *= dx * dx;

  // || c ||^2 by direct quadrature on a fine xi grid.
  double c2 = 0.0;
  const int nq = 200000;
  const double lo = -2.0, hi = 2.0;
  const double dq = (hi - lo) / nq;
  for (int i = 0; i < nq; ++i) {
    double xi = lo + (static_cast<double>(i) + 0.5) * dq;
    double b = bump_value(xi, 0.0, 2.0);
    c2 += b * b * dq;
  }
  double want = (g.axis(0).hi - g.axis(0).lo) * c2 / (2.0 * pi * h);
  CHECK(std::abs(frob2 - want) < 1e-4 * want);
}

TEST_CASE("symbol decay order at a phase-space point") {
  // Hand-built laws: an h-independent cutoff reads slope 0 at its center,
  // h^3 times it reads slope 3, and far from the support everything sits
  // below the floor.
  Expr prof = mul(bump(sym_x(), 0.0, 1.0), bump(sym_xi(), 0.0, 1.0));
  std::vector<double> hs = SweepSpec::default_1d().h_values();

  // The sample ball shrinks with h, so the measured maxima drift toward
  // the center values; slopes are clean to a couple percent.
  HSymbol flat(1, prof);
  SweepRegression r0 =
      symbol_decay_order(flat, {0.0, 0.0}, {0.0, 0.0}, 0.05, hs);
  CHECK_FALSE(r0.floor_dominated());
  CHECK(std::abs(r0.slope) < 0.02);

  HSymbol cubic(1, mul(pow(variable("h"), 3.0), prof));
  SweepRegression r3 =
      symbol_decay_order(cubic, {0.0, 0.0}, {0.0, 0.0}, 0.05, hs);
  CHECK(std::abs(r3.slope - 3.0) < 0.02);
  CHECK(r3.r_squared > 0.9999);

  SweepRegression far =
      symbol_decay_order(flat, {3.0, 0.0}, {3.0, 0.0}, 0.05, hs);
  CHECK(far.floor_dominated());
  CHECK(far.floor_hit);
  CHECK(std::isinf(far.slope));
}

TEST_CASE("microlocal equivalence of state families") {
  Grid g = make_grid(-8.0, 8.0, 16384);
  std::vector<double> hs;
  for (int k = 4; k <= 8; ++k) hs.push_back(std::pow(2.0, -k));

  HFamily u = HFamily::generate(g, hs, [](const Grid& gg, double h) {
    return coherent_state(gg, h, 0.0, 1.0);
  });
  HFamily v = HFamily::generate(g, hs, [](const Grid& gg, double h) {
    SampledFunction base = coherent_state(gg, h, 0.0, 1.0);
    SampledFunction extra = coherent_state(gg, h, 4.0, 1.0);
    for (std::size_t i = 0; i < base.values.size(); ++i)
      base.values[i] += h * h * extra.values[i];
    return base;
  });

  // Near the perturbation the difference is exactly h^2 times a unit-norm
  // state: slope 2.
  SweepRegression near =
      microlocal_equiv(u, v, {4.0, 0.0}, 1.0, {1.0, 0.0}, 1.0);
  CHECK_FALSE(near.floor_dominated());
  CHECK(near.slope > 1.8);
  CHECK(near.slope < 2.3);
  CHECK(near.r_squared > 0.98);

  // Far from it the cutoff sees only super-exponentially small tails.
  SweepRegression far =
      microlocal_equiv(u, v, {-4.0, 0.0}, 1.0, {1.0, 0.0}, 1.0);
  CHECK(far.floor_dominated());
  CHECK(far.floor_hit);

  // Identical families are equivalent everywhere.
  SweepRegression same =
      microlocal_equiv(u, u, {0.0, 0.0}, 1.0, {1.0, 0.0}, 1.0);
  CHECK(same.floor_dominated());
  CHECK(same.floor_hit);
}

TEST_CASE("symbol validation") {
  CHECK_THROWS_AS(HSymbol(1, variable("y")), invalid_argument_error);
  CHECK_THROWS_AS(HSymbol(3, variable("x")), invalid_argument_error);
  CHECK_NOTHROW(HSymbol(1, mul(variable("h"), mul(sym_x(), sym_xi()))));
  CHECK_NOTHROW(HSymbol(2, mul(variable("x1"), variable("xi2"))));

  Grid g = make_grid(-4.0, 4.0, 64);
  SampledFunction u = unit_gaussian(g, 0.25);
  HSymbol two_d(2, variable("x1"));
  CHECK_THROWS_AS(op_apply(two_d, u), invalid_argument_error);

  HSymbol a(1, sym_x());
  HSymbol b2(2, variable("x1"));
  CHECK_THROWS_AS(sharp(a, b2, 1), invalid_argument_error);
  CHECK_THROWS_AS(poisson_bracket(a, b2), invalid_argument_error);
}
