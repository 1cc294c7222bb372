#pragma once

// Standard (left) quantization on the sampled-function substrate:
//
//   (Op(a) u)(x) = (2 pi h)^{-n} int e^{i x.xi / h} a(x, xi) (F_h u)(xi) dxi
//
// with the xi integral discretized over the dual grid. Two paths:
//
//   * op_apply(HSymbol, u): dense double loop over grid x dual grid. Exact
//     for any symbol, cost O(N^2); intended for grids up to a few thousand
//     points per axis in 1D and small 2D grids.
//   * op_apply(SeparableSymbol, u): for a = sum_j f_j(x) g_j(xi), each
//     term is one multiplier sandwich f_j . isft(g_j . sft(u)), cost
//     O(J N log N). This is what the h-sweep drivers use.
//
// Both paths share the convention that a may depend on h through the
// variable "h".

#include <array>
#include <vector>

#include "mlk/symbol.hpp"
#include "mlk/sweep.hpp"
#include "mlk/transform.hpp"

namespace mlk {

inline SampledFunction op_apply(const HSymbol& a, const SampledFunction& u) {
  if (a.dim != u.grid.dim())
    throw invalid_argument_error("op_apply: symbol/grid dimension mismatch");
  const Grid& g = u.grid;
  const double h = u.h;
  SampledFunction spec = sft(u);
  const Grid& dg = spec.grid;

  // Quadrature weight (2 pi h)^{-n} * prod dxi.
  double weight = 1.0;
  for (int d = 0; d < g.dim(); ++d)
    weight *= dg.axis(d).spacing() / (2.0 * pi * h);

  std::vector<std::string> vars;
  for (const auto& n : x_names(static_cast<std::size_t>(a.dim)))
    vars.push_back(n);
  for (const auto& n : xi_names(static_cast<std::size_t>(a.dim)))
    vars.push_back(n);
  vars.push_back("h");
  CompiledExpr ce(a.expr, vars);

  const std::int64_t nx = g.size();
  const std::int64_t nxi = dg.size();
  std::vector<cplx> out(static_cast<std::size_t>(nx));

  parallel_for(static_cast<std::size_t>(nx), [&](std::size_t i) {
    std::vector<cplx> regs(ce.register_count());
    std::array<double, 2> x = g.node(static_cast<std::int64_t>(i));
    cplx vals[5];
    for (int d = 0; d < a.dim; ++d) vals[d] = cplx(x[static_cast<std::size_t>(d)], 0.0);
    vals[2 * a.dim] = cplx(h, 0.0);
    cplx acc(0.0, 0.0);
    for (std::int64_t k = 0; k < nxi; ++k) {
      std::array<double, 2> xi = dg.node(k);
      double dot = 0.0;
      for (int d = 0; d < a.dim; ++d)
        dot += x[static_cast<std::size_t>(d)] * xi[static_cast<std::size_t>(d)];
      for (int d = 0; d < a.dim; ++d)
        vals[a.dim + d] = cplx(xi[static_cast<std::size_t>(d)], 0.0);
      cplx sym = ce(vals, static_cast<std::size_t>(2 * a.dim + 1), regs);
      if (sym == cplx(0.0, 0.0)) continue;
      double ang = dot / h;
      acc += cplx(std::cos(ang), std::sin(ang)) * sym *
             spec.values[static_cast<std::size_t>(k)];
    }
    out[i] = acc * weight;
  });
  return SampledFunction(g, h, std::move(out));
}

// Symbols of the form sum_j f_j(x) g_j(xi), applied through FFTs.
struct SeparableTerm {
  Expr fx;   // over x-names and h
  Expr gxi;  // over xi-names and h
};

struct SeparableSymbol {
  int dim;
  std::vector<SeparableTerm> terms;

  SeparableSymbol(int dim, std::vector<SeparableTerm> terms)
      : dim(dim), terms(std::move(terms)) {
    if (dim != 1 && dim != 2)
      throw invalid_argument_error("symbol dimension must be 1 or 2");
    if (this->terms.empty())
      throw invalid_argument_error("separable symbol needs at least one term");
  }

  // The same function as a plain symbol (for dense cross-checks).
  HSymbol as_symbol() const {
    Expr acc = constant(0.0);
    for (const auto& t : terms) acc = add(acc, mul(t.fx, t.gxi));
    return HSymbol(dim, acc);
  }
};

namespace detail {

// Evaluate an expression over all nodes of a grid, with variables drawn
// from `names` plus h.
inline std::vector<cplx> eval_on_grid(const Expr& e,
                                      const std::vector<std::string>& names,
                                      const Grid& g, double h) {
  std::vector<std::string> vars = names;
  vars.push_back("h");
  CompiledExpr ce(e, vars);
  std::vector<cplx> out(static_cast<std::size_t>(g.size()));
  parallel_for(static_cast<std::size_t>(g.size()), [&](std::size_t i) {
    std::vector<cplx> regs(ce.register_count());
    std::array<double, 2> p = g.node(static_cast<std::int64_t>(i));
    cplx vals[3];
    for (int d = 0; d < g.dim(); ++d)
      vals[d] = cplx(p[static_cast<std::size_t>(d)], 0.0);
    vals[g.dim()] = cplx(h, 0.0);
    out[i] = ce(vals, static_cast<std::size_t>(g.dim() + 1), regs);
  });
  return out;
}

}  // namespace detail

inline SampledFunction op_apply(const SeparableSymbol& a,
                                const SampledFunction& u) {
  if (a.dim != u.grid.dim())
    throw invalid_argument_error("op_apply: symbol/grid dimension mismatch");
  const Grid& g = u.grid;
  const double h = u.h;
  SampledFunction spec = sft(u);
  auto xin = xi_names(static_cast<std::size_t>(a.dim));
  auto xn = x_names(static_cast<std::size_t>(a.dim));

  std::vector<cplx> acc(static_cast<std::size_t>(g.size()), cplx(0.0, 0.0));
  for (const auto& term : a.terms) {
    std::vector<cplx> gvals = detail::eval_on_grid(term.gxi, xin, spec.grid, h);
    std::vector<cplx> scaled(spec.values.size());
    for (std::size_t k = 0; k < scaled.size(); ++k)
      scaled[k] = gvals[k] * spec.values[k];
    SampledFunction filtered =
        isft(SampledFunction(spec.grid, h, std::move(scaled)), g);
    std::vector<cplx> fvals = detail::eval_on_grid(term.fx, xn, g, h);
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc[i] += fvals[i] * filtered.values[i];
  }
  return SampledFunction(g, h, std::move(acc));
}

// Smooth phase-space cutoff around (x0, xi0): bump(x) bump(xi) as a
// separable symbol (product over axes in 2D).
inline SeparableSymbol phase_space_cutoff(int dim,
                                          const std::array<double, 2>& x0,
                                          double rx,
                                          const std::array<double, 2>& xi0,
                                          double rxi) {
  auto xn = x_names(static_cast<std::size_t>(dim));
  auto xin = xi_names(static_cast<std::size_t>(dim));
  Expr fx = bump(variable(xn[0]), x0[0], rx);
  Expr gxi = bump(variable(xin[0]), xi0[0], rxi);
  if (dim == 2) {
    fx = mul(fx, bump(variable(xn[1]), x0[1], rx));
    gxi = mul(gxi, bump(variable(xin[1]), xi0[1], rxi));
  }
  return SeparableSymbol(dim, {SeparableTerm{fx, gxi}});
}

// Schwartz kernel on the grid, 1D symbols only: row-major N x N matrix
// K[i*N + j] = K(x_i, y_j) with the convention
//   (Op(a) u)(x_i) = sum_j K(x_i, y_j) u(y_j) dy.
// Computed per x row as the discrete xi integral
//   K(x, y) = (2 pi h)^{-1} sum_k e^{i (x - y) xi_k / h} a(x, xi_k) dxi.
inline std::vector<cplx> op_kernel_matrix(const HSymbol& a, const Grid& g,
                                          double h) {
  if (a.dim != 1 || g.dim() != 1)
    throw invalid_argument_error("op_kernel_matrix: 1D only");
  Grid dg = dual_grid(g, h);
  const std::int64_t n = g.size();
  const std::int64_t nk = dg.size();
  const double dxi = dg.axis(0).spacing();
  const double weight = dxi / (2.0 * pi * h);

  std::vector<std::string> vars{"x", "xi", "h"};
  CompiledExpr ce(a.expr, vars);

  std::vector<cplx> K(static_cast<std::size_t>(n * n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    std::vector<cplx> regs(ce.register_count());
    const double x = g.axis(0).node(static_cast<std::int64_t>(i));
    cplx vals[3] = {cplx(x, 0.0), cplx(0.0, 0.0), cplx(h, 0.0)};
    // Symbol row over xi.
    std::vector<cplx> arow(static_cast<std::size_t>(nk));
    for (std::int64_t k = 0; k < nk; ++k) {
      vals[1] = cplx(dg.axis(0).node(k), 0.0);
      arow[static_cast<std::size_t>(k)] = ce(vals, 3, regs);
    }
    for (std::int64_t j = 0; j < n; ++j) {
      const double s = x - g.axis(0).node(j);
      // e^{i s xi_k / h} over the xi row via rotation recurrence.
      const double theta = s * dxi / h;
      const double base = s * dg.axis(0).node(0) / h;
      cplx rot(std::cos(base), std::sin(base));
      const cplx step(std::cos(theta), std::sin(theta));
      cplx acc(0.0, 0.0);
      for (std::int64_t k = 0; k < nk; ++k) {
        if ((k & 63) == 0) {
          double ang = base + theta * static_cast<double>(k);
          rot = cplx(std::cos(ang), std::sin(ang));
        }
        acc += rot * arow[static_cast<std::size_t>(k)];
        rot *= step;
      }
      K[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] =
          acc * weight;
    }
  });
  return K;
}

// Apply a kernel matrix produced by op_kernel_matrix.
inline SampledFunction kernel_matrix_apply(const std::vector<cplx>& K,
                                           const SampledFunction& u) {
  const std::int64_t n = u.grid.size();
  if (static_cast<std::int64_t>(K.size()) != n * n)
    throw invalid_argument_error("kernel matrix size mismatch");
  const double dy = u.grid.axis(0).spacing();
  std::vector<cplx> out(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    cplx acc(0.0, 0.0);
    for (std::int64_t j = 0; j < n; ++j)
      acc += K[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] *
             u.values[static_cast<std::size_t>(j)];
    out[i] = acc * dy;
  });
  return SampledFunction(u.grid, u.h, std::move(out));
}

// Decay order of a symbol family near a phase-space point: for each h the
// maximum magnitude of all derivatives of total order <= 2, sampled on a
// ball around the point that shrinks proportionally with h; then a
// log-log regression over the sweep. "Rapidly vanishing at the point"
// reads as a steep slope or a floor hit.
inline SweepRegression symbol_decay_order(
    const HSymbol& a, const std::array<double, 2>& x0,
    const std::array<double, 2>& xi0, double radius,
    const std::vector<double>& h_values,
    double floor = default_magnitude_floor) {
  if (h_values.empty())
    throw invalid_argument_error("symbol decay: empty sweep");
  std::vector<Expr> derivs = phase_space_derivatives(a, 2);
  std::vector<double> mags;
  mags.reserve(h_values.size());
  for (double h : h_values) {
    const double r = radius * h / h_values.front();
    const double offsets[3] = {-r, 0.0, r};
    double best = 0.0;
    for (const Expr& e : derivs) {
      for (double ox : offsets) {
        for (double oxi : offsets) {
          std::array<double, 2> x = x0, xi = xi0;
          x[0] += ox;
          xi[0] += oxi;
          if (a.dim == 2) {
            x[1] += ox;
            xi[1] += oxi;
          }
          Env env = symbol_env(a.dim, x, xi, h);
          best = std::max(best, std::abs(eval(e, env)));
        }
      }
    }
    mags.push_back(best);
  }
  return detail::fit_decay_allow_floor(h_values, mags, floor);
}

// L^2 magnitude of a phase-space cutoff applied to the difference of two
// families, regressed over the sweep. A steep slope (or floor hit) means
// the families agree microlocally near the cutoff center.
inline SweepRegression microlocal_equiv(const HFamily& u, const HFamily& v,
                                        const std::array<double, 2>& x0,
                                        double rx,
                                        const std::array<double, 2>& xi0,
                                        double rxi,
                                        double floor =
                                            default_magnitude_floor) {
  if (u.grid() != v.grid())
    throw invalid_argument_error("microlocal_equiv: families share a grid");
  if (u.h_values() != v.h_values())
    throw invalid_argument_error("microlocal_equiv: families share h values");
  SeparableSymbol cutoff =
      phase_space_cutoff(u.grid().dim(), x0, rx, xi0, rxi);
  std::vector<double> mags;
  for (std::size_t i = 0; i < u.h_values().size(); ++i) {
    const SampledFunction& uu = u.member(i);
    const SampledFunction& vv = v.member(i);
    std::vector<cplx> diff(uu.values.size());
    for (std::size_t k = 0; k < diff.size(); ++k)
      diff[k] = uu.values[k] - vv.values[k];
    SampledFunction w(u.grid(), u.h_values()[i], std::move(diff));
    mags.push_back(l2_norm(op_apply(cutoff, w)));
  }
  return detail::fit_decay_allow_floor(u.h_values(), mags, floor);
}

}  // namespace mlk
