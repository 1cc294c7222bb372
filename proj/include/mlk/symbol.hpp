#pragma once

// Symbols a(x, xi; h) as expression trees, plus the calculus on them:
// phase-space derivatives, Poisson bracket, and the composition expansion
// for the standard (left) quantization. Variable naming follows the
// toolkit convention: x / xi in dimension one, x1 x2 / xi1 xi2 in
// dimension two, with the semi-classical parameter as the plain variable
// "h".

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "mlk/expr.hpp"

namespace mlk {

struct HSymbol {
  int dim;       // spatial dimension, 1 or 2
  Expr expr;     // over x-names(dim), xi-names(dim), and optionally h
  double order;  // informational growth order m (|a| bounded by <xi>^m)

  HSymbol(int dim, Expr expr, double order = 0.0)
      : dim(dim), expr(std::move(expr)), order(order) {
    if (dim != 1 && dim != 2)
      throw invalid_argument_error("symbol dimension must be 1 or 2");
    validate_names();
  }

 private:
  void validate_names() const {
    auto xs = x_names(static_cast<std::size_t>(dim));
    auto xis = xi_names(static_cast<std::size_t>(dim));
    for (const auto& v : free_variables(expr)) {
      bool ok = v == "h";
      for (const auto& n : xs) ok = ok || v == n;
      for (const auto& n : xis) ok = ok || v == n;
      if (!ok)
        throw invalid_argument_error("symbol uses unknown variable '" + v +
                                     "'");
    }
  }
};

// Environment for evaluating a symbol at a phase-space point.
inline Env symbol_env(int dim, const std::array<double, 2>& x,
                      const std::array<double, 2>& xi, double h) {
  Env env;
  auto xs = x_names(static_cast<std::size_t>(dim));
  auto xis = xi_names(static_cast<std::size_t>(dim));
  for (int d = 0; d < dim; ++d) {
    env[xs[static_cast<std::size_t>(d)]] =
        cplx(x[static_cast<std::size_t>(d)], 0.0);
    env[xis[static_cast<std::size_t>(d)]] =
        cplx(xi[static_cast<std::size_t>(d)], 0.0);
  }
  env["h"] = cplx(h, 0.0);
  return env;
}

inline Expr d_x(const HSymbol& a, int axis = 0) {
  return differentiate(a.expr,
                       x_names(static_cast<std::size_t>(a.dim))
                           [static_cast<std::size_t>(axis)]);
}

inline Expr d_xi(const HSymbol& a, int axis = 0) {
  return differentiate(a.expr,
                       xi_names(static_cast<std::size_t>(a.dim))
                           [static_cast<std::size_t>(axis)]);
}

// {a, b} = sum_d (d_xi_d a)(d_x_d b) - (d_x_d a)(d_xi_d b).
inline HSymbol poisson_bracket(const HSymbol& a, const HSymbol& b) {
  if (a.dim != b.dim)
    throw invalid_argument_error("poisson bracket: dimension mismatch");
  Expr acc = constant(0.0);
  for (int d = 0; d < a.dim; ++d)
    acc = add(acc, sub(mul(d_xi(a, d), d_x(b, d)), mul(d_x(a, d), d_xi(b, d))));
  return HSymbol(a.dim, acc, a.order + b.order - 1.0);
}

namespace detail {

inline Expr iterated_derivative(Expr e, const std::string& var, int times) {
  for (int k = 0; k < times; ++k) e = differentiate(e, var);
  return e;
}

inline double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= static_cast<double>(k);
  return f;
}

// (-i)^k without accumulating rounding.
inline cplx minus_i_power(int k) {
  switch (k & 3) {
    case 0:
      return cplx(1.0, 0.0);
    case 1:
      return cplx(0.0, -1.0);
    case 2:
      return cplx(-1.0, 0.0);
    default:
      return cplx(0.0, 1.0);
  }
}

}  // namespace detail

// Composition expansion for standard quantization, truncated at total
// derivative order J:
//   (a # b)(x, xi) = sum_{|alpha| <= J} (-i h)^{|alpha|} / alpha! *
//                    (d_xi^alpha a) (d_x^alpha b).
// Exact (all higher terms vanish) when a is polynomial in xi or b is
// polynomial in x of degree <= J.
inline HSymbol sharp(const HSymbol& a, const HSymbol& b, int max_order) {
  if (a.dim != b.dim)
    throw invalid_argument_error("composition: dimension mismatch");
  if (max_order < 0)
    throw invalid_argument_error("composition: negative expansion order");
  auto xs = x_names(static_cast<std::size_t>(a.dim));
  auto xis = xi_names(static_cast<std::size_t>(a.dim));
  Expr acc = constant(0.0);
  auto term = [&](int a1, int a2) {
    int total = a1 + a2;
    Expr da = detail::iterated_derivative(a.expr, xis[0], a1);
    Expr db = detail::iterated_derivative(b.expr, xs[0], a1);
    if (a.dim == 2) {
      da = detail::iterated_derivative(da, xis[1], a2);
      db = detail::iterated_derivative(db, xs[1], a2);
    }
    cplx coeff = detail::minus_i_power(total) /
                 (detail::factorial(a1) * detail::factorial(a2));
    Expr piece = mul(constant(coeff), mul(da, db));
    if (total > 0)
      piece = mul(pow(variable("h"), static_cast<double>(total)), piece);
    acc = add(acc, piece);
  };
  if (a.dim == 1) {
    for (int k = 0; k <= max_order; ++k) term(k, 0);
  } else {
    for (int a1 = 0; a1 <= max_order; ++a1)
      for (int a2 = 0; a1 + a2 <= max_order; ++a2) term(a1, a2);
  }
  return HSymbol(a.dim, acc, a.order + b.order);
}

// All partial derivatives of total order <= max_total, as expressions.
// Order of the returned list is deterministic: increasing total order,
// then lexicographic in the per-variable counts.
inline std::vector<Expr> phase_space_derivatives(const HSymbol& a,
                                                 int max_total) {
  std::vector<std::string> vars;
  for (const auto& n : x_names(static_cast<std::size_t>(a.dim)))
    vars.push_back(n);
  for (const auto& n : xi_names(static_cast<std::size_t>(a.dim)))
    vars.push_back(n);
  std::vector<Expr> out;
  std::vector<int> counts(vars.size(), 0);
  // Group by total order so the list is stable under max_total growth.
  for (int total = 0; total <= max_total; ++total) {
    std::function<void(std::size_t, int)> walk_exact = [&](std::size_t pos,
                                                           int remaining) {
      if (pos == vars.size()) {
        if (remaining != 0) return;
        Expr e = a.expr;
        for (std::size_t v = 0; v < vars.size(); ++v)
          e = detail::iterated_derivative(e, vars[v], counts[v]);
        out.push_back(e);
        return;
      }
      for (int c = 0; c <= remaining; ++c) {
        counts[pos] = c;
        walk_exact(pos + 1, remaining - c);
      }
      counts[pos] = 0;
    };
    walk_exact(0, total);
  }
  return out;
}

}  // namespace mlk
