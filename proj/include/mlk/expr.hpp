#pragma once

// Immutable expression trees over complex scalars with exact symbolic
// differentiation. This is the common language for symbols a(x, xi), phase
// functions phi(x, theta), amplitudes, and h-dependent coefficients: every
// routine that needs a derivative of its input takes it from here rather
// than from finite differences.
//
// Supported node kinds: constants, named variables (the semi-classical
// parameter is the ordinary variable "h"), add/sub/mul/div, real powers,
// exp/sin/cos/sqrt, the standard compactly supported bump profile, and
// references into piecewise-cubic interpolation tables. The set is closed
// under differentiation, including the bump (whose derivative is the bump
// times a rational factor) and the tables (derivative bumps the lookup
// order).
//
// Multiplication is zero-absorbing: if either factor evaluates to exactly
// zero the product is zero, even if the other factor is infinite or NaN.
// This makes products with compactly supported cutoffs well defined on the
// whole grid; without it, the rational factor in a bump derivative would
// poison the region outside the support.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mlk/core.hpp"
#include "mlk/interp.hpp"

namespace mlk {

enum class ExprKind {
  constant,
  variable,
  add,
  sub,
  mul,
  div,
  pow,
  exp_fn,
  sin_fn,
  cos_fn,
  sqrt_fn,
  bump_fn,
  interp1,
  interp2,
};

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprKind kind;
  cplx value{0.0, 0.0};     // constant
  std::string name;         // variable
  double exponent = 0.0;    // pow
  double center = 0.0;      // bump
  double radius = 0.0;      // bump
  Expr a, b;                // children
  // Interpolation tables look up named variables directly (not child
  // expressions); differentiation just raises the derivative order.
  std::shared_ptr<const UniformTable1D> table1;
  std::shared_ptr<const UniformTable2D> table2;
  std::string tvar0, tvar1;
  int dorder0 = 0, dorder1 = 0;
};

inline bool is_const(const Expr& e) { return e->kind == ExprKind::constant; }
inline bool is_const(const Expr& e, cplx v) {
  return e->kind == ExprKind::constant && e->value == v;
}
inline bool is_zero(const Expr& e) { return is_const(e, cplx(0.0, 0.0)); }
inline bool is_one(const Expr& e) { return is_const(e, cplx(1.0, 0.0)); }

inline Expr constant(cplx v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::constant;
  n->value = v;
  return n;
}
inline Expr constant(double v) { return constant(cplx(v, 0.0)); }

inline Expr variable(const std::string& name) {
  if (name.empty())
    throw invalid_argument_error("variable name must be nonempty");
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::variable;
  n->name = name;
  return n;
}

inline Expr add(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value + b->value);
  if (is_zero(a)) return b;
  if (is_zero(b)) return a;
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::add;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

inline Expr mul(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value * b->value);
  if (is_zero(a) || is_zero(b)) return constant(0.0);
  if (is_one(a)) return b;
  if (is_one(b)) return a;
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::mul;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

inline Expr sub(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value - b->value);
  if (is_zero(b)) return a;
  if (is_zero(a)) return mul(constant(-1.0), std::move(b));
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::sub;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

inline Expr div(Expr a, Expr b) {
  if (is_zero(a)) return constant(0.0);
  if (is_one(b)) return a;
  if (is_const(a) && is_const(b) && b->value != cplx(0.0, 0.0))
    return constant(a->value / b->value);
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::div;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

inline Expr pow(Expr a, double exponent) {
  if (exponent == 0.0) return constant(1.0);
  if (exponent == 1.0) return a;
  if (is_const(a)) return constant(std::pow(a->value, exponent));
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::pow;
  n->exponent = exponent;
  n->a = std::move(a);
  return n;
}

namespace detail {
inline Expr unary(ExprKind k, Expr a) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->a = std::move(a);
  return n;
}
}  // namespace detail

inline Expr exp(Expr a) {
  if (is_const(a)) return constant(std::exp(a->value));
  return detail::unary(ExprKind::exp_fn, std::move(a));
}
inline Expr sin(Expr a) {
  if (is_const(a)) return constant(std::sin(a->value));
  return detail::unary(ExprKind::sin_fn, std::move(a));
}
inline Expr cos(Expr a) {
  if (is_const(a)) return constant(std::cos(a->value));
  return detail::unary(ExprKind::cos_fn, std::move(a));
}
inline Expr sqrt(Expr a) {
  if (is_const(a)) return constant(std::sqrt(a->value));
  return detail::unary(ExprKind::sqrt_fn, std::move(a));
}

// Standard smooth cutoff: exp(1 - r^2 / (r^2 - (t-c)^2)) for |t-c| < r,
// zero outside. The argument is read through its real part; all supported
// uses feed real-valued arguments.
inline Expr bump(Expr arg, double center, double radius) {
  if (!(radius > 0.0))
    throw invalid_argument_error("bump radius must be positive");
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::bump_fn;
  n->center = center;
  n->radius = radius;
  n->a = std::move(arg);
  return n;
}

inline Expr interp(std::shared_ptr<const UniformTable1D> table,
                   const std::string& var, int dorder = 0) {
  if (!table) throw invalid_argument_error("interp: null table");
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::interp1;
  n->table1 = std::move(table);
  n->tvar0 = var;
  n->dorder0 = dorder;
  return n;
}

inline Expr interp(std::shared_ptr<const UniformTable2D> table,
                   const std::string& var0, const std::string& var1,
                   int dorder0 = 0, int dorder1 = 0) {
  if (!table) throw invalid_argument_error("interp: null table");
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::interp2;
  n->table2 = std::move(table);
  n->tvar0 = var0;
  n->tvar1 = var1;
  n->dorder0 = dorder0;
  n->dorder1 = dorder1;
  return n;
}

// ---------------------------------------------------------------------------
// Evaluation

using Env = std::map<std::string, cplx>;

inline cplx eval(const Expr& e, const Env& env) {
  switch (e->kind) {
    case ExprKind::constant:
      return e->value;
    case ExprKind::variable: {
      auto it = env.find(e->name);
      if (it == env.end())
        throw invalid_argument_error("unbound variable '" + e->name + "'");
      return it->second;
    }
    case ExprKind::add:
      return eval(e->a, env) + eval(e->b, env);
    case ExprKind::sub:
      return eval(e->a, env) - eval(e->b, env);
    case ExprKind::mul: {
      cplx va = eval(e->a, env);
      if (va == cplx(0.0, 0.0)) return va;
      cplx vb = eval(e->b, env);
      if (vb == cplx(0.0, 0.0)) return vb;
      return va * vb;
    }
    case ExprKind::div:
      return eval(e->a, env) / eval(e->b, env);
    case ExprKind::pow:
      return std::pow(eval(e->a, env), e->exponent);
    case ExprKind::exp_fn:
      return std::exp(eval(e->a, env));
    case ExprKind::sin_fn:
      return std::sin(eval(e->a, env));
    case ExprKind::cos_fn:
      return std::cos(eval(e->a, env));
    case ExprKind::sqrt_fn:
      return std::sqrt(eval(e->a, env));
    case ExprKind::bump_fn: {
      double t = eval(e->a, env).real();
      return cplx(bump_value(t, e->center, e->radius), 0.0);
    }
    case ExprKind::interp1: {
      auto it = env.find(e->tvar0);
      if (it == env.end())
        throw invalid_argument_error("unbound variable '" + e->tvar0 + "'");
      return e->table1->eval(it->second.real(), e->dorder0);
    }
    case ExprKind::interp2: {
      Env::const_iterator i0 = env.find(e->tvar0);
      Env::const_iterator i1 = env.find(e->tvar1);
      if (i0 == env.end() || i1 == env.end())
        throw invalid_argument_error("unbound interp variable");
      return e->table2->eval(i0->second.real(), i1->second.real(), e->dorder0,
                             e->dorder1);
    }
  }
  throw error("corrupt expression node");
}

// ---------------------------------------------------------------------------
// Differentiation (exact, closed under the node set)

namespace detail {

// Expressions are immutable DAGs: repeated differentiation shares
// subtrees heavily, and re-deriving a shared node at every occurrence
// unfolds the DAG into its (exponentially larger) tree. Memoize on node
// identity so the work stays linear in the DAG size.
inline Expr differentiate_memo(const Expr& e, const std::string& var,
                               std::map<const ExprNode*, Expr>& memo) {
  auto hit = memo.find(e.get());
  if (hit != memo.end()) return hit->second;
  auto d = [&](const Expr& inner) {
    return differentiate_memo(inner, var, memo);
  };
  Expr out = [&]() -> Expr {
    switch (e->kind) {
      case ExprKind::constant:
        return constant(0.0);
      case ExprKind::variable:
        return constant(e->name == var ? 1.0 : 0.0);
      case ExprKind::add:
        return add(d(e->a), d(e->b));
      case ExprKind::sub:
        return sub(d(e->a), d(e->b));
      case ExprKind::mul:
        return add(mul(d(e->a), e->b), mul(e->a, d(e->b)));
      case ExprKind::div:
        return div(sub(mul(d(e->a), e->b), mul(e->a, d(e->b))),
                   mul(e->b, e->b));
      case ExprKind::pow:
        return mul(mul(constant(e->exponent), pow(e->a, e->exponent - 1.0)),
                   d(e->a));
      case ExprKind::exp_fn:
        return mul(exp(e->a), d(e->a));
      case ExprKind::sin_fn:
        return mul(cos(e->a), d(e->a));
      case ExprKind::cos_fn:
        return mul(mul(constant(-1.0), sin(e->a)), d(e->a));
      case ExprKind::sqrt_fn:
        return div(d(e->a), mul(constant(2.0), sqrt(e->a)));
      case ExprKind::bump_fn: {
        // d/dt bump(t) = bump(t) * (-2 r^2 (t-c)) / (r^2 - (t-c)^2)^2.
        // The zero-absorbing product kills the rational factor's pole at
        // the support boundary, where the bump itself vanishes to all
        // orders.
        Expr t = e->a;
        double r2 = e->radius * e->radius;
        Expr shifted = sub(t, constant(e->center));
        Expr denom = pow(sub(constant(r2), mul(shifted, shifted)), 2.0);
        Expr rational = div(mul(constant(-2.0 * r2), shifted), denom);
        Expr self = bump(t, e->center, e->radius);
        return mul(mul(self, rational), d(t));
      }
      case ExprKind::interp1: {
        if (e->tvar0 != var) return constant(0.0);
        return interp(e->table1, e->tvar0, e->dorder0 + 1);
      }
      case ExprKind::interp2: {
        if (e->tvar0 == var)
          return interp(e->table2, e->tvar0, e->tvar1, e->dorder0 + 1,
                        e->dorder1);
        if (e->tvar1 == var)
          return interp(e->table2, e->tvar0, e->tvar1, e->dorder0,
                        e->dorder1 + 1);
        return constant(0.0);
      }
    }
    throw error("corrupt expression node");
  }();
  memo.emplace(e.get(), out);
  return out;
}

}  // namespace detail

inline Expr differentiate(const Expr& e, const std::string& var) {
  std::map<const ExprNode*, Expr> memo;
  return detail::differentiate_memo(e, var, memo);
}

// ---------------------------------------------------------------------------
// Substitution (variable -> expression)

namespace detail {

// Memoized for the same reason as differentiation: substitution into a
// shared DAG must not unfold it.
inline Expr substitute_memo(const Expr& e, const std::string& var,
                            const Expr& repl,
                            std::map<const ExprNode*, Expr>& memo) {
  auto hit = memo.find(e.get());
  if (hit != memo.end()) return hit->second;
  auto s = [&](const Expr& inner) {
    return substitute_memo(inner, var, repl, memo);
  };
  Expr out = [&]() -> Expr {
    switch (e->kind) {
      case ExprKind::constant:
        return e;
      case ExprKind::variable:
        return e->name == var ? repl : e;
      case ExprKind::add:
        return add(s(e->a), s(e->b));
      case ExprKind::sub:
        return sub(s(e->a), s(e->b));
      case ExprKind::mul:
        return mul(s(e->a), s(e->b));
      case ExprKind::div:
        return div(s(e->a), s(e->b));
      case ExprKind::pow:
        return pow(s(e->a), e->exponent);
      case ExprKind::exp_fn:
        return exp(s(e->a));
      case ExprKind::sin_fn:
        return sin(s(e->a));
      case ExprKind::cos_fn:
        return cos(s(e->a));
      case ExprKind::sqrt_fn:
        return sqrt(s(e->a));
      case ExprKind::bump_fn:
        return bump(s(e->a), e->center, e->radius);
      case ExprKind::interp1: {
        if (e->tvar0 != var) return e;
        if (repl->kind != ExprKind::variable)
          throw invalid_argument_error(
              "interp variables can only be renamed, not substituted with "
              "expressions");
        return interp(e->table1, repl->name, e->dorder0);
      }
      case ExprKind::interp2: {
        bool hit0 = e->tvar0 == var, hit1 = e->tvar1 == var;
        if (!hit0 && !hit1) return e;
        if (repl->kind != ExprKind::variable)
          throw invalid_argument_error(
              "interp variables can only be renamed, not substituted with "
              "expressions");
        return interp(e->table2, hit0 ? repl->name : e->tvar0,
                      hit1 ? repl->name : e->tvar1, e->dorder0, e->dorder1);
      }
    }
    throw error("corrupt expression node");
  }();
  memo.emplace(e.get(), out);
  return out;
}

}  // namespace detail

inline Expr substitute(const Expr& e, const std::string& var,
                       const Expr& repl) {
  std::map<const ExprNode*, Expr> memo;
  return detail::substitute_memo(e, var, repl, memo);
}

// Collect free variable names (sorted, unique).
inline void collect_variables(const Expr& e, std::vector<std::string>& out) {
  switch (e->kind) {
    case ExprKind::variable:
      out.push_back(e->name);
      return;
    case ExprKind::interp1:
      out.push_back(e->tvar0);
      return;
    case ExprKind::interp2:
      out.push_back(e->tvar0);
      out.push_back(e->tvar1);
      return;
    default:
      break;
  }
  if (e->a) collect_variables(e->a, out);
  if (e->b) collect_variables(e->b, out);
}

inline std::vector<std::string> free_variables(const Expr& e) {
  std::vector<std::string> out;
  collect_variables(e, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline bool depends_on(const Expr& e, const std::string& var) {
  auto vars = free_variables(e);
  return std::find(vars.begin(), vars.end(), var) != vars.end();
}

// ---------------------------------------------------------------------------
// Printing (prefix form, matches the parser grammar)

inline std::string to_string(const Expr& e) {
  std::ostringstream os;
  auto num = [&os](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    os << buf;
  };
  switch (e->kind) {
    case ExprKind::constant: {
      if (e->value.imag() == 0.0) {
        num(e->value.real());
      } else if (e->value == cplx(0.0, 1.0)) {
        os << "i";
      } else {
        os << "(add ";
        num(e->value.real());
        os << " (mul ";
        num(e->value.imag());
        os << " i))";
      }
      return os.str();
    }
    case ExprKind::variable:
      return e->name;
    case ExprKind::add:
      return "(add " + to_string(e->a) + " " + to_string(e->b) + ")";
    case ExprKind::sub:
      return "(sub " + to_string(e->a) + " " + to_string(e->b) + ")";
    case ExprKind::mul:
      return "(mul " + to_string(e->a) + " " + to_string(e->b) + ")";
    case ExprKind::div:
      return "(div " + to_string(e->a) + " " + to_string(e->b) + ")";
    case ExprKind::pow: {
      os << "(pow " << to_string(e->a) << " ";
      num(e->exponent);
      os << ")";
      return os.str();
    }
    case ExprKind::exp_fn:
      return "(exp " + to_string(e->a) + ")";
    case ExprKind::sin_fn:
      return "(sin " + to_string(e->a) + ")";
    case ExprKind::cos_fn:
      return "(cos " + to_string(e->a) + ")";
    case ExprKind::sqrt_fn:
      return "(sqrt " + to_string(e->a) + ")";
    case ExprKind::bump_fn: {
      os << "(bump " << to_string(e->a) << " ";
      num(e->center);
      os << " ";
      num(e->radius);
      os << ")";
      return os.str();
    }
    case ExprKind::interp1:
      return "(interp1 " + e->tvar0 + ")";
    case ExprKind::interp2:
      return "(interp2 " + e->tvar0 + " " + e->tvar1 + ")";
  }
  throw error("corrupt expression node");
}

// ---------------------------------------------------------------------------
// Compiled form: postfix program over a register file. Same semantics as
// eval(), an order of magnitude faster inside grid loops.

class CompiledExpr {
 public:
  CompiledExpr(const Expr& e, std::vector<std::string> vars)
      : vars_(std::move(vars)) {
    root_reg_ = emit(e);
    scratch_.resize(next_reg_);
    emitted_.clear();  // only needed while compiling
  }

  const std::vector<std::string>& variables() const { return vars_; }

  cplx operator()(const std::vector<cplx>& values) const {
    if (values.size() != vars_.size())
      throw invalid_argument_error("compiled expression: wrong value count");
    std::vector<cplx> regs(scratch_.size());
    return run(values, regs);
  }

  // Re-entrant variant: caller supplies the register file (sized by
  // register_count()), avoiding per-point allocation in hot loops.
  cplx operator()(const cplx* values, std::size_t count,
                  std::vector<cplx>& regs) const {
    if (count != vars_.size())
      throw invalid_argument_error("compiled expression: wrong value count");
    if (regs.size() < scratch_.size()) regs.resize(scratch_.size());
    return run_raw(values, regs);
  }

  std::size_t register_count() const { return scratch_.size(); }

 private:
  struct Instr {
    ExprKind kind;
    int dst = 0, src_a = 0, src_b = 0;
    cplx value{0.0, 0.0};
    double exponent = 0.0;
    double center = 0.0, radius = 0.0;
    std::shared_ptr<const UniformTable1D> table1;
    std::shared_ptr<const UniformTable2D> table2;
    int var_index = 0, var_index_b = 0;
    int dorder0 = 0, dorder1 = 0;
  };

  int var_slot(const std::string& name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == name) return static_cast<int>(i);
    throw invalid_argument_error("compiled expression: unbound variable '" +
                                 name + "'");
  }

  int emit(const Expr& e) {
    // Shared subexpressions compile to one register; without this the
    // program unfolds the DAG into its tree.
    auto hit = emitted_.find(e.get());
    if (hit != emitted_.end()) return hit->second;
    Instr ins;
    ins.kind = e->kind;
    switch (e->kind) {
      case ExprKind::constant:
        ins.value = e->value;
        break;
      case ExprKind::variable:
        ins.var_index = var_slot(e->name);
        break;
      case ExprKind::add:
      case ExprKind::sub:
      case ExprKind::mul:
      case ExprKind::div:
        ins.src_a = emit(e->a);
        ins.src_b = emit(e->b);
        break;
      case ExprKind::pow:
        ins.src_a = emit(e->a);
        ins.exponent = e->exponent;
        break;
      case ExprKind::exp_fn:
      case ExprKind::sin_fn:
      case ExprKind::cos_fn:
      case ExprKind::sqrt_fn:
        ins.src_a = emit(e->a);
        break;
      case ExprKind::bump_fn:
        ins.src_a = emit(e->a);
        ins.center = e->center;
        ins.radius = e->radius;
        break;
      case ExprKind::interp1:
        ins.table1 = e->table1;
        ins.var_index = var_slot(e->tvar0);
        ins.dorder0 = e->dorder0;
        break;
      case ExprKind::interp2:
        ins.table2 = e->table2;
        ins.var_index = var_slot(e->tvar0);
        ins.var_index_b = var_slot(e->tvar1);
        ins.dorder0 = e->dorder0;
        ins.dorder1 = e->dorder1;
        break;
    }
    ins.dst = next_reg_++;
    program_.push_back(std::move(ins));
    emitted_.emplace(e.get(), program_.back().dst);
    return program_.back().dst;
  }

  cplx run(const std::vector<cplx>& values, std::vector<cplx>& regs) const {
    return run_raw(values.data(), regs);
  }

  cplx run_raw(const cplx* values, std::vector<cplx>& regs) const {
    for (const Instr& ins : program_) {
      switch (ins.kind) {
        case ExprKind::constant:
          regs[ins.dst] = ins.value;
          break;
        case ExprKind::variable:
          regs[ins.dst] = values[ins.var_index];
          break;
        case ExprKind::add:
          regs[ins.dst] = regs[ins.src_a] + regs[ins.src_b];
          break;
        case ExprKind::sub:
          regs[ins.dst] = regs[ins.src_a] - regs[ins.src_b];
          break;
        case ExprKind::mul: {
          const cplx& va = regs[ins.src_a];
          const cplx& vb = regs[ins.src_b];
          regs[ins.dst] = (va == cplx(0.0, 0.0) || vb == cplx(0.0, 0.0))
                              ? cplx(0.0, 0.0)
                              : va * vb;
          break;
        }
        case ExprKind::div:
          regs[ins.dst] = regs[ins.src_a] / regs[ins.src_b];
          break;
        case ExprKind::pow:
          regs[ins.dst] = std::pow(regs[ins.src_a], ins.exponent);
          break;
        case ExprKind::exp_fn:
          regs[ins.dst] = std::exp(regs[ins.src_a]);
          break;
        case ExprKind::sin_fn:
          regs[ins.dst] = std::sin(regs[ins.src_a]);
          break;
        case ExprKind::cos_fn:
          regs[ins.dst] = std::cos(regs[ins.src_a]);
          break;
        case ExprKind::sqrt_fn:
          regs[ins.dst] = std::sqrt(regs[ins.src_a]);
          break;
        case ExprKind::bump_fn:
          regs[ins.dst] = cplx(
              bump_value(regs[ins.src_a].real(), ins.center, ins.radius), 0.0);
          break;
        case ExprKind::interp1:
          regs[ins.dst] =
              ins.table1->eval(values[ins.var_index].real(), ins.dorder0);
          break;
        case ExprKind::interp2:
          regs[ins.dst] = ins.table2->eval(values[ins.var_index].real(),
                                           values[ins.var_index_b].real(),
                                           ins.dorder0, ins.dorder1);
          break;
      }
    }
    return regs[root_reg_];
  }

  std::vector<std::string> vars_;
  std::vector<Instr> program_;
  std::vector<cplx> scratch_;
  std::map<const ExprNode*, int> emitted_;
  int next_reg_ = 0;
  int root_reg_ = 0;
};

// ---------------------------------------------------------------------------
// Conventional variable-name sets used throughout the toolkit.

inline std::vector<std::string> coordinate_names(const std::string& stem,
                                                 std::size_t dim) {
  if (dim == 1) return {stem};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < dim; ++i)
    out.push_back(stem + std::to_string(i + 1));
  return out;
}

inline std::vector<std::string> x_names(std::size_t dim) {
  return coordinate_names("x", dim);
}
inline std::vector<std::string> xi_names(std::size_t dim) {
  return coordinate_names("xi", dim);
}
inline std::vector<std::string> theta_names(std::size_t dim) {
  return coordinate_names("theta", dim);
}
inline std::vector<std::string> z_names(std::size_t dim) {
  return coordinate_names("z", dim);
}
inline std::vector<std::string> eta_names(std::size_t dim) {
  return coordinate_names("eta", dim);
}

}  // namespace mlk
