#pragma once

// Oscillatory integrals I(a, phi) = int e^{i phi(., theta)/h} a(., theta)
// dtheta and the machinery around them: quadrature evaluation, critical
// points of a phase, the stationary-phase expansion, rank validation of
// phase presentations, and quadratic phase twists of h-families.
//
// The expansion convention, pinned numerically by the Fresnel and closed
// Gaussian fixtures in the test suite, is
//
//   I ~ (2 pi h)^{d/2} |det Phi''|^{-1/2} e^{i pi sgn(Phi'')/4}
//         e^{i Phi(cp)/h} sum_j h^j (L_j a)(cp),
//
//   L_j a = sum_{nu - mu = j, 2 nu >= 3 mu}
//             <Q D, D>^nu (g^mu a)(cp) / (i^j 2^nu mu! nu!),
//
// where Q is the inverse Hessian at the critical point, <Q D, D> =
// -sum_{pq} Q_pq d_p d_q, and g is the cubic remainder of the phase.
// Orders j <= 2 are supported with the total derivative order capped at
// six: L_0 and L_1 carry all their terms, L_2 keeps the derivative-order
// <= 6 part and is therefore exact only for phases whose cubic remainder
// vanishes (in particular for every quadratic phase, where the expansion
// is the full one).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mlk/core.hpp"
#include "mlk/expr.hpp"
#include "mlk/sweep.hpp"

namespace mlk {

// ---------------------------------------------------------------------------
// Phase presentations

// A real phase phi(x, theta) on an axis-aligned box. The first n box axes
// belong to the base variables x (named by x_names) and the last m to the
// integration variables theta (named by theta_names); either count may be
// zero but not both. Realness is spot-checked on a sample lattice at
// construction; derivatives come from the exact expression trees.
struct PhasePresentation {
  int n = 0;
  int m = 0;
  Expr phi;
  std::vector<double> lo, hi;  // box bounds, x axes first, then theta axes

  PhasePresentation(int n, int m, Expr phi_in, std::vector<double> lo_in,
                    std::vector<double> hi_in)
      : n(n), m(m), phi(std::move(phi_in)), lo(std::move(lo_in)),
        hi(std::move(hi_in)) {
    if (n < 0 || m < 0 || n + m < 1)
      throw invalid_argument_error(
          "phase presentation: need at least one variable (n + m >= 1)");
    const std::size_t d = static_cast<std::size_t>(n + m);
    if (lo.size() != d || hi.size() != d)
      throw invalid_argument_error(
          "phase presentation: box bounds must have n + m entries");
    for (std::size_t i = 0; i < d; ++i)
      if (!(lo[i] < hi[i]))
        throw invalid_argument_error(
            "phase presentation: box must have positive extent on every axis");
    const std::vector<std::string> names = variables();
    for (const auto& v : free_variables(phi)) {
      bool ok = false;
      for (const auto& nm : names) ok = ok || v == nm;
      if (!ok)
        throw invalid_argument_error("phase presentation: phi uses variable '" +
                                     v + "' outside its x/theta set");
    }
    check_real();
  }

  // x names followed by theta names, matching the box axis order.
  std::vector<std::string> variables() const {
    std::vector<std::string> names = x_names(static_cast<std::size_t>(n));
    for (const auto& t : theta_names(static_cast<std::size_t>(m)))
      names.push_back(t);
    return names;
  }

 private:
  void check_real() const {
    const std::vector<std::string> names = variables();
    const std::size_t d = names.size();
    // 5 points per axis is enough to catch an accidental complex constant
    // or a stray factor of i; this is a sanity gate, not a proof.
    std::vector<std::size_t> idx(d, 0);
    Env env;
    while (true) {
      for (std::size_t i = 0; i < d; ++i)
        env[names[i]] =
            cplx(lo[i] + (hi[i] - lo[i]) * static_cast<double>(idx[i]) / 4.0,
                 0.0);
      cplx v = eval(phi, env);
      if (std::abs(v.imag()) > 1e-9 * (1.0 + std::abs(v.real())))
        throw invalid_argument_error(
            "phase presentation: phi is not real on its box");
      std::size_t axis = 0;
      while (axis < d && ++idx[axis] == 5) idx[axis++] = 0;
      if (axis == d) break;
    }
  }
};

namespace detail {

// Max of |e| over a per_axis^d lattice on [lo, hi], variables bound in the
// order given. Used to bound oscillation frequencies and check supports.
inline double lattice_max_abs(const Expr& e,
                              const std::vector<std::string>& names,
                              const std::vector<double>& lo,
                              const std::vector<double>& hi, int per_axis) {
  const std::size_t d = names.size();
  CompiledExpr ce(e, names);
  std::vector<cplx> vals(d);
  std::vector<cplx> regs(ce.register_count());
  std::vector<int> idx(d, 0);
  double best = 0.0;
  while (true) {
    for (std::size_t i = 0; i < d; ++i)
      vals[i] = cplx(lo[i] + (hi[i] - lo[i]) * static_cast<double>(idx[i]) /
                                 static_cast<double>(per_axis - 1),
                     0.0);
    best = std::max(best, std::abs(ce(vals.data(), d, regs)));
    std::size_t axis = 0;
    while (axis < d && ++idx[axis] == per_axis) idx[axis++] = 0;
    if (axis == d) break;
  }
  return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Quadrature evaluation

// I(a, phi)(x; h). With no integration variables this is the pointwise
// product e^{i phi(x)/h} a(x). Otherwise a trapezoid rule over the theta
// box, with the spacing per axis tied to the largest phase gradient the
// same way grid sampling ties spacing to frequency: delta <= pi h / (4
// max |d_theta phi|). The amplitude must vanish on the theta boundary
// (compact support inside the box) so the trapezoid rule converges
// spectrally; that is checked, not assumed.
inline cplx oscint_eval(const Expr& a, const PhasePresentation& pp,
                        const std::vector<double>& x, double h) {
  if (!(h > 0.0))
    throw invalid_argument_error("oscillatory integral: h must be positive");
  if (x.size() != static_cast<std::size_t>(pp.n))
    throw invalid_argument_error(
        "oscillatory integral: evaluation point must have n entries");
  const std::vector<std::string> names = pp.variables();
  for (const auto& v : free_variables(a)) {
    bool ok = false;
    for (const auto& nm : names) ok = ok || v == nm;
    if (!ok)
      throw invalid_argument_error(
          "oscillatory integral: amplitude uses variable '" + v +
          "' outside the presentation");
  }

  if (pp.m == 0) {
    Env env;
    for (int i = 0; i < pp.n; ++i)
      env[names[static_cast<std::size_t>(i)]] =
          cplx(x[static_cast<std::size_t>(i)], 0.0);
    const double phase = eval(pp.phi, env).real();
    return std::polar(1.0, phase / h) * eval(a, env);
  }

  const std::size_t nn = static_cast<std::size_t>(pp.n);
  const std::size_t mm = static_cast<std::size_t>(pp.m);
  const std::vector<double> tlo(pp.lo.begin() + static_cast<std::ptrdiff_t>(nn),
                                pp.lo.end());
  const std::vector<double> thi(pp.hi.begin() + static_cast<std::ptrdiff_t>(nn),
                                pp.hi.end());

  // Frequency bound per theta axis, sampled on the given x slice.
  const int scan = pp.m == 1 ? 33 : 17;
  std::vector<std::string> tnames(names.begin() + static_cast<std::ptrdiff_t>(nn),
                                  names.end());
  std::vector<double> freq(mm, 0.0);
  for (std::size_t d = 0; d < mm; ++d) {
    Expr dphi = differentiate(pp.phi, tnames[d]);
    for (std::size_t i = 0; i < nn; ++i)
      dphi = substitute(dphi, names[i], constant(x[i]));
    freq[d] = detail::lattice_max_abs(dphi, tnames, tlo, thi, scan);
  }

  // The amplitude restricted to this x slice must vanish on the theta
  // boundary; otherwise the integral is not one of a compactly supported
  // amplitude and the quadrature result would be boundary-dominated.
  Expr a_slice = a;
  for (std::size_t i = 0; i < nn; ++i)
    a_slice = substitute(a_slice, names[i], constant(x[i]));
  for (std::size_t d = 0; d < mm; ++d) {
    for (double edge : {tlo[d], thi[d]}) {
      std::vector<double> flo = tlo, fhi = thi;
      flo[d] = fhi[d] = edge;
      const double worst =
          detail::lattice_max_abs(a_slice, tnames, flo, fhi, scan);
      if (worst > 1e-12)
        throw invalid_argument_error(
            "oscillatory integral: amplitude does not vanish on the theta "
            "boundary (|a| = " + std::to_string(worst) + " at theta" +
            std::to_string(d + 1) + " = " + std::to_string(edge) + ")");
    }
  }

  // Node counts from the spacing rule, with a floor so smooth factors are
  // still resolved when the phase barely oscillates.
  std::vector<std::int64_t> count(mm);
  std::vector<double> step(mm);
  std::int64_t total = 1;
  for (std::size_t d = 0; d < mm; ++d) {
    const double required = pi * h / (4.0 * std::max(freq[d], 1.0));
    count[d] = std::max<std::int64_t>(
        65, static_cast<std::int64_t>(
                std::ceil((thi[d] - tlo[d]) / required)) + 1);
    step[d] = (thi[d] - tlo[d]) / static_cast<double>(count[d] - 1);
    if (total > (std::int64_t{1} << 26) / count[d])
      throw error("oscillatory integral: theta quadrature at h = " +
                  std::to_string(h) + " needs more than " +
                  std::to_string(std::int64_t{1} << 26) + " nodes");
    total *= count[d];
  }

  CompiledExpr ca(a_slice, tnames);
  CompiledExpr cphi([&] {
    Expr p = pp.phi;
    for (std::size_t i = 0; i < nn; ++i)
      p = substitute(p, names[i], constant(x[i]));
    return p;
  }(), tnames);

  // Parallel over the leading axis; per-row partial sums are combined in
  // index order so the result does not depend on thread timing.
  const std::int64_t rows = count[0];
  const std::int64_t per_row = total / rows;
  std::vector<cplx> row_sum(static_cast<std::size_t>(rows), cplx(0.0, 0.0));
  parallel_for(static_cast<std::size_t>(rows), [&](std::size_t r) {
    std::vector<cplx> vals(mm);
    std::vector<cplx> regs_a(ca.register_count());
    std::vector<cplx> regs_p(cphi.register_count());
    const double w0 =
        (r == 0 || r + 1 == static_cast<std::size_t>(rows)) ? 0.5 : 1.0;
    vals[0] = cplx(tlo[0] + step[0] * static_cast<double>(r), 0.0);
    cplx acc(0.0, 0.0);
    std::vector<std::int64_t> idx(mm, 0);
    for (std::int64_t k = 0; k < per_row; ++k) {
      double w = w0;
      for (std::size_t d = 1; d < mm; ++d) {
        vals[d] = cplx(tlo[d] + step[d] * static_cast<double>(idx[d]), 0.0);
        if (idx[d] == 0 || idx[d] + 1 == count[d]) w *= 0.5;
      }
      const cplx av = ca(vals.data(), mm, regs_a);
      if (av != cplx(0.0, 0.0)) {
        const double phase = cphi(vals.data(), mm, regs_p).real();
        acc += w * av * std::polar(1.0, phase / h);
      }
      std::size_t axis = 1;
      while (axis < mm && ++idx[axis] == count[axis]) idx[axis++] = 0;
    }
    row_sum[r] = acc;
  });
  cplx sum(0.0, 0.0);
  for (const cplx& v : row_sum) sum += v;
  double vol = 1.0;
  for (std::size_t d = 0; d < mm; ++d) vol *= step[d];
  return sum * vol;
}

// ---------------------------------------------------------------------------
// Critical points

struct CriticalPointRecord {
  std::vector<double> location;
  Eigen::MatrixXd hessian;
  double det = 0.0;
  int signature = 0;  // positive minus negative eigenvalue count
  bool converged = false;
  bool accepted = false;  // converged and Hessian non-singular at scale
};

// Newton iteration on the exact gradient of Phi in the given variables,
// from a 5-per-axis seed lattice plus any caller seeds, all inside the
// box. Roots are deduplicated (radius 1e-6) and reported in lexicographic
// order. A root whose Hessian is singular relative to the Hessian scale
// of the box is returned but not accepted; the singularity threshold uses
// the box-wide Hessian scale because at a degenerate root the local norm
// vanishes together with the determinant and carries no scale of its own.
inline std::vector<CriticalPointRecord> find_critical_points(
    const Expr& Phi, const std::vector<std::string>& vars,
    const std::vector<double>& lo, const std::vector<double>& hi,
    const std::vector<std::vector<double>>& seeds = {}) {
  const std::size_t d = vars.size();
  if (d == 0)
    throw invalid_argument_error("critical point search: no variables");
  if (lo.size() != d || hi.size() != d)
    throw invalid_argument_error(
        "critical point search: box bounds must match the variable count");
  for (std::size_t i = 0; i < d; ++i)
    if (!(lo[i] < hi[i]))
      throw invalid_argument_error(
          "critical point search: box must have positive extent");
  for (const auto& v : free_variables(Phi)) {
    bool ok = false;
    for (const auto& nm : vars) ok = ok || v == nm;
    if (!ok)
      throw invalid_argument_error(
          "critical point search: phase depends on '" + v +
          "' which is not a search variable");
  }

  std::vector<Expr> grad(d);
  for (std::size_t i = 0; i < d; ++i) grad[i] = differentiate(Phi, vars[i]);
  std::vector<std::vector<Expr>> hess(d, std::vector<Expr>(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j)
      hess[i][j] = hess[j][i] = differentiate(grad[i], vars[j]);

  auto env_at = [&](const Eigen::VectorXd& p) {
    Env env;
    for (std::size_t i = 0; i < d; ++i)
      env[vars[i]] = cplx(p(static_cast<Eigen::Index>(i)), 0.0);
    return env;
  };
  auto grad_at = [&](const Eigen::VectorXd& p) {
    Env env = env_at(p);
    Eigen::VectorXd g(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
      g(static_cast<Eigen::Index>(i)) = eval(grad[i], env).real();
    return g;
  };
  auto hess_at = [&](const Eigen::VectorXd& p) {
    Env env = env_at(p);
    Eigen::MatrixXd H(static_cast<Eigen::Index>(d),
                      static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) {
        const double v = eval(hess[i][j], env).real();
        H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
      }
    return H;
  };

  // Seed lattice (box corners included) plus validated caller seeds.
  std::vector<Eigen::VectorXd> all_seeds;
  std::vector<int> idx(d, 0);
  while (true) {
    Eigen::VectorXd s(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
      s(static_cast<Eigen::Index>(i)) =
          lo[i] + (hi[i] - lo[i]) * static_cast<double>(idx[i]) / 4.0;
    all_seeds.push_back(s);
    std::size_t axis = 0;
    while (axis < d && ++idx[axis] == 5) idx[axis++] = 0;
    if (axis == d) break;
  }
  for (const auto& s : seeds) {
    if (s.size() != d)
      throw invalid_argument_error(
          "critical point search: seed dimension mismatch");
    Eigen::VectorXd v(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      if (s[i] < lo[i] || s[i] > hi[i])
        throw invalid_argument_error(
            "critical point search: seed outside the box");
      v(static_cast<Eigen::Index>(i)) = s[i];
    }
    all_seeds.push_back(v);
  }

  // Hessian scale of the box, for the singularity threshold.
  double hscale = 0.0;
  for (const auto& s : all_seeds) hscale = std::max(hscale, hess_at(s).norm());

  // Newton runs to stagnation rather than stopping at the first iterate
  // under tolerance: near a degenerate root the gradient dips under the
  // tolerance over a whole neighborhood, and stopping early would leave
  // several copies of the same root further apart than the deduplication
  // radius. Convergence is judged at the final iterate only.
  const double tol = 1e-10;
  std::vector<Eigen::VectorXd> roots;
  for (const auto& seed : all_seeds) {
    Eigen::VectorXd p = seed;
    bool escaped = false;
    for (int it = 0; it < 50; ++it) {
      Eigen::VectorXd g = grad_at(p);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(hess_at(p));
      if (!lu.isInvertible()) break;
      const Eigen::VectorXd step = lu.solve(g);
      p -= step;
      bool inside = true;
      for (std::size_t i = 0; i < d; ++i) {
        const double span = hi[i] - lo[i];
        const double c = p(static_cast<Eigen::Index>(i));
        inside = inside && c > lo[i] - 0.5 * span && c < hi[i] + 0.5 * span;
      }
      if (!inside) {
        escaped = true;
        break;
      }
      if (step.lpNorm<Eigen::Infinity>() <=
          1e-14 * (1.0 + p.lpNorm<Eigen::Infinity>()))
        break;
    }
    if (escaped || grad_at(p).lpNorm<Eigen::Infinity>() > tol) continue;
    bool in_box = true;
    for (std::size_t i = 0; i < d; ++i) {
      const double c = p(static_cast<Eigen::Index>(i));
      const double slack = 1e-8 * (hi[i] - lo[i]);
      in_box = in_box && c >= lo[i] - slack && c <= hi[i] + slack;
    }
    if (in_box) roots.push_back(p);
  }

  std::sort(roots.begin(), roots.end(),
            [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
              for (Eigen::Index i = 0; i < a.size(); ++i) {
                if (a(i) < b(i)) return true;
                if (a(i) > b(i)) return false;
              }
              return false;
            });
  std::vector<Eigen::VectorXd> unique_roots;
  for (const auto& r : roots) {
    bool dup = false;
    for (const auto& u : unique_roots) dup = dup || (r - u).norm() < 1e-6;
    if (!dup) unique_roots.push_back(r);
  }

  std::vector<CriticalPointRecord> records;
  for (const auto& r : unique_roots) {
    CriticalPointRecord rec;
    rec.location.resize(d);
    for (std::size_t i = 0; i < d; ++i)
      rec.location[i] = r(static_cast<Eigen::Index>(i));
    rec.hessian = hess_at(r);
    rec.det = rec.hessian.determinant();
    const double scale = std::max(hscale, rec.hessian.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rec.hessian);
    const double eps_eig = 1e-8 * scale;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      if (es.eigenvalues()(i) > eps_eig) ++rec.signature;
      if (es.eigenvalues()(i) < -eps_eig) --rec.signature;
    }
    rec.converged = true;
    rec.accepted =
        std::abs(rec.det) > 1e-8 * std::pow(scale, static_cast<double>(d));
    records.push_back(std::move(rec));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Stationary phase

struct StationaryPhaseExpansion {
  cplx value{0.0, 0.0};      // prefactor times the truncated series
  std::vector<cplx> terms;   // contribution of each order j = 0..K
};

// Expansion at an accepted critical point, orders j <= K <= 2. See the
// header comment for the convention and the derivative-order cap.
inline StationaryPhaseExpansion stationary_phase(
    const Expr& a, const Expr& Phi, const std::vector<std::string>& vars,
    const CriticalPointRecord& cp, double h, int K) {
  if (K < 0 || K > 2)
    throw invalid_argument_error(
        "stationary phase: expansion order must be 0, 1, or 2");
  if (!(h > 0.0))
    throw invalid_argument_error("stationary phase: h must be positive");
  if (!cp.accepted)
    throw invalid_argument_error(
        "stationary phase: critical point record is not accepted "
        "(singular Hessian)");
  const std::size_t d = vars.size();
  if (cp.location.size() != d)
    throw invalid_argument_error(
        "stationary phase: record dimension does not match variables");
  for (const Expr* e : {&a, &Phi})
    for (const auto& v : free_variables(*e)) {
      bool ok = false;
      for (const auto& nm : vars) ok = ok || v == nm;
      if (!ok)
        throw invalid_argument_error("stationary phase: expression uses '" +
                                     v + "' outside the variable set");
    }

  Env env;
  for (std::size_t i = 0; i < d; ++i) env[vars[i]] = cplx(cp.location[i], 0.0);
  const double phi0 = eval(Phi, env).real();
  const Eigen::MatrixXd Q = cp.hessian.inverse();

  // Cubic remainder g = Phi - Phi(cp) - (1/2) <H (y - cp), y - cp>.
  std::vector<Expr> shift(d);
  for (std::size_t i = 0; i < d; ++i)
    shift[i] = sub(variable(vars[i]), constant(cp.location[i]));
  Expr quad = constant(0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      quad = add(quad,
                 mul(constant(0.5 * cp.hessian(static_cast<Eigen::Index>(i),
                                               static_cast<Eigen::Index>(j))),
                     mul(shift[i], shift[j])));
  const Expr g = sub(sub(Phi, constant(phi0)), quad);

  // <Q D, D> f = -sum_pq Q_pq d_p d_q f, as a tree transform.
  auto apply_qdd = [&](const Expr& f) {
    Expr acc = constant(0.0);
    for (std::size_t p = 0; p < d; ++p) {
      Expr dp = differentiate(f, vars[p]);
      for (std::size_t q = 0; q < d; ++q)
        acc = add(acc, mul(constant(-Q(static_cast<Eigen::Index>(p),
                                       static_cast<Eigen::Index>(q))),
                           differentiate(dp, vars[q])));
    }
    return acc;
  };

  // (nu, mu) pairs with nu - mu = j, 2 nu >= 3 mu, and 2 nu <= 6.
  static const std::vector<std::pair<int, int>> plan[3] = {
      {{0, 0}}, {{1, 0}, {2, 1}, {3, 2}}, {{2, 0}, {3, 1}}};
  const cplx i_unit(0.0, 1.0);
  const cplx ipow[3] = {cplx(1.0, 0.0), i_unit, cplx(-1.0, 0.0)};
  auto factorial = [](int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return f;
  };

  const cplx prefactor =
      std::pow(2.0 * pi * h, 0.5 * static_cast<double>(d)) /
      std::sqrt(std::abs(cp.det)) *
      std::polar(1.0, 0.25 * pi * static_cast<double>(cp.signature)) *
      std::polar(1.0, phi0 / h);

  StationaryPhaseExpansion out;
  out.terms.resize(static_cast<std::size_t>(K) + 1);
  for (int j = 0; j <= K; ++j) {
    cplx lj(0.0, 0.0);
    for (const auto& [nu, mu] : plan[j]) {
      Expr f = a;
      for (int k = 0; k < mu; ++k) f = mul(g, f);
      for (int k = 0; k < nu; ++k) f = apply_qdd(f);
      const cplx denom = ipow[j] * std::pow(2.0, nu) * factorial(mu) *
                         factorial(nu);
      lj += eval(f, env) / denom;
    }
    out.terms[static_cast<std::size_t>(j)] =
        prefactor * std::pow(h, static_cast<double>(j)) * lj;
    out.value += out.terms[static_cast<std::size_t>(j)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Phase validation

struct PhaseRankCheck {
  std::vector<double> location;  // (x, theta)
  double min_singular_value = 0.0;
  bool pass = false;
};

struct PhaseValidationReport {
  std::vector<PhaseRankCheck> points;
  int passed = 0;
  int failed = 0;

  bool all_pass() const { return failed == 0 && passed > 0; }
};

// Samples the stationary set {phi'_theta = 0} along x slices and checks
// that the block row (phi''_theta-x | phi''_theta-theta) has full rank m
// there (smallest singular value above 1e-8). Full rank everywhere is
// what makes the stationary set a clean n-dimensional sheet; a failed
// point marks a degenerate presentation.
inline PhaseValidationReport validate_phase(const PhasePresentation& pp,
                                            int samples) {
  if (pp.m < 1)
    throw invalid_argument_error(
        "phase validation: needs at least one integration variable");
  if (samples < 2)
    throw invalid_argument_error(
        "phase validation: need at least two samples per x axis");
  const std::size_t nn = static_cast<std::size_t>(pp.n);
  const std::size_t mm = static_cast<std::size_t>(pp.m);
  const std::vector<std::string> names = pp.variables();
  const std::vector<std::string> tnames(
      names.begin() + static_cast<std::ptrdiff_t>(nn), names.end());
  const std::vector<double> tlo(pp.lo.begin() + static_cast<std::ptrdiff_t>(nn),
                                pp.lo.end());
  const std::vector<double> thi(pp.hi.begin() + static_cast<std::ptrdiff_t>(nn),
                                pp.hi.end());

  // Block row trees, evaluated per stationary point below.
  std::vector<std::vector<Expr>> block(
      mm, std::vector<Expr>(nn + mm));
  for (std::size_t r = 0; r < mm; ++r) {
    Expr dtheta = differentiate(pp.phi, tnames[r]);
    for (std::size_t c = 0; c < nn + mm; ++c)
      block[r][c] = differentiate(dtheta, names[c]);
  }

  PhaseValidationReport report;
  std::vector<int> idx(std::max<std::size_t>(nn, 1), 0);
  const std::int64_t slice_count = [&] {
    std::int64_t s = 1;
    for (std::size_t i = 0; i < nn; ++i) s *= samples;
    return s;
  }();
  for (std::int64_t slice = 0; slice < slice_count; ++slice) {
    std::vector<double> x(nn);
    std::int64_t rem = slice;
    for (std::size_t i = 0; i < nn; ++i) {
      x[i] = pp.lo[i] + (pp.hi[i] - pp.lo[i]) *
                            static_cast<double>(rem % samples) /
                            static_cast<double>(samples - 1);
      rem /= samples;
    }
    Expr slice_phi = pp.phi;
    for (std::size_t i = 0; i < nn; ++i)
      slice_phi = substitute(slice_phi, names[i], constant(x[i]));
    std::vector<CriticalPointRecord> roots =
        find_critical_points(slice_phi, tnames, tlo, thi);
    for (const auto& rec : roots) {
      PhaseRankCheck chk;
      chk.location = x;
      for (double t : rec.location) chk.location.push_back(t);
      Env env;
      for (std::size_t i = 0; i < nn + mm; ++i)
        env[names[i]] = cplx(chk.location[i], 0.0);
      Eigen::MatrixXd M(static_cast<Eigen::Index>(mm),
                        static_cast<Eigen::Index>(nn + mm));
      for (std::size_t r = 0; r < mm; ++r)
        for (std::size_t c = 0; c < nn + mm; ++c)
          M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
              eval(block[r][c], env).real();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
      chk.min_singular_value =
          svd.singularValues()(static_cast<Eigen::Index>(mm) - 1);
      chk.pass = chk.min_singular_value > 1e-8;
      if (chk.pass)
        ++report.passed;
      else
        ++report.failed;
      report.points.push_back(std::move(chk));
    }
  }
  if (report.points.empty())
    throw error("phase validation: no stationary points found in the box");
  return report;
}

// ---------------------------------------------------------------------------
// Quadratic twists

// Pointwise multiplication of every member by e^{i <A x, x> / (2h)} for a
// real symmetric A. The twist adds A x to the local frequency, so the
// grid must resolve that extra oscillation at every h in the family.
inline HFamily quadratic_twist(const HFamily& u, const Eigen::MatrixXd& A) {
  const int dim = u.grid().dim();
  if (A.rows() != dim || A.cols() != dim)
    throw invalid_argument_error(
        "quadratic twist: matrix dimension does not match the grid");
  if ((A - A.transpose()).norm() > 1e-12 * std::max(1.0, A.norm()))
    throw invalid_argument_error("quadratic twist: matrix must be symmetric");

  const Grid& g = u.grid();
  double xi_extra = 0.0;
  for (int r = 0; r < dim; ++r) {
    double row = 0.0;
    for (int c = 0; c < dim; ++c)
      row += std::abs(A(r, c)) *
             std::max(std::abs(g.axis(c).lo), std::abs(g.axis(c).hi));
    xi_extra = std::max(xi_extra, row);
  }

  std::vector<SampledFunction> members;
  members.reserve(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const SampledFunction& src = u.member(k);
    require_resolved(g, src.h, xi_extra, "quadratic twist");
    std::vector<cplx> values(src.values.size());
    if (dim == 1) {
      const double a00 = A(0, 0);
      for (std::int64_t i = 0; i < g.size(); ++i) {
        const double xx = g.axis(0).node(i);
        values[static_cast<std::size_t>(i)] =
            src.values[static_cast<std::size_t>(i)] *
            std::polar(1.0, 0.5 * a00 * xx * xx / src.h);
      }
    } else {
      const std::int64_t n1 = g.axis(1).n;
      for (std::int64_t i = 0; i < g.size(); ++i) {
        const double x0 = g.axis(0).node(i / n1);
        const double x1 = g.axis(1).node(i % n1);
        const double q = A(0, 0) * x0 * x0 + 2.0 * A(0, 1) * x0 * x1 +
                         A(1, 1) * x1 * x1;
        values[static_cast<std::size_t>(i)] =
            src.values[static_cast<std::size_t>(i)] *
            std::polar(1.0, 0.5 * q / src.h);
      }
    }
    members.emplace_back(g, src.h, std::move(values));
  }
  return HFamily(g, u.h_values(), std::move(members));
}

// lambda I with lambda = 1 + spectral radius(B): for symmetric B every
// eigenvalue of B + lambda I is then at least 1, so det(B + lambda I)
// cannot vanish.
inline Eigen::MatrixXd choose_twist(const Eigen::MatrixXd& B) {
  if (B.rows() != B.cols())
    throw invalid_argument_error("choose_twist: matrix must be square");
  if ((B - B.transpose()).norm() > 1e-12 * std::max(1.0, B.norm()))
    throw invalid_argument_error("choose_twist: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
  return (1.0 + radius) *
         Eigen::MatrixXd::Identity(B.rows(), B.cols());
}

}  // namespace mlk
