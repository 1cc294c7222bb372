#pragma once

// Conjugation tests for oscillatory-kernel operators: how well does
// A F = F B hold when B's symbol is transported along the canonical
// relation of F's phase?
//
// The relation of a phase phi(x, z, theta) is the set
//   { (x, phi'_x; z, -phi'_z) : phi'_theta = 0 },
// the sign on the z side making it the graph of a map kappa from
// (z, eta) to (x, xi) when the second projection is invertible. The
// leading transported symbol is
//   b0(z, eta) = i^{n1 - n2} a0(kappa(z, eta)),
// and with B = Op(b0) the residual (A F - F B) v drops by one power of h
// against A F v. One more power comes from the next corrector b1, which
// solves the subleading stationary-phase balance of the two kernel
// compositions: writing u0, u1 for the amplitude coefficients of F and
// L^l_1, L^r_1 for the order-one stationary-phase operators of the two
// composition phases (Hessians [[phi''_xx, -1], [-1, 0]] on the left and
// [[phi''_zz, 1], [1, 0]] on the right),
//   b1 u0 = L^l_0(a0 u1) + L^l_1(a0 u0) - L^r_0(u1 b0) - L^r_1(u0 b0)
// evaluated on the relation. The operators are realized literally
// through the stationary-phase expansion at hand-assembled critical
// point records, so the same machinery that proves the expansion also
// produces the corrector.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlk/fio.hpp"
#include "mlk/states.hpp"

namespace mlk {

// One point of the sampled relation: (x, xi) upstream, (z, eta)
// downstream, and the (x, z, theta) source that generated it.
struct RelationSample {
  double x = 0.0;
  double xi = 0.0;
  double z = 0.0;
  double eta = 0.0;
  std::vector<double> source;
};

struct RelationOptions {
  int cloud_resolution = 41;  // stationary-set scan per base axis
  int table_nodes = 97;       // section lattice per (z, eta) axis
  double margin = 0.0;        // fractional widening of the chart window
};

// Sampled canonical relation of a phase with one-dimensional factors,
// with the section kappa tabulated over the (z, eta) bounding box of the
// samples. Construction solves (phi'_theta = 0, -phi'_z = eta) for
// (x, theta) at every table node by Newton iteration seeded from the
// nearest sample, verifies the second projection is an immersion there
// (smallest singular value of the defining Jacobian), and checks that
// the tabulated section inverts the second projection on the samples.
struct CanonicalRelation {
  int n1 = 1;
  int n2 = 1;
  PhasePresentation phase;
  std::vector<RelationSample> samples;

  // Section lattice geometry, row-major values node_*[iz * ne + ie].
  double zlo = 0.0, dz = 0.0;
  double elo = 0.0, de = 0.0;
  int nz = 0, ne = 0;
  std::vector<double> node_x, node_xi;

  std::shared_ptr<const UniformTable2D> kappa_x, kappa_xi;
  double section_error = 0.0;      // worst |kappa(pi2 s) - pi1 s| on samples
  double min_projection_sv = 0.0;  // immersion margin over the lattice

  CanonicalRelation(int n1_in, int n2_in, PhasePresentation phase_in)
      : n1(n1_in), n2(n2_in), phase(std::move(phase_in)) {}

  double zhi() const { return zlo + dz * static_cast<double>(nz - 1); }
  double ehi() const { return elo + de * static_cast<double>(ne - 1); }

  bool in_window(double z, double eta) const {
    return z >= zlo && z <= zhi() && eta >= elo && eta <= ehi();
  }

  // kappa(z, eta) = (x, xi), interpolated from the section tables.
  std::array<double, 2> kappa(double z, double eta) const {
    if (!in_window(z, eta))
      throw error("canonical relation: point (z, eta) = (" +
                  std::to_string(z) + ", " + std::to_string(eta) +
                  ") lies outside the section chart");
    return {kappa_x->eval(z, eta).real(), kappa_xi->eval(z, eta).real()};
  }
};

inline CanonicalRelation canonical_relation(const PhasePresentation& pp,
                                            int n1, int n2,
                                            const RelationOptions& opts = {}) {
  if (n1 != 1 || n2 != 1)
    throw invalid_argument_error(
        "canonical relation: factors must be one-dimensional");
  if (pp.n != n1 + n2)
    throw invalid_argument_error(
        "canonical relation: factor dimensions must sum to the phase's base "
        "dimension");
  if (opts.table_nodes < 8)
    throw invalid_argument_error(
        "canonical relation: need at least 8 section nodes per axis");

  CanonicalRelation rel(n1, n2, pp);
  const std::vector<std::string> names = pp.variables();
  const std::size_t mm = static_cast<std::size_t>(pp.m);

  // Sample the stationary set and twist the z-side momentum.
  LagrangianCloud cloud = lambda_phi(pp, opts.cloud_resolution);
  for (const CloudPoint& p : cloud.points) {
    RelationSample s;
    s.x = p.x[0];
    s.xi = p.xi[0];
    s.z = p.x[1];
    s.eta = -p.xi[1];
    s.source = p.source;
    rel.samples.push_back(std::move(s));
  }
  if (rel.samples.size() < 4)
    throw error("canonical relation: stationary set yields fewer than 4 "
                "samples on the box");

  double zmin = rel.samples[0].z, zmax = zmin;
  double emin = rel.samples[0].eta, emax = emin;
  for (const auto& s : rel.samples) {
    zmin = std::min(zmin, s.z);
    zmax = std::max(zmax, s.z);
    emin = std::min(emin, s.eta);
    emax = std::max(emax, s.eta);
  }
  if (!(zmax > zmin) || !(emax > emin))
    throw error("canonical relation: samples span no (z, eta) area; the "
                "second projection cannot be inverted");
  const double zpad = opts.margin * (zmax - zmin);
  const double epad = opts.margin * (emax - emin);
  rel.nz = rel.ne = opts.table_nodes;
  rel.zlo = zmin - zpad;
  rel.elo = emin - epad;
  rel.dz = (zmax + zpad - rel.zlo) / static_cast<double>(rel.nz - 1);
  rel.de = (emax + epad - rel.elo) / static_cast<double>(rel.ne - 1);

  // Defining equations G(x, theta; z, eta) = 0 and their Jacobian in the
  // unknowns (x, theta). The eta offset enters numerically per node.
  const std::size_t nu = 1 + mm;  // unknowns: x, then theta block
  std::vector<Expr> eqs;
  for (std::size_t j = 0; j < mm; ++j)
    eqs.push_back(differentiate(pp.phi, names[2 + j]));
  eqs.push_back(mul(constant(-1.0), differentiate(pp.phi, names[1])));
  std::vector<std::string> unknowns{names[0]};
  for (std::size_t j = 0; j < mm; ++j) unknowns.push_back(names[2 + j]);

  std::vector<CompiledExpr> ceq;
  std::vector<CompiledExpr> cjac;
  for (const Expr& e : eqs) ceq.emplace_back(e, names);
  for (const Expr& e : eqs)
    for (const std::string& v : unknowns)
      cjac.emplace_back(differentiate(e, v), names);
  CompiledExpr cxi(differentiate(pp.phi, names[0]), names);

  double eq_scale = 1.0;
  for (const Expr& e : eqs)
    eq_scale = std::max(eq_scale,
                        detail::lattice_max_abs(e, names, pp.lo, pp.hi, 9));
  eq_scale += std::max(std::abs(emin), std::abs(emax));

  rel.node_x.assign(static_cast<std::size_t>(rel.nz) *
                        static_cast<std::size_t>(rel.ne),
                    0.0);
  rel.node_xi = rel.node_x;
  std::vector<double> svmin(rel.node_x.size(), 0.0);
  std::vector<std::string> failures(rel.node_x.size());

  parallel_for(rel.node_x.size(), [&](std::size_t flat) {
    const int iz = static_cast<int>(flat) / rel.ne;
    const int ie = static_cast<int>(flat) % rel.ne;
    const double z = rel.zlo + rel.dz * static_cast<double>(iz);
    const double eta = rel.elo + rel.de * static_cast<double>(ie);

    // Seed from the nearest stationary sample in the (z, eta) plane.
    double best = std::numeric_limits<double>::infinity();
    const RelationSample* near = &rel.samples[0];
    for (const auto& s : rel.samples) {
      const double d2 = (s.z - z) * (s.z - z) + (s.eta - eta) * (s.eta - eta);
      if (d2 < best) {
        best = d2;
        near = &s;
      }
    }
    std::vector<double> unk(nu);
    unk[0] = near->source[0];
    for (std::size_t j = 0; j < mm; ++j) unk[1 + j] = near->source[2 + j];

    std::vector<cplx> vals(names.size());
    std::size_t nregs = cxi.register_count();
    for (const auto& ce : ceq) nregs = std::max(nregs, ce.register_count());
    for (const auto& ce : cjac) nregs = std::max(nregs, ce.register_count());
    std::vector<cplx> regs(nregs);
    auto bind = [&]() {
      vals[0] = cplx(unk[0], 0.0);
      vals[1] = cplx(z, 0.0);
      for (std::size_t j = 0; j < mm; ++j) vals[2 + j] = cplx(unk[1 + j], 0.0);
    };
    Eigen::VectorXd G(static_cast<Eigen::Index>(nu));
    Eigen::MatrixXd J(static_cast<Eigen::Index>(nu),
                      static_cast<Eigen::Index>(nu));
    auto evaluate = [&]() {
      bind();
      for (std::size_t r = 0; r < nu; ++r) {
        double g = ceq[r](vals.data(), names.size(), regs).real();
        if (r == nu - 1) g -= eta;
        G(static_cast<Eigen::Index>(r)) = g;
        for (std::size_t c = 0; c < nu; ++c)
          J(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
              cjac[r * nu + c](vals.data(), names.size(), regs).real();
      }
    };
    bool converged = false;
    for (int it = 0; it < 60; ++it) {
      evaluate();
      Eigen::VectorXd delta = J.fullPivLu().solve(-G);
      double scale = 1.0;
      for (std::size_t j = 0; j < nu; ++j)
        scale = std::max(scale, std::abs(unk[j]));
      for (std::size_t j = 0; j < nu; ++j)
        unk[j] += delta(static_cast<Eigen::Index>(j));
      if (delta.norm() < 1e-13 * scale) {
        converged = true;
        break;
      }
    }
    evaluate();
    if (!converged || G.norm() > 1e-9 * eq_scale) {
      failures[flat] = "canonical relation: inversion of the second "
                       "projection failed at (z, eta) = (" +
                       std::to_string(z) + ", " + std::to_string(eta) + ")";
      return;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const double smin = svd.singularValues().minCoeff();
    const double jnorm = J.cwiseAbs().maxCoeff();
    if (smin < 1e-8 * (1.0 + jnorm)) {
      failures[flat] = "canonical relation: second projection is not an "
                       "immersion at (z, eta) = (" +
                       std::to_string(z) + ", " + std::to_string(eta) +
                       ") (singular value " + std::to_string(smin) + ")";
      return;
    }
    svmin[flat] = smin;
    rel.node_x[flat] = unk[0];
    bind();
    rel.node_xi[flat] = cxi(vals.data(), names.size(), regs).real();
  });
  for (const std::string& f : failures)
    if (!f.empty()) throw error(f);
  rel.min_projection_sv = *std::min_element(svmin.begin(), svmin.end());

  std::vector<cplx> vx(rel.node_x.size()), vxi(rel.node_x.size());
  for (std::size_t i = 0; i < rel.node_x.size(); ++i) {
    vx[i] = cplx(rel.node_x[i], 0.0);
    vxi[i] = cplx(rel.node_xi[i], 0.0);
  }
  rel.kappa_x = std::make_shared<const UniformTable2D>(
      rel.zlo, rel.dz, rel.nz, rel.elo, rel.de, rel.ne, std::move(vx),
      OutOfRange::clamp);
  rel.kappa_xi = std::make_shared<const UniformTable2D>(
      rel.zlo, rel.dz, rel.nz, rel.elo, rel.de, rel.ne, std::move(vxi),
      OutOfRange::clamp);

  // The tabulated section must reproduce the sampled relation.
  for (const auto& s : rel.samples) {
    const auto k = rel.kappa(s.z, s.eta);
    rel.section_error = std::max(
        rel.section_error,
        std::max(std::abs(k[0] - s.x), std::abs(k[1] - s.xi)));
  }
  if (rel.section_error > 1e-6)
    throw error("canonical relation: section fails to invert the second "
                "projection (error " + std::to_string(rel.section_error) +
                ")");
  return rel;
}

namespace detail {

inline cplx i_power(int k) { return minus_i_power(-k); }

}  // namespace detail

// Transports a leading symbol along the relation:
//   b0(z, eta) = i^{n1 - n2} a0(kappa(z, eta)),
// resampled over the section lattice, support clipped to the chart
// window. The input uses the quantization layer's (x, xi) names and must
// be h-free; the result lives in the output-side names (z, eta).
inline Expr egorov_transport(const Expr& a0, const CanonicalRelation& rel) {
  const auto xs = x_names(static_cast<std::size_t>(rel.n1));
  const auto xis = xi_names(static_cast<std::size_t>(rel.n1));
  for (const auto& v : free_variables(a0)) {
    bool ok = false;
    for (const auto& nm : xs) ok = ok || v == nm;
    for (const auto& nm : xis) ok = ok || v == nm;
    if (!ok)
      throw invalid_argument_error(
          "transport: symbol must be h-free and use the (x, xi) names, got "
          "'" + v + "'");
  }
  const cplx factor = detail::i_power(rel.n1 - rel.n2);
  std::vector<cplx> vals(rel.node_x.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    Env env;
    env[xs[0]] = cplx(rel.node_x[i], 0.0);
    env[xis[0]] = cplx(rel.node_xi[i], 0.0);
    vals[i] = factor * eval(a0, env);
  }
  auto tbl = std::make_shared<const UniformTable2D>(
      rel.zlo, rel.dz, rel.nz, rel.elo, rel.de, rel.ne, std::move(vals),
      OutOfRange::zero);
  return interp(tbl, z_names(1)[0], eta_names(1)[0]);
}

// Renames an output-side symbol (z, eta) into the quantization layer's
// (x, xi) so it can be applied to functions on the output grid.
inline HSymbol target_symbol(const Expr& b, double order = 0.0) {
  Expr e = substitute(b, z_names(1)[0], variable(x_names(1)[0]));
  e = substitute(e, eta_names(1)[0], variable(xi_names(1)[0]));
  return HSymbol(1, e, order);
}

// Relative conjugation residual over a sweep:
//   max over states of |(A F - F B) v| / |F v|   (L^2, per h),
// with coherent test states placed at the given (z, eta) centers. Pass
// no b to measure the baseline |A F v| / |F v|. The kernel is built once
// per h; states are visited in order, so the max-reduction is
// deterministic.
inline SweepRegression egorov_residual(
    const HSymbol& a, const FIOSpec& F, const std::optional<HSymbol>& b,
    const std::vector<std::array<double, 2>>& states, const Grid& gx,
    const Grid& gz, const SweepSpec& sweep,
    double floor = default_magnitude_floor) {
  if (a.dim != 1 || (b && b->dim != 1))
    throw invalid_argument_error("egorov residual: symbols must be 1D");
  if (states.empty())
    throw invalid_argument_error("egorov residual: need at least one test "
                                 "state");
  const std::vector<double> hs = sweep.h_values();
  std::vector<double> mags(hs.size(), 0.0);
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double h = hs[i];
    const SampledFunction K = build_fio_kernel(F, gx, gz, h);
    double worst = 0.0;
    for (const auto& c : states) {
      const SampledFunction v = coherent_state(gz, h, c[0], c[1]);
      const SampledFunction Fv = kernel_apply(K, v);
      const double nFv = l2_norm(Fv);
      if (!(nFv > 0.0))
        throw error("egorov residual: operator annihilates the test state "
                    "at (z, eta) = (" + std::to_string(c[0]) + ", " +
                    std::to_string(c[1]) + ")");
      SampledFunction diff = op_apply(a, Fv);
      if (b) {
        const SampledFunction FBv = kernel_apply(K, op_apply(*b, v));
        for (std::size_t j = 0; j < diff.values.size(); ++j)
          diff.values[j] -= FBv.values[j];
      }
      worst = std::max(worst, l2_norm(diff) / nFv);
    }
    mags[i] = worst;
  }
  return detail::fit_decay_allow_floor(hs, mags, floor);
}

struct CorrectionOptions {
  int nodes = 97;  // corrector lattice per (z, eta) axis
};

namespace detail {

// Order-one stationary-phase functional for a 2x2 Hessian of the shape
// [[A, B], [B, 0]] (B a nonzero constant, A = A(parameters)): with
// Q = H^{-1} = [[0, 1/B], [1/B, -A/B^2]],
//   L_1(F) = <QD,D>(F)/(2i) + <QD,D>^2(gF)/(8i) + <QD,D>^3(g^2 F)/(96i)
// where <QD,D> = -(2/B) d_p d_q + (A/B^2) d_q^2 and g is the cubic-and-up
// remainder of the phase. Everything is assembled symbolically once; the
// parameters stay free variables, so one tree serves every lattice node.
inline Expr hyperbolic_l1(const Expr& F, const Expr& g, const Expr& A,
                          double B, const std::string& p,
                          const std::string& q) {
  auto op = [&](const Expr& e) {
    return add(mul(constant(-2.0 / B), differentiate(differentiate(e, p), q)),
               mul(mul(A, constant(1.0 / (B * B))),
                   differentiate(differentiate(e, q), q)));
  };
  const Expr t1 = op(F);
  const Expr t2 = op(op(mul(g, F)));
  const Expr t3 = op(op(op(mul(mul(g, g), F))));
  const cplx inv_i(0.0, -1.0);  // 1/i
  return add(mul(constant(inv_i / 2.0), t1),
             add(mul(constant(inv_i / 8.0), t2),
                 mul(constant(inv_i / 96.0), t3)));
}

}  // namespace detail

// Solves the subleading conjugation balance for the first corrector b1
// of a frequency-free phase (m = 0, equal factor dimensions). See the
// header comment for the equation. The two order-one stationary-phase
// operators have Hessians [[phi''_xx, -1], [-1, 0]] and
// [[phi''_zz, 1], [1, 0]]; their functionals are assembled symbolically
// once with the outer (x, z) point left free and evaluated per lattice
// node (the agreement with the general stationary-phase expansion is
// covered by tests). The symbol must be in closed form: the right-side
// operand composes it with the section tables, which keeps the several
// derivatives the operator takes accurate.
inline Expr egorov_correction_m0(const HSymbol& a, const FIOSpec& F,
                                 const CanonicalRelation& rel,
                                 const CorrectionOptions& opts = {}) {
  if (F.phase.m != 0)
    throw invalid_argument_error(
        "correction: phase must be frequency-free (m = 0)");
  if (F.n1 != F.n2)
    throw invalid_argument_error(
        "correction: factor dimensions must be equal");
  if (a.dim != 1)
    throw invalid_argument_error("correction: symbol must be 1D");
  if (depends_on(a.expr, "h"))
    throw invalid_argument_error("correction: symbol must be h-free");
  if (opts.nodes < 8)
    throw invalid_argument_error("correction: need at least 8 lattice nodes "
                                 "per axis");

  const Expr& u0 = F.amplitude[0];
  const Expr u1 =
      F.amplitude.size() > 1 ? F.amplitude[1] : constant(0.0);
  const std::vector<std::string> names = F.phase.variables();  // x1, x2
  const Expr phi_x = differentiate(F.phase.phi, names[0]);
  const Expr phi_z = differentiate(F.phase.phi, names[1]);
  const Expr phi_xx = differentiate(phi_x, names[0]);
  const Expr phi_zz = differentiate(phi_z, names[1]);

  const std::string xn = x_names(1)[0];
  const std::string xin = xi_names(1)[0];
  const std::string zn = z_names(1)[0];
  const std::string etan = eta_names(1)[0];

  // Left composition: integrand over (y, xi) with (x1, x2) the outer
  // point; phase (x1 - y) xi + phi(y, x2). All xi-dependence of the
  // phase is exactly bilinear, so the remainder g is a pure y-function.
  const Expr yv = variable("y");
  const Expr ydiff = sub(yv, variable(names[0]));
  const Expr phi_y = substitute(F.phase.phi, names[0], yv);
  const Expr g_l =
      sub(sub(phi_y, F.phase.phi),
          add(mul(phi_x, ydiff),
              mul(constant(0.5), mul(phi_xx, mul(ydiff, ydiff)))));
  const Expr F_l = mul(substitute(a.expr, xn, variable(names[0])),
                       substitute(u0, names[0], yv));
  const Expr L1_l =
      detail::hyperbolic_l1(F_l, g_l, phi_xx, -1.0, "y", xin);

  // The right-side operator differentiates b0 several times, and a
  // resampled table loses accuracy with each derivative. Composing the
  // symbol with the section tables directly keeps the chain rule exact
  // up to the tables' own interpolation error.
  const Expr kx_we = interp(rel.kappa_x, "w", etan);
  const Expr kxi_we = interp(rel.kappa_xi, "w", etan);
  const cplx tfactor = detail::i_power(rel.n1 - rel.n2);
  const Expr b0_w =
      mul(constant(tfactor),
          substitute(substitute(a.expr, xn, kx_we), xin, kxi_we));

  // Right composition: integrand over (w, eta); phase
  // phi(x1, w) + (w - x2) eta, remainder a pure w-function.
  const Expr wv = variable("w");
  const Expr wdiff = sub(wv, variable(names[1]));
  const Expr phi_w = substitute(F.phase.phi, names[1], wv);
  const Expr g_r =
      sub(sub(phi_w, F.phase.phi),
          add(mul(phi_z, wdiff),
              mul(constant(0.5), mul(phi_zz, mul(wdiff, wdiff)))));
  const Expr G_r = mul(substitute(u0, names[1], wv), b0_w);
  const Expr L1_r =
      detail::hyperbolic_l1(G_r, g_r, phi_zz, 1.0, "w", etan);

  const std::vector<std::string> lvars{names[0], names[1], "y", xin};
  const std::vector<std::string> rvars{names[0], names[1], "w", etan};
  CompiledExpr cl(L1_l, lvars);
  CompiledExpr cr(L1_r, rvars);
  CompiledExpr cu0(u0, names);
  CompiledExpr cu1(u1, names);

  const int nn = opts.nodes;
  const double dz = (rel.zhi() - rel.zlo) / static_cast<double>(nn - 1);
  const double de = (rel.ehi() - rel.elo) / static_cast<double>(nn - 1);
  std::vector<cplx> b1(static_cast<std::size_t>(nn) *
                           static_cast<std::size_t>(nn),
                       cplx(0.0, 0.0));
  std::vector<std::string> failures(b1.size());

  parallel_for(b1.size(), [&](std::size_t flat) {
    const int iz = static_cast<int>(flat) / nn;
    const int ie = static_cast<int>(flat) % nn;
    // Clamp against the last node landing an ulp past the window edge.
    const double zv =
        std::min(rel.zhi(), rel.zlo + dz * static_cast<double>(iz));
    const double ev =
        std::min(rel.ehi(), rel.elo + de * static_cast<double>(ie));
    const auto k = rel.kappa(zv, ev);
    const double xv = k[0];
    const double xiv = k[1];

    std::vector<cplx> regs(std::max(cl.register_count(),
                                    cr.register_count()));
    cplx pvals[2] = {cplx(xv, 0.0), cplx(zv, 0.0)};
    const cplx u0v = cu0(pvals, 2, regs);
    if (std::abs(u0v) < 1e-6) {
      failures[flat] = "amplitude vanishes; correction undefined";
      return;
    }
    const cplx u1v = cu1(pvals, 2, regs);

    Env side;  // a0 on the relation; b0 through the section composite
    side[xn] = cplx(xv, 0.0);
    side[xin] = cplx(xiv, 0.0);
    const cplx a0v = eval(a.expr, side);
    Env outv;
    outv["w"] = cplx(zv, 0.0);
    outv[etan] = cplx(ev, 0.0);
    const cplx b0v = eval(b0_w, outv);

    cplx lvals[4] = {cplx(xv, 0.0), cplx(zv, 0.0), cplx(xv, 0.0),
                     cplx(xiv, 0.0)};
    const cplx Ll1 = cl(lvals, 4, regs);
    cplx rvals[4] = {cplx(xv, 0.0), cplx(zv, 0.0), cplx(zv, 0.0),
                     cplx(ev, 0.0)};
    const cplx Lr1 = cr(rvals, 4, regs);
    const cplx Ll0 = a0v * u1v;  // order zero is evaluation on the relation
    const cplx Lr0 = u1v * b0v;
    b1[flat] = (Ll0 + Ll1 - Lr0 - Lr1) / u0v;
  });
  for (const std::string& f : failures)
    if (!f.empty()) throw error(f);

  auto tbl = std::make_shared<const UniformTable2D>(
      rel.zlo, dz, nn, rel.elo, de, nn, std::move(b1), OutOfRange::zero);
  return interp(tbl, zn, etan);
}

}  // namespace mlk
