#pragma once

// Lagrangian geometry extracted from phase presentations: point clouds of
// the set {(x, phi'_x) : phi'_theta = 0}, and generating-function charts
// H with the graph {(H'(xi), xi)} fitted over a frequency window. A chart
// comes in two interchangeable forms: a generating function over a
// window, or the phase presentation itself.
//
// Chart fitting is table-based: the cloud is resampled onto a uniform
// frequency lattice (directly when the cloud already is such a lattice,
// by local cubic interpolation in one dimension, and by local quadratic
// least squares otherwise), the Jacobian symmetry dx_i/dxi_j =
// dx_j/dxi_i is checked by centered differences at the lattice
// resolution, and H is accumulated along axis-ordered paths with a
// fourth-order rule and gauged to H = 0 at the window center.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mlk/core.hpp"
#include "mlk/expr.hpp"
#include "mlk/interp.hpp"
#include "mlk/oscint.hpp"

namespace mlk {

// ---------------------------------------------------------------------------
// Point clouds

struct CloudPoint {
  std::array<double, 2> x{0.0, 0.0};
  std::array<double, 2> xi{0.0, 0.0};
  std::vector<double> source;  // (x, theta) in the presentation's variables
  bool collision = false;      // another source lands on the same (x, xi)
};

struct LagrangianCloud {
  int dim = 1;  // ambient dimension n of T*R^n
  std::vector<CloudPoint> points;
};

// Samples {(x, phi'_x(x, theta)) : phi'_theta(x, theta) = 0} on a lattice
// of x slices (resolution nodes per x axis). With no theta variables the
// stationary set is the whole box and the cloud is the gradient graph.
// Two stationary sources mapping to the same phase-space point (within
// 1e-8) mark a self-intersection; both carry the collision flag.
inline LagrangianCloud lambda_phi(const PhasePresentation& pp,
                                  int resolution) {
  if (pp.n != 1 && pp.n != 2)
    throw invalid_argument_error(
        "lambda cloud: base dimension must be 1 or 2");
  if (resolution < 2)
    throw invalid_argument_error(
        "lambda cloud: need at least two samples per x axis");
  const std::size_t nn = static_cast<std::size_t>(pp.n);
  const std::size_t mm = static_cast<std::size_t>(pp.m);
  const std::vector<std::string> names = pp.variables();
  const std::vector<std::string> tnames(
      names.begin() + static_cast<std::ptrdiff_t>(nn), names.end());
  const std::vector<double> tlo(pp.lo.begin() + static_cast<std::ptrdiff_t>(nn),
                                pp.lo.end());
  const std::vector<double> thi(pp.hi.begin() + static_cast<std::ptrdiff_t>(nn),
                                pp.hi.end());

  std::vector<Expr> dx(nn);
  for (std::size_t i = 0; i < nn; ++i)
    dx[i] = differentiate(pp.phi, names[i]);

  LagrangianCloud cloud;
  cloud.dim = pp.n;
  std::int64_t slice_count = 1;
  for (std::size_t i = 0; i < nn; ++i) slice_count *= resolution;
  for (std::int64_t slice = 0; slice < slice_count; ++slice) {
    std::vector<double> x(nn);
    std::int64_t rem = slice;
    for (std::size_t i = 0; i < nn; ++i) {
      x[i] = pp.lo[i] + (pp.hi[i] - pp.lo[i]) *
                            static_cast<double>(rem % resolution) /
                            static_cast<double>(resolution - 1);
      rem /= resolution;
    }

    std::vector<std::vector<double>> thetas;
    if (mm == 0) {
      thetas.push_back({});
    } else {
      Expr slice_phi = pp.phi;
      for (std::size_t i = 0; i < nn; ++i)
        slice_phi = substitute(slice_phi, names[i], constant(x[i]));
      for (const auto& rec :
           find_critical_points(slice_phi, tnames, tlo, thi))
        thetas.push_back(rec.location);
    }

    for (const auto& theta : thetas) {
      Env env;
      for (std::size_t i = 0; i < nn; ++i) env[names[i]] = cplx(x[i], 0.0);
      for (std::size_t i = 0; i < mm; ++i) env[tnames[i]] = cplx(theta[i], 0.0);
      CloudPoint pt;
      for (std::size_t i = 0; i < nn; ++i) {
        pt.x[i] = x[i];
        pt.xi[i] = eval(dx[i], env).real();
      }
      pt.source = x;
      for (double t : theta) pt.source.push_back(t);
      cloud.points.push_back(std::move(pt));
    }
  }

  for (std::size_t i = 0; i < cloud.points.size(); ++i)
    for (std::size_t j = i + 1; j < cloud.points.size(); ++j) {
      CloudPoint& a = cloud.points[i];
      CloudPoint& b = cloud.points[j];
      double image = 0.0, source = 0.0;
      for (std::size_t dd = 0; dd < nn; ++dd) {
        image = std::max(image, std::abs(a.x[dd] - b.x[dd]));
        image = std::max(image, std::abs(a.xi[dd] - b.xi[dd]));
      }
      for (std::size_t dd = 0; dd < a.source.size(); ++dd)
        source = std::max(source, std::abs(a.source[dd] - b.source[dd]));
      if (image < 1e-8 && source >= 1e-6) a.collision = b.collision = true;
    }
  return cloud;
}

// ---------------------------------------------------------------------------
// Generating-function charts

struct GeneratingForm {
  int dim = 1;
  Expr H;  // function of the xi names for dim
  std::vector<double> wlo, whi;  // frequency window

  GeneratingForm(int dim, Expr H_in, std::vector<double> wlo_in,
                 std::vector<double> whi_in)
      : dim(dim), H(std::move(H_in)), wlo(std::move(wlo_in)),
        whi(std::move(whi_in)) {
    if (dim != 1 && dim != 2)
      throw invalid_argument_error("generating form: dimension must be 1 or 2");
    if (wlo.size() != static_cast<std::size_t>(dim) ||
        whi.size() != static_cast<std::size_t>(dim))
      throw invalid_argument_error(
          "generating form: window bounds must match the dimension");
    for (std::size_t i = 0; i < wlo.size(); ++i)
      if (!(wlo[i] < whi[i]))
        throw invalid_argument_error(
            "generating form: window must have positive extent");
    const std::vector<std::string> xis =
        xi_names(static_cast<std::size_t>(dim));
    for (const auto& v : free_variables(H)) {
      bool ok = false;
      for (const auto& nm : xis) ok = ok || v == nm;
      if (!ok)
        throw invalid_argument_error(
            "generating form: H uses variable '" + v +
            "' outside the frequency names");
    }
  }

  // dH/dxi_d, the x coordinate of the graph.
  Expr H_prime(int d = 0) const {
    return differentiate(H, xi_names(static_cast<std::size_t>(dim))
                                [static_cast<std::size_t>(d)]);
  }
};

struct PhaseForm {
  PhasePresentation presentation;
};

using LagrangianChart = std::variant<GeneratingForm, PhaseForm>;

namespace detail {

// Cumulative integral of uniformly spaced samples with a fourth-order
// (cubic-slab) rule; out[0] = 0.
inline std::vector<double> cumulative_integral(const std::vector<double>& f,
                                               double dx) {
  const std::size_t M = f.size();
  if (M < 4)
    throw invalid_argument_error(
        "chart integration: need at least 4 lattice nodes per axis");
  std::vector<double> out(M, 0.0);
  out[1] = out[0] + dx * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0;
  for (std::size_t k = 1; k + 2 < M; ++k)
    out[k + 1] = out[k] + dx *
                              (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] -
                               f[k + 2]) /
                              24.0;
  out[M - 1] = out[M - 2] + dx *
                                (9.0 * f[M - 1] + 19.0 * f[M - 2] -
                                 5.0 * f[M - 3] + f[M - 4]) /
                                24.0;
  return out;
}

// Four-point Lagrange interpolation through (xs[k], ys[k]) at t. The xs
// must be distinct; that is the caller's contract.
inline double lagrange4(const double* xs, const double* ys, double t) {
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    double w = 1.0;
    for (int j = 0; j < 4; ++j)
      if (j != i) w *= (t - xs[j]) / (xs[i] - xs[j]);
    acc += w * ys[i];
  }
  return acc;
}

}  // namespace detail

// Fits a generating function to the cloud over the window [wlo, whi].
// table_nodes controls the lattice used when the cloud itself is not a
// uniform frequency lattice (0 picks a default). Throws when the
// frequency projection is not injective on the cloud (a fold), when the
// window is not covered, or when the fitted Jacobian is asymmetric beyond
// 1e-6 (the cloud is not Lagrangian at this resolution).
inline GeneratingForm generating_chart(const LagrangianCloud& cloud,
                                       const std::vector<double>& wlo,
                                       const std::vector<double>& whi,
                                       int table_nodes = 0) {
  const int dim = cloud.dim;
  if (dim != 1 && dim != 2)
    throw invalid_argument_error("generating chart: dimension must be 1 or 2");
  const std::size_t nd = static_cast<std::size_t>(dim);
  if (wlo.size() != nd || whi.size() != nd)
    throw invalid_argument_error(
        "generating chart: window bounds must match the cloud dimension");
  double span = 0.0;
  for (std::size_t d = 0; d < nd; ++d) {
    if (!(wlo[d] < whi[d]))
      throw invalid_argument_error(
          "generating chart: window must have positive extent");
    span = std::max(span, whi[d] - wlo[d]);
  }
  const std::vector<CloudPoint>& pts = cloud.points;
  if (pts.size() < 4)
    throw invalid_argument_error(
        "generating chart: need at least four cloud points");

  // Fold scan: identical frequencies with distinct base points mean the
  // frequency projection cannot be inverted. Lexicographic sorting makes
  // coincident frequencies adjacent.
  {
    std::vector<std::size_t> order(pts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      for (std::size_t d = 0; d < nd; ++d) {
        if (pts[a].xi[d] < pts[b].xi[d]) return true;
        if (pts[a].xi[d] > pts[b].xi[d]) return false;
      }
      return false;
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
      const CloudPoint& a = pts[order[k - 1]];
      const CloudPoint& b = pts[order[k]];
      double dxi = 0.0, dxx = 0.0;
      for (std::size_t d = 0; d < nd; ++d) {
        dxi = std::max(dxi, std::abs(a.xi[d] - b.xi[d]));
        dxx = std::max(dxx, std::abs(a.x[d] - b.x[d]));
      }
      if (dxi < 1e-8 && dxx > 1e-6)
        throw error("generating chart: fold, frequency projection is not "
                    "injective near xi = " + std::to_string(a.xi[0]) +
                    (nd == 2 ? ", " + std::to_string(a.xi[1]) : ""));
    }
  }

  // Window coverage.
  std::array<double, 2> xi_min{pts[0].xi}, xi_max{pts[0].xi};
  for (const auto& p : pts)
    for (std::size_t d = 0; d < nd; ++d) {
      xi_min[d] = std::min(xi_min[d], p.xi[d]);
      xi_max[d] = std::max(xi_max[d], p.xi[d]);
    }
  for (std::size_t d = 0; d < nd; ++d)
    if (xi_min[d] > wlo[d] + 1e-12 || xi_max[d] < whi[d] - 1e-12)
      throw invalid_argument_error(
          "generating chart: window is not covered by the cloud on axis " +
          std::to_string(d + 1));

  // Resample x(xi) onto a uniform lattice.
  std::vector<double> llo(nd), step(nd);
  std::vector<std::int64_t> node_count(nd);
  std::vector<std::vector<double>> xval(nd);  // per component, lattice-major

  bool lattice_cloud = false;
  if (dim == 2) {
    // Try to read the cloud as a product lattice in xi.
    std::array<std::vector<double>, 2> uniq;
    for (std::size_t d = 0; d < 2; ++d) {
      std::vector<double> v;
      for (const auto& p : pts) v.push_back(p.xi[d]);
      std::sort(v.begin(), v.end());
      const double tol = 1e-9 * std::max(1.0, span);
      for (double c : v)
        if (uniq[d].empty() || c - uniq[d].back() > tol) uniq[d].push_back(c);
    }
    if (uniq[0].size() >= 4 && uniq[1].size() >= 4 &&
        uniq[0].size() * uniq[1].size() == pts.size()) {
      lattice_cloud = true;
      const double tol = 1e-9 * std::max(1.0, span);
      for (std::size_t d = 0; d < 2; ++d) {
        const double dd =
            (uniq[d].back() - uniq[d].front()) /
            static_cast<double>(uniq[d].size() - 1);
        for (std::size_t k = 0; k < uniq[d].size(); ++k)
          if (std::abs(uniq[d][k] - (uniq[d].front() +
                                     dd * static_cast<double>(k))) > tol)
            lattice_cloud = false;
        llo[d] = uniq[d].front();
        step[d] = dd;
        node_count[d] = static_cast<std::int64_t>(uniq[d].size());
      }
      if (lattice_cloud) {
        const std::size_t total =
            static_cast<std::size_t>(node_count[0] * node_count[1]);
        std::vector<char> seen(total, 0);
        for (std::size_t d = 0; d < 2; ++d)
          xval[d].assign(total, 0.0);
        for (const auto& p : pts) {
          const std::int64_t i0 = static_cast<std::int64_t>(
              std::llround((p.xi[0] - llo[0]) / step[0]));
          const std::int64_t i1 = static_cast<std::int64_t>(
              std::llround((p.xi[1] - llo[1]) / step[1]));
          if (i0 < 0 || i0 >= node_count[0] || i1 < 0 || i1 >= node_count[1] ||
              std::abs(p.xi[0] - (llo[0] + step[0] * static_cast<double>(i0))) >
                  tol ||
              std::abs(p.xi[1] - (llo[1] + step[1] * static_cast<double>(i1))) >
                  tol) {
            lattice_cloud = false;
            break;
          }
          const std::size_t flat =
              static_cast<std::size_t>(i0 * node_count[1] + i1);
          seen[flat] = 1;
          xval[0][flat] = p.x[0];
          xval[1][flat] = p.x[1];
        }
        for (char s : seen) lattice_cloud = lattice_cloud && s != 0;
      }
    }
  }

  if (dim == 1) {
    // Sort by frequency, drop coincident duplicates (the fold scan already
    // guaranteed they agree in x), and resample by local cubics.
    std::vector<std::pair<double, double>> data;
    for (const auto& p : pts) data.emplace_back(p.xi[0], p.x[0]);
    std::sort(data.begin(), data.end());
    std::vector<double> xs, ys;
    for (const auto& [c, v] : data)
      if (xs.empty() || c - xs.back() > 1e-12) {
        xs.push_back(c);
        ys.push_back(v);
      }
    if (xs.size() < 4)
      throw invalid_argument_error(
          "generating chart: need at least four distinct frequencies");
    const std::int64_t M = table_nodes > 3 ? table_nodes : 513;
    llo[0] = wlo[0];
    node_count[0] = M;
    step[0] = (whi[0] - wlo[0]) / static_cast<double>(M - 1);
    xval[0].resize(static_cast<std::size_t>(M));
    for (std::int64_t k = 0; k < M; ++k) {
      const double t = llo[0] + step[0] * static_cast<double>(k);
      std::size_t j =
          static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), t) -
                                   xs.begin());
      j = std::min(std::max<std::size_t>(j, 2), xs.size() - 2);
      xval[0][static_cast<std::size_t>(k)] =
          detail::lagrange4(&xs[j - 2], &ys[j - 2], t);
    }
  } else if (!lattice_cloud) {
    // Scattered 2D cloud: local quadratic least squares on the nearest
    // dozen points per lattice node. Lower fidelity than the lattice
    // path, but enough for clouds that are merely unevenly sampled.
    const std::int64_t M = table_nodes > 3 ? table_nodes : 65;
    for (std::size_t d = 0; d < 2; ++d) {
      llo[d] = wlo[d];
      node_count[d] = M;
      step[d] = (whi[d] - wlo[d]) / static_cast<double>(M - 1);
      xval[d].assign(static_cast<std::size_t>(M * M), 0.0);
    }
    const std::size_t k_near = 12;
    if (pts.size() < k_near)
      throw invalid_argument_error(
          "generating chart: scattered fit needs at least 12 cloud points");
    for (std::int64_t i0 = 0; i0 < M; ++i0)
      for (std::int64_t i1 = 0; i1 < M; ++i1) {
        const double c0 = llo[0] + step[0] * static_cast<double>(i0);
        const double c1 = llo[1] + step[1] * static_cast<double>(i1);
        std::vector<std::pair<double, std::size_t>> by_dist;
        for (std::size_t p = 0; p < pts.size(); ++p) {
          const double d0 = pts[p].xi[0] - c0;
          const double d1 = pts[p].xi[1] - c1;
          by_dist.emplace_back(d0 * d0 + d1 * d1, p);
        }
        std::partial_sort(by_dist.begin(), by_dist.begin() + k_near,
                          by_dist.end());
        Eigen::MatrixXd Amat(k_near, 6);
        Eigen::MatrixXd rhs(k_near, 2);
        for (std::size_t r = 0; r < k_near; ++r) {
          const CloudPoint& p = pts[by_dist[r].second];
          const double d0 = p.xi[0] - c0;
          const double d1 = p.xi[1] - c1;
          Amat(static_cast<Eigen::Index>(r), 0) = 1.0;
          Amat(static_cast<Eigen::Index>(r), 1) = d0;
          Amat(static_cast<Eigen::Index>(r), 2) = d1;
          Amat(static_cast<Eigen::Index>(r), 3) = d0 * d0;
          Amat(static_cast<Eigen::Index>(r), 4) = d0 * d1;
          Amat(static_cast<Eigen::Index>(r), 5) = d1 * d1;
          rhs(static_cast<Eigen::Index>(r), 0) = p.x[0];
          rhs(static_cast<Eigen::Index>(r), 1) = p.x[1];
        }
        Eigen::MatrixXd sol = Amat.householderQr().solve(rhs);
        const std::size_t flat = static_cast<std::size_t>(i0 * M + i1);
        xval[0][flat] = sol(0, 0);
        xval[1][flat] = sol(0, 1);
      }
  }

  // Jacobian symmetry at the lattice resolution (meaningful in 2D only).
  if (dim == 2) {
    double worst = 0.0;
    for (std::int64_t i0 = 1; i0 + 1 < node_count[0]; ++i0)
      for (std::int64_t i1 = 1; i1 + 1 < node_count[1]; ++i1) {
        auto at = [&](std::size_t comp, std::int64_t a, std::int64_t b) {
          return xval[comp][static_cast<std::size_t>(a * node_count[1] + b)];
        };
        const double d2x1 =
            (at(0, i0, i1 + 1) - at(0, i0, i1 - 1)) / (2.0 * step[1]);
        const double d1x2 =
            (at(1, i0 + 1, i1) - at(1, i0 - 1, i1)) / (2.0 * step[0]);
        worst = std::max(worst, std::abs(d2x1 - d1x2));
      }
    if (worst > 1e-6)
      throw error("generating chart: not Lagrangian at resolution "
                  "(Jacobian asymmetry " + std::to_string(worst) + ")");
  }

  // H along axis-ordered paths from the lattice origin.
  Expr H;
  if (dim == 1) {
    std::vector<double> Hval =
        detail::cumulative_integral(xval[0], step[0]);
    std::vector<cplx> samples(Hval.begin(), Hval.end());
    auto table = std::make_shared<UniformTable1D>(
        llo[0], step[0], std::move(samples), OutOfRange::clamp);
    const double ref = 0.5 * (wlo[0] + whi[0]);
    const double shift = table->eval(ref).real();
    std::vector<cplx> shifted(Hval.size());
    for (std::size_t k = 0; k < Hval.size(); ++k)
      shifted[k] = cplx(Hval[k] - shift, 0.0);
    auto gauged = std::make_shared<UniformTable1D>(
        llo[0], step[0], std::move(shifted), OutOfRange::clamp);
    H = interp(gauged, xi_names(1)[0]);
  } else {
    const std::int64_t M0 = node_count[0], M1 = node_count[1];
    std::vector<double> row0(static_cast<std::size_t>(M0));
    for (std::int64_t i0 = 0; i0 < M0; ++i0)
      row0[static_cast<std::size_t>(i0)] =
          xval[0][static_cast<std::size_t>(i0 * M1)];
    const std::vector<double> base =
        detail::cumulative_integral(row0, step[0]);
    std::vector<double> Hval(static_cast<std::size_t>(M0 * M1), 0.0);
    for (std::int64_t i0 = 0; i0 < M0; ++i0) {
      std::vector<double> col(static_cast<std::size_t>(M1));
      for (std::int64_t i1 = 0; i1 < M1; ++i1)
        col[static_cast<std::size_t>(i1)] =
            xval[1][static_cast<std::size_t>(i0 * M1 + i1)];
      const std::vector<double> acc =
          detail::cumulative_integral(col, step[1]);
      for (std::int64_t i1 = 0; i1 < M1; ++i1)
        Hval[static_cast<std::size_t>(i0 * M1 + i1)] =
            base[static_cast<std::size_t>(i0)] +
            acc[static_cast<std::size_t>(i1)];
    }
    std::vector<cplx> samples(Hval.begin(), Hval.end());
    auto table = std::make_shared<UniformTable2D>(
        llo[0], step[0], M0, llo[1], step[1], M1, std::move(samples),
        OutOfRange::clamp);
    const double r0 = 0.5 * (wlo[0] + whi[0]);
    const double r1 = 0.5 * (wlo[1] + whi[1]);
    const double shift = table->eval(r0, r1).real();
    std::vector<cplx> shifted(Hval.size());
    for (std::size_t k = 0; k < Hval.size(); ++k)
      shifted[k] = cplx(Hval[k] - shift, 0.0);
    auto gauged = std::make_shared<UniformTable2D>(
        llo[0], step[0], M0, llo[1], step[1], M1, std::move(shifted),
        OutOfRange::clamp);
    H = interp(gauged, xi_names(2)[0], xi_names(2)[1]);
  }
  return GeneratingForm(dim, std::move(H),
                        std::vector<double>(wlo.begin(), wlo.end()),
                        std::vector<double>(whi.begin(), whi.end()));
}

}  // namespace mlk
