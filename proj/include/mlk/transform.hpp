#pragma once

// Semiclassical Fourier transform and friends on sampled functions:
//
//   (F_h u)(xi) = integral e^{-i<x,xi>/h} u(x) dx
//
// realized as trapezoid quadrature on the periodized grid (weight dx at
// every node), which an FFT plus an endpoint phase ramp reproduces
// exactly. The inverse carries the (2*pi*h)^{-n} normalization. Forward
// output lives on the dual grid of the input in monotone frequency order.

#include <cmath>

#include "mlk/fft.hpp"
#include "mlk/grid.hpp"

namespace mlk {

namespace detail {

// e^{-i * lo * xi_m / h} for monotone dual index m; sign=+1 conjugates.
inline cplx endpoint_ramp(const Axis& a, double h, std::int64_t m, int sign) {
  double dxi = 2.0 * pi * h / a.length();
  double xi = (static_cast<double>(m) - static_cast<double>(a.n) / 2.0) * dxi;
  double ang = -static_cast<double>(sign) * a.lo * xi / h;
  return cplx(std::cos(ang), std::sin(ang));
}

// 1D forward pass along a contiguous stride-1 run of length n.
inline void sft_axis(cplx* data, const Axis& a, double h) {
  const std::size_t n = static_cast<std::size_t>(a.n);
  fft_inplace(data, n, -1);
  // Shuffle FFT layout (k = 0..n/2-1, -n/2..-1) to monotone and apply
  // quadrature weight and ramp.
  std::vector<cplx> out(n);
  const double dx = a.spacing();
  for (std::size_t m = 0; m < n; ++m) {
    std::size_t j = (m + n / 2) % n;
    out[m] = data[j] * dx * endpoint_ramp(a, h, static_cast<std::int64_t>(m), +1);
  }
  std::copy(out.begin(), out.end(), data);
}

inline void isft_axis(cplx* data, const Axis& a, double h) {
  const std::size_t n = static_cast<std::size_t>(a.n);
  std::vector<cplx> tmp(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t m = (j + n / 2) % n;
    tmp[j] =
        data[m] * endpoint_ramp(a, h, static_cast<std::int64_t>(m), -1);
  }
  std::copy(tmp.begin(), tmp.end(), data);
  fft_inplace(data, n, +1);
  const double scale = 1.0 / a.length();
  for (std::size_t j = 0; j < n; ++j) data[j] *= scale;
}

template <class AxisOp>
inline void apply_along_axes(std::vector<cplx>& v, const Grid& g, AxisOp op) {
  if (g.dim() == 1) {
    op(v.data(), g.axis(0));
    return;
  }
  const std::int64_t n0 = g.axis(0).n, n1 = g.axis(1).n;
  // Axis 1 runs are contiguous.
  for (std::int64_t i = 0; i < n0; ++i) op(v.data() + i * n1, g.axis(1));
  // Axis 0 needs a gather/scatter per column.
  std::vector<cplx> col(static_cast<std::size_t>(n0));
  for (std::int64_t j = 0; j < n1; ++j) {
    for (std::int64_t i = 0; i < n0; ++i)
      col[static_cast<std::size_t>(i)] =
          v[static_cast<std::size_t>(i * n1 + j)];
    op(col.data(), g.axis(0));
    for (std::int64_t i = 0; i < n0; ++i)
      v[static_cast<std::size_t>(i * n1 + j)] =
          col[static_cast<std::size_t>(i)];
  }
}

}  // namespace detail

// Forward transform; result is sampled on dual_grid(u.grid, u.h).
inline SampledFunction sft(const SampledFunction& u) {
  std::vector<cplx> v = u.values;
  detail::apply_along_axes(v, u.grid, [&](cplx* run, const Axis& a) {
    detail::sft_axis(run, a, u.h);
  });
  return SampledFunction(dual_grid(u.grid, u.h), u.h, std::move(v));
}

// Inverse transform back onto `original`, which must be the grid the
// forward transform came from (checked via its dual).
inline SampledFunction isft(const SampledFunction& spec, const Grid& original) {
  if (dual_grid(original, spec.h) != spec.grid)
    throw invalid_argument_error(
        "isft: spectrum grid is not the dual of the requested grid");
  std::vector<cplx> v = spec.values;
  detail::apply_along_axes(v, original, [&](cplx* run, const Axis& a) {
    detail::isft_axis(run, a, spec.h);
  });
  return SampledFunction(original, spec.h, std::move(v));
}

namespace detail {

// Phase factors e^{-i x_j xi / h} for all nodes of one axis, via a
// rotation recurrence re-anchored every 64 steps to stop drift.
inline void phase_column(const Axis& a, double h, double xi,
                         std::vector<cplx>& out) {
  const std::size_t n = static_cast<std::size_t>(a.n);
  out.resize(n);
  const double step_ang = -a.spacing() * xi / h;
  const cplx step(std::cos(step_ang), std::sin(step_ang));
  cplx cur;
  for (std::size_t j = 0; j < n; ++j) {
    if (j % 64 == 0) {
      double ang = -a.node(static_cast<std::int64_t>(j)) * xi / h;
      cur = cplx(std::cos(ang), std::sin(ang));
    }
    out[j] = cur;
    cur *= step;
  }
}

}  // namespace detail

// Trapezoid quadrature of the defining integral at one arbitrary xi (not
// necessarily a dual node). Agrees with sft() on dual nodes to roundoff.
inline cplx direct_sft_at(const SampledFunction& u,
                          const std::array<double, 2>& xi) {
  std::vector<cplx> p0, p1;
  detail::phase_column(u.grid.axis(0), u.h, xi[0], p0);
  if (u.grid.dim() == 1) {
    cplx acc(0.0, 0.0);
    for (std::size_t j = 0; j < p0.size(); ++j) acc += p0[j] * u.values[j];
    return acc * u.grid.axis(0).spacing();
  }
  detail::phase_column(u.grid.axis(1), u.h, xi[1], p1);
  const std::int64_t n1 = u.grid.axis(1).n;
  cplx acc(0.0, 0.0);
  for (std::size_t i = 0; i < p0.size(); ++i) {
    cplx row(0.0, 0.0);
    const cplx* vrow = u.values.data() + static_cast<std::int64_t>(i) * n1;
    for (std::size_t j = 0; j < p1.size(); ++j) row += p1[j] * vrow[j];
    acc += p0[i] * row;
  }
  return acc * (u.grid.axis(0).spacing() * u.grid.axis(1).spacing());
}

inline cplx direct_sft_at(const SampledFunction& u, double xi) {
  return direct_sft_at(u, std::array<double, 2>{xi, 0.0});
}

// L^2 pairing without conjugation: integral u1 * u2 dx.
inline cplx pair_integral(const SampledFunction& u1,
                          const SampledFunction& u2) {
  if (u1.grid != u2.grid)
    throw invalid_argument_error("pair: functions live on different grids");
  if (u1.h != u2.h)
    throw invalid_argument_error("pair: functions have different h");
  cplx acc(0.0, 0.0);
  for (std::size_t j = 0; j < u1.values.size(); ++j)
    acc += u1.values[j] * u2.values[j];
  double w = u1.grid.axis(0).spacing();
  if (u1.grid.dim() == 2) w *= u1.grid.axis(1).spacing();
  return acc * w;
}

// Same pairing computed on the frequency side:
//   (2*pi*h)^{-n} * integral (F_h u1)(xi) (F_h u2)(-xi) dxi.
// Used to cross-check pair_integral; the two agree to roundoff.
inline cplx pair_integral_frequency_side(const SampledFunction& u1,
                                         const SampledFunction& u2) {
  if (u1.grid != u2.grid || u1.h != u2.h)
    throw invalid_argument_error("pair: mismatched grids or h");
  SampledFunction f1 = sft(u1), f2 = sft(u2);
  const Grid& dg = f1.grid;
  cplx acc(0.0, 0.0);
  if (dg.dim() == 1) {
    const std::int64_t n = dg.axis(0).n;
    for (std::int64_t m = 0; m < n; ++m) {
      std::int64_t mneg = (n - m) % n;  // monotone index of -xi_m (mod wrap)
      acc += f1.values[static_cast<std::size_t>(m)] *
             f2.values[static_cast<std::size_t>(mneg)];
    }
  } else {
    const std::int64_t n0 = dg.axis(0).n, n1 = dg.axis(1).n;
    for (std::int64_t m0 = 0; m0 < n0; ++m0)
      for (std::int64_t m1 = 0; m1 < n1; ++m1) {
        std::int64_t p0 = (n0 - m0) % n0, p1 = (n1 - m1) % n1;
        acc += f1.values[static_cast<std::size_t>(m0 * n1 + m1)] *
               f2.values[static_cast<std::size_t>(p0 * n1 + p1)];
      }
  }
  double w = dg.axis(0).spacing();
  if (dg.dim() == 2) w *= dg.axis(1).spacing();
  double norm = std::pow(2.0 * pi * u1.h, -u1.grid.dim());
  return acc * w * norm;
}

// Semiclassical Sobolev norm of order s:
//   ||u||_{H^s} = ( (2*pi*h)^{-n} integral <xi>^{2s} |F_h u|^2 dxi )^{1/2}.
// s = 0 reproduces the L^2 norm (discrete Parseval is exact here).
inline double sobolev_norm(const SampledFunction& u, double s) {
  SampledFunction f = sft(u);
  const Grid& dg = f.grid;
  double acc = 0.0;
  for (std::int64_t flat = 0; flat < dg.size(); ++flat) {
    auto xi = dg.node(flat);
    double mag2 = std::norm(f.values[static_cast<std::size_t>(flat)]);
    double jap = 1.0 + xi[0] * xi[0] + (dg.dim() == 2 ? xi[1] * xi[1] : 0.0);
    acc += std::pow(jap, s) * mag2;
  }
  double w = dg.axis(0).spacing();
  if (dg.dim() == 2) w *= dg.axis(1).spacing();
  double norm = std::pow(2.0 * pi * u.h, -u.grid.dim());
  return std::sqrt(acc * w * norm);
}

inline double l2_norm(const SampledFunction& u) {
  double acc = 0.0;
  for (const cplx& v : u.values) acc += std::norm(v);
  double w = u.grid.axis(0).spacing();
  if (u.grid.dim() == 2) w *= u.grid.axis(1).spacing();
  return std::sqrt(acc * w);
}

}  // namespace mlk
