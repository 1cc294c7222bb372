#pragma once

// Operations that combine sampled functions across grids: tensor products
// of 1D states into 2D ones, kernels acting as integral operators, kernel
// composition, and the bilinear pairing regressed over a sweep.

#include <vector>

#include "mlk/sweep.hpp"
#include "mlk/transform.hpp"

namespace mlk {

// (a tensor b)(x, y) = a(x) b(y) on the product grid.
inline SampledFunction tensor(const SampledFunction& a,
                              const SampledFunction& b) {
  if (a.grid.dim() != 1 || b.grid.dim() != 1)
    throw invalid_argument_error("tensor: 1D factors only");
  if (a.h != b.h)
    throw invalid_argument_error("tensor: factors carry different h");
  Grid g(a.grid.axis(0), b.grid.axis(0));
  std::vector<cplx> v(static_cast<std::size_t>(g.size()));
  const std::int64_t n1 = b.grid.size();
  for (std::int64_t i = 0; i < a.grid.size(); ++i)
    for (std::int64_t j = 0; j < n1; ++j)
      v[static_cast<std::size_t>(i * n1 + j)] =
          a.values[static_cast<std::size_t>(i)] *
          b.values[static_cast<std::size_t>(j)];
  return SampledFunction(g, a.h, std::move(v));
}

// A 2D sampled function K(x, y) acting on u(y):
//   (K u)(x_i) = sum_j K(x_i, y_j) u(y_j) dy.
// Axis 1 of the kernel must match the grid of u.
inline SampledFunction kernel_apply(const SampledFunction& K,
                                    const SampledFunction& u) {
  if (K.grid.dim() != 2 || u.grid.dim() != 1)
    throw invalid_argument_error("kernel_apply: need 2D kernel, 1D input");
  if (K.grid.axis(1) != u.grid.axis(0))
    throw invalid_argument_error(
        "kernel_apply: kernel input axis does not match the function grid");
  if (K.h != u.h)
    throw invalid_argument_error("kernel_apply: h mismatch");
  const std::int64_t nx = K.grid.axis(0).n;
  const std::int64_t ny = K.grid.axis(1).n;
  const double dy = u.grid.axis(0).spacing();
  std::vector<cplx> out(static_cast<std::size_t>(nx));
  parallel_for(static_cast<std::size_t>(nx), [&](std::size_t i) {
    const cplx* row = K.values.data() + static_cast<std::int64_t>(i) * ny;
    cplx acc(0.0, 0.0);
    for (std::int64_t j = 0; j < ny; ++j)
      acc += row[j] * u.values[static_cast<std::size_t>(j)];
    out[i] = acc * dy;
  });
  return SampledFunction(Grid(K.grid.axis(0)), K.h, std::move(out));
}

// Kernel composition (K1 K2)(x, z) = int K1(x, y) K2(y, z) dy. Axis 1 of
// K1 must match axis 0 of K2.
inline SampledFunction kernel_compose(const SampledFunction& K1,
                                      const SampledFunction& K2) {
  if (K1.grid.dim() != 2 || K2.grid.dim() != 2)
    throw invalid_argument_error("kernel_compose: 2D kernels only");
  if (K1.grid.axis(1) != K2.grid.axis(0))
    throw invalid_argument_error(
        "kernel_compose: inner axes do not match");
  if (K1.h != K2.h)
    throw invalid_argument_error("kernel_compose: h mismatch");
  const std::int64_t nx = K1.grid.axis(0).n;
  const std::int64_t ny = K1.grid.axis(1).n;
  const std::int64_t nz = K2.grid.axis(1).n;
  const double dy = K1.grid.axis(1).spacing();
  Grid g(K1.grid.axis(0), K2.grid.axis(1));
  std::vector<cplx> out(static_cast<std::size_t>(nx * nz));
  parallel_for(static_cast<std::size_t>(nx), [&](std::size_t i) {
    const cplx* row1 = K1.values.data() + static_cast<std::int64_t>(i) * ny;
    for (std::int64_t k = 0; k < nz; ++k) {
      cplx acc(0.0, 0.0);
      for (std::int64_t j = 0; j < ny; ++j)
        acc += row1[j] * K2.values[static_cast<std::size_t>(j * nz + k)];
      out[i * static_cast<std::size_t>(nz) + static_cast<std::size_t>(k)] =
          acc * dy;
    }
  });
  return SampledFunction(g, K1.h, std::move(out));
}

// |integral u_h v_h dx| per sweep member, fitted on log-log axes. The
// pairing carries no conjugation, so it is small exactly when the
// localizations of u and of v reflected in frequency stay apart.
inline SweepRegression pairing_decay(const HFamily& u, const HFamily& v,
                                     double floor = default_magnitude_floor) {
  if (u.grid() != v.grid())
    throw invalid_argument_error("pairing: families share a grid");
  if (u.h_values() != v.h_values())
    throw invalid_argument_error("pairing: families share h values");
  std::vector<double> mags;
  for (std::size_t m = 0; m < u.h_values().size(); ++m)
    mags.push_back(std::abs(pair_integral(u.member(m), v.member(m))));
  return detail::fit_decay_allow_floor(u.h_values(), mags, floor);
}

}  // namespace mlk
