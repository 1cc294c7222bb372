#pragma once

// Closed-form reference states. These are the workhorses of every decay
// experiment, so they are plain C++ rather than expression trees.

#include <cmath>

#include "mlk/grid.hpp"

namespace mlk {

// L^2-normalized coherent state centered at (x0, xi0):
//   (pi h)^{-1/4} e^{i x xi0 / h} e^{-(x-x0)^2 / (2h)}.
inline SampledFunction coherent_state(const Grid& g, double h, double x0,
                                      double xi0) {
  require_resolved(g, h, std::abs(xi0) + 1.0, "coherent state");
  std::vector<cplx> v(static_cast<std::size_t>(g.size()));
  const double amp = std::pow(pi * h, -0.25);
  for (std::int64_t i = 0; i < g.size(); ++i) {
    double x = g.node(i)[0];
    double mag = amp * std::exp(-(x - x0) * (x - x0) / (2.0 * h));
    double ang = x * xi0 / h;
    v[static_cast<std::size_t>(i)] =
        mag * cplx(std::cos(ang), std::sin(ang));
  }
  return SampledFunction(g, h, std::move(v));
}

// 2D product coherent state.
inline SampledFunction coherent_state2(const Grid& g, double h, double x0,
                                       double y0, double xi0, double eta0) {
  require_resolved(g, h, std::max(std::abs(xi0), std::abs(eta0)) + 1.0,
                   "coherent state");
  std::vector<cplx> v(static_cast<std::size_t>(g.size()));
  const double amp = std::pow(pi * h, -0.5);
  for (std::int64_t flat = 0; flat < g.size(); ++flat) {
    auto p = g.node(flat);
    double mag = amp * std::exp(-((p[0] - x0) * (p[0] - x0) +
                                  (p[1] - y0) * (p[1] - y0)) /
                                (2.0 * h));
    double ang = (p[0] * xi0 + p[1] * eta0) / h;
    v[static_cast<std::size_t>(flat)] = mag * cplx(std::cos(ang), std::sin(ang));
  }
  return SampledFunction(g, h, std::move(v));
}

// h-independent Gaussian e^{-x^2/(2 width^2)}.
inline SampledFunction gaussian_state(const Grid& g, double h, double width) {
  std::vector<cplx> v(static_cast<std::size_t>(g.size()));
  for (std::int64_t i = 0; i < g.size(); ++i) {
    double x = g.node(i)[0];
    v[static_cast<std::size_t>(i)] =
        cplx(std::exp(-x * x / (2.0 * width * width)), 0.0);
  }
  return SampledFunction(g, h, std::move(v));
}

// bump(x; 0, 1) e^{i x xi0 / h}: frequency-localized at xi0, spatially on
// the unit ball.
inline SampledFunction planewave_bump_state(const Grid& g, double h,
                                            double xi0) {
  require_resolved(g, h, std::abs(xi0) + 1.0, "plane-wave bump");
  std::vector<cplx> v(static_cast<std::size_t>(g.size()));
  for (std::int64_t i = 0; i < g.size(); ++i) {
    double x = g.node(i)[0];
    double ang = x * xi0 / h;
    v[static_cast<std::size_t>(i)] =
        bump_value(x, 0.0, 1.0) * cplx(std::cos(ang), std::sin(ang));
  }
  return SampledFunction(g, h, std::move(v));
}

}  // namespace mlk
