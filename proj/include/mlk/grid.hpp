#pragma once

// Uniform tensor-product grids on boxes (dimension 1 or 2) and complex
// samples attached to a fixed semiclassical parameter h. Point counts are
// powers of two so transforms stay FFT-friendly; spacing is (hi-lo)/n with
// nodes at lo, lo+dx, ..., hi-dx (the right endpoint is the periodic wrap
// of the left one).

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mlk/core.hpp"

namespace mlk {

namespace detail {
inline bool is_pow2(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }
}  // namespace detail

struct Axis {
  double lo = 0.0;
  double hi = 0.0;
  std::int64_t n = 0;

  double spacing() const { return (hi - lo) / static_cast<double>(n); }
  double node(std::int64_t i) const {
    return lo + static_cast<double>(i) * spacing();
  }
  double length() const { return hi - lo; }
  bool operator==(const Axis& o) const {
    return lo == o.lo && hi == o.hi && n == o.n;
  }
};

class Grid {
 public:
  Grid(Axis a0) : dim_(1), ax_{a0, Axis{}} { validate(); }
  Grid(Axis a0, Axis a1) : dim_(2), ax_{a0, a1} { validate(); }

  int dim() const { return dim_; }
  const Axis& axis(int d) const { return ax_[static_cast<std::size_t>(d)]; }
  std::int64_t size() const {
    return dim_ == 1 ? ax_[0].n : ax_[0].n * ax_[1].n;
  }
  // Flat index, axis-0 major (2D: index = i0 * n1 + i1).
  std::int64_t index(std::int64_t i0, std::int64_t i1 = 0) const {
    return dim_ == 1 ? i0 : i0 * ax_[1].n + i1;
  }
  std::array<double, 2> node(std::int64_t flat) const {
    if (dim_ == 1) return {ax_[0].node(flat), 0.0};
    return {ax_[0].node(flat / ax_[1].n), ax_[1].node(flat % ax_[1].n)};
  }
  double min_spacing() const {
    double s = ax_[0].spacing();
    if (dim_ == 2) s = std::min(s, ax_[1].spacing());
    return s;
  }
  bool operator==(const Grid& o) const {
    return dim_ == o.dim_ && ax_[0] == o.ax_[0] &&
           (dim_ == 1 || ax_[1] == o.ax_[1]);
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }

 private:
  void validate() const {
    for (int d = 0; d < dim_; ++d) {
      const Axis& a = ax_[static_cast<std::size_t>(d)];
      if (!(a.lo < a.hi))
        throw invalid_argument_error("grid axis " + std::to_string(d) +
                                     ": lo must be < hi");
      if (!detail::is_pow2(a.n) || a.n < 8)
        throw invalid_argument_error(
            "grid axis " + std::to_string(d) +
            ": point count must be a power of two >= 8, got " +
            std::to_string(a.n));
    }
  }

  int dim_;
  std::array<Axis, 2> ax_;
};

inline Grid make_grid(double lo, double hi, std::int64_t n) {
  return Grid(Axis{lo, hi, n});
}
inline Grid make_grid(double lo0, double hi0, std::int64_t n0, double lo1,
                      double hi1, std::int64_t n1) {
  return Grid(Axis{lo0, hi0, n0}, Axis{lo1, hi1, n1});
}

// The dual frequency box for transforms at parameter h: frequencies
// xi_j = 2*pi*h*j/L for j in [-n/2, n/2), i.e. spacing 2*pi*h/L and
// endpoints +-pi*h/dx (the usable window).
inline Grid dual_grid(const Grid& g, double h) {
  auto dual_axis = [h](const Axis& a) {
    double dxi = 2.0 * pi * h / a.length();
    double w = dxi * static_cast<double>(a.n) / 2.0;
    return Axis{-w, w, a.n};
  };
  if (g.dim() == 1) return Grid(dual_axis(g.axis(0)));
  return Grid(dual_axis(g.axis(0)), dual_axis(g.axis(1)));
}

// Largest |xi| representable on the dual grid of g at parameter h.
inline double nyquist_window(const Grid& g, double h, int d = 0) {
  return pi * h / g.axis(d).spacing();
}

// Enforces the sampling rule spacing <= h*pi/(4*xi_eff): at least eight
// grid points per oscillation of e^{i x xi_eff / h}. Violations are hard
// errors because aliased synthesis quietly corrupts every later decay fit.
inline void require_resolved(const Grid& g, double h, double xi_eff,
                             const std::string& context = "") {
  if (xi_eff <= 0.0) return;
  double required = h * pi / (4.0 * xi_eff);
  for (int d = 0; d < g.dim(); ++d) {
    if (g.axis(d).spacing() > required)
      throw resolution_error(h, g.axis(d).spacing(), required, context);
  }
}

// Complex samples of one function on a grid at one value of h.
struct SampledFunction {
  SampledFunction(Grid grid, double h, std::vector<cplx> values)
      : grid(grid), h(h), values(std::move(values)) {
    if (!(this->h > 0.0))
      throw invalid_argument_error("sampled function: h must be positive");
    if (static_cast<std::int64_t>(this->values.size()) != grid.size())
      throw invalid_argument_error(
          "sampled function: value count does not match grid size");
    for (const cplx& v : this->values) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw invalid_argument_error(
            "sampled function: values must all be finite");
    }
  }

  Grid grid;
  double h;
  std::vector<cplx> values;

  // True when the outermost layer of nodes carries more than `rel` of the
  // peak magnitude. Transform quadrature silently assumes the function has
  // died out by the box edge; callers use this to warn or reject.
  bool boundary_mass_exceeds(double rel = 1e-12) const {
    double peak = 0.0;
    for (const cplx& v : values) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) return false;
    double edge = 0.0;
    const std::int64_t n0 = grid.axis(0).n;
    if (grid.dim() == 1) {
      edge = std::max(std::abs(values[0]),
                      std::abs(values[static_cast<std::size_t>(n0 - 1)]));
    } else {
      const std::int64_t n1 = grid.axis(1).n;
      for (std::int64_t i = 0; i < n0; ++i)
        for (std::int64_t j = 0; j < n1; ++j)
          if (i == 0 || j == 0 || i == n0 - 1 || j == n1 - 1)
            edge = std::max(
                edge, std::abs(values[static_cast<std::size_t>(i * n1 + j)]));
    }
    return edge > rel * peak;
  }
};

}  // namespace mlk
