#pragma once

// Phase-space localization tests on h-families. The common scheme: cut the
// family off near a spatial point with a smooth bump, look at the
// semi-classical transform near a frequency (or along a frequency ray out
// to the grid's resolution limit), and regress the resulting magnitude
// against h on a log-log scale. Rapid decay, measured either as a steep
// clean slope or as magnitudes falling below the numerical floor, reads
// "outside"; magnitudes that stay put read "inside"; anything in between
// is reported as inconclusive rather than forced into a bucket.

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "mlk/quantize.hpp"
#include "mlk/states.hpp"
#include "mlk/sweep.hpp"
#include "mlk/transform.hpp"

namespace mlk {

enum class WfVerdict { outside, inside, inconclusive };

inline const char* to_string(WfVerdict v) {
  switch (v) {
    case WfVerdict::outside:
      return "outside";
    case WfVerdict::inside:
      return "inside";
    case WfVerdict::inconclusive:
      return "inconclusive";
  }
  return "?";
}

struct WfOptions {
  double space_radius = 0.5;      // bump cutoff radius around x0
  double freq_radius = 0.25;      // half-width of the xi probe window
  int stencil = 17;               // probe points across the window (odd)
  bool shrink_freq_window = false;  // scale the window like sqrt(h)
  double order_threshold = 6.0;   // slope at or above this reads "outside"
  double flat_threshold = 2.0;    // slope at or below this reads "inside"
  double min_r2_outside = 0.98;
  double min_r2_inside = 0.9;
  double floor = default_magnitude_floor;
  // Frequency-ray (infinite-direction) probe controls. The weight exponent
  // matches the order threshold: bounded weighted magnitudes along the ray
  // rule out decay of that order, the same two-sided reading as at finite
  // points.
  double cone_min = 1.0;          // |xi| where the ray starts
  double cone_margin = 0.9;       // fraction of the resolution limit used
  double cone_weight = 6.0;       // magnitudes weighted by <xi>^weight
  double cone_half_angle = 0.15;  // angular wedge half-width in 2D
};

struct WfPointResult {
  SweepRegression regression;
  WfVerdict verdict = WfVerdict::inconclusive;
};

inline WfVerdict classify_decay(const SweepRegression& reg,
                                const WfOptions& opt) {
  // Sub-floor magnitudes mean decay faster than any measurable slope; any
  // occurrence marks the point as outside.
  if (reg.floor_hit) return WfVerdict::outside;
  if (reg.slope >= opt.order_threshold && reg.r_squared >= opt.min_r2_outside)
    return WfVerdict::outside;
  if (reg.slope <= opt.flat_threshold && reg.r_squared >= opt.min_r2_inside)
    return WfVerdict::inside;
  return WfVerdict::inconclusive;
}

namespace detail {

inline SampledFunction space_cutoff(const SampledFunction& u,
                                    const std::array<double, 2>& x0,
                                    double radius) {
  std::vector<cplx> v(u.values.size());
  const Grid& g = u.grid;
  if (g.dim() == 1) {
    for (std::int64_t i = 0; i < g.size(); ++i)
      v[static_cast<std::size_t>(i)] =
          u.values[static_cast<std::size_t>(i)] *
          bump_value(g.axis(0).node(i), x0[0], radius);
  } else {
    for (std::int64_t i = 0; i < g.size(); ++i) {
      auto p = g.node(i);
      v[static_cast<std::size_t>(i)] =
          u.values[static_cast<std::size_t>(i)] *
          bump_value2(p[0], p[1], x0[0], x0[1], radius);
    }
  }
  return SampledFunction(g, u.h, std::move(v));
}

}  // namespace detail

// Decay test at a finite phase-space point (x0, xi0). 1D probes a fixed
// 17-point stencil across the frequency window with the exact windowed
// transform; 2D takes the maximum over dual-grid nodes inside the window
// box (the direct transform per probe would cost O(N) each).
inline WfPointResult wf_finite_test(const HFamily& fam,
                                    const std::array<double, 2>& x0,
                                    const std::array<double, 2>& xi0,
                                    const WfOptions& opt = {}) {
  if (opt.stencil < 3 || opt.stencil % 2 == 0)
    throw invalid_argument_error("wf probe stencil must be odd and >= 3");
  const Grid& g = fam.grid();
  const int dim = g.dim();
  const std::vector<double>& hs = fam.h_values();
  std::vector<double> mags(hs.size(), 0.0);

  for (std::size_t m = 0; m < hs.size(); ++m) {
    const double h = hs[m];
    double rxi = opt.freq_radius *
                 (opt.shrink_freq_window ? std::sqrt(h / hs.front()) : 1.0);
    double xi_eff = std::abs(xi0[0]) + rxi;
    if (dim == 2) xi_eff = std::max(xi_eff, std::abs(xi0[1]) + rxi);
    require_resolved(g, h, xi_eff, "wavefront probe");
    SampledFunction loc =
        detail::space_cutoff(fam.member(m), x0, opt.space_radius);
    double best = 0.0;
    if (dim == 1) {
      for (int s = 0; s < opt.stencil; ++s) {
        double t = static_cast<double>(s) /
                   static_cast<double>(opt.stencil - 1);
        double xi = xi0[0] - rxi + 2.0 * rxi * t;
        best = std::max(best, std::abs(direct_sft_at(loc, xi)));
      }
    } else {
      SampledFunction spec = sft(loc);
      const Grid& dg = spec.grid;
      for (std::int64_t k = 0; k < dg.size(); ++k) {
        auto xi = dg.node(k);
        if (std::abs(xi[0] - xi0[0]) > rxi || std::abs(xi[1] - xi0[1]) > rxi)
          continue;
        best = std::max(best, std::abs(spec.values[static_cast<std::size_t>(k)]));
      }
    }
    mags[m] = best;
  }
  WfPointResult res;
  res.regression = detail::fit_decay_allow_floor(hs, mags, opt.floor);
  res.verdict = classify_decay(res.regression, opt);
  return res;
}

inline WfPointResult wf_finite_test(const HFamily& fam, double x0, double xi0,
                                    const WfOptions& opt = {}) {
  return wf_finite_test(fam, {x0, 0.0}, {xi0, 0.0}, opt);
}

// Decay test along a frequency direction out to the resolution limit:
// localize at x0, transform, and take the maximum transform magnitude
// (weighted by <xi>^cone_weight) over dual nodes with cone_min <= |xi| <=
// cone_margin * nyquist and xi pointing into the given direction (within
// cone_half_angle in 2D). Mass escaping to infinite frequency keeps this
// from decaying; h-uniformly smooth families push it below the floor.
inline WfPointResult wf_infinite_test(const HFamily& fam,
                                      const std::array<double, 2>& x0,
                                      const std::array<double, 2>& direction,
                                      const WfOptions& opt = {}) {
  const Grid& g = fam.grid();
  const int dim = g.dim();
  double dn = std::hypot(direction[0], dim == 2 ? direction[1] : 0.0);
  if (!(dn > 0.0))
    throw invalid_argument_error("wf direction must be nonzero");
  const double e0 = direction[0] / dn;
  const double e1 = (dim == 2 ? direction[1] : 0.0) / dn;
  const std::vector<double>& hs = fam.h_values();
  std::vector<double> mags(hs.size(), 0.0);

  for (std::size_t m = 0; m < hs.size(); ++m) {
    const double h = hs[m];
    double nyq = nyquist_window(g, h, 0);
    if (dim == 2) nyq = std::min(nyq, nyquist_window(g, h, 1));
    const double hi = opt.cone_margin * nyq;
    if (hi <= opt.cone_min)
      throw invalid_argument_error(
          "frequency ray is empty: grid resolution limit below cone start");
    SampledFunction loc =
        detail::space_cutoff(fam.member(m), x0, opt.space_radius);
    SampledFunction spec = sft(loc);
    const Grid& dg = spec.grid;
    double best = 0.0;
    for (std::int64_t k = 0; k < dg.size(); ++k) {
      auto xi = dg.node(k);
      double rho = std::hypot(xi[0], dim == 2 ? xi[1] : 0.0);
      if (rho < opt.cone_min || rho > hi) continue;
      double along = (xi[0] * e0 + (dim == 2 ? xi[1] * e1 : 0.0)) / rho;
      if (dim == 1) {
        if (along <= 0.0) continue;
      } else if (along < std::cos(opt.cone_half_angle)) {
        continue;
      }
      // Weight only measurable magnitudes: raw values at the numerical
      // floor are transform roundoff, and the <xi>^weight factor (up to
      // nyquist^weight) must not promote that noise into signal.
      double raw = std::abs(spec.values[static_cast<std::size_t>(k)]);
      if (raw <= opt.floor) continue;
      double w = std::pow(1.0 + rho * rho, 0.5 * opt.cone_weight);
      best = std::max(best, w * raw);
    }
    mags[m] = best;
  }
  WfPointResult res;
  res.regression = detail::fit_decay_allow_floor(hs, mags, opt.floor);
  res.verdict = classify_decay(res.regression, opt);
  return res;
}

inline WfPointResult wf_infinite_test(const HFamily& fam, double x0,
                                      int direction,
                                      const WfOptions& opt = {}) {
  return wf_infinite_test(fam, {x0, 0.0},
                          {static_cast<double>(direction), 0.0}, opt);
}

// Same verdict through the operator route: apply the quantized phase-space
// cutoff around (x0, xi0) and regress its L^2 output norm.
inline WfPointResult wf_psdo_test(const HFamily& fam,
                                  const std::array<double, 2>& x0,
                                  const std::array<double, 2>& xi0,
                                  const WfOptions& opt = {}) {
  const std::vector<double>& hs = fam.h_values();
  SeparableSymbol cutoff = phase_space_cutoff(
      fam.grid().dim(), x0, opt.space_radius, xi0, opt.freq_radius);
  std::vector<double> mags(hs.size(), 0.0);
  for (std::size_t m = 0; m < hs.size(); ++m) {
    double xi_eff = std::abs(xi0[0]) + opt.freq_radius;
    if (fam.grid().dim() == 2)
      xi_eff = std::max(xi_eff, std::abs(xi0[1]) + opt.freq_radius);
    require_resolved(fam.grid(), hs[m], xi_eff, "wavefront cutoff");
    mags[m] = l2_norm(op_apply(cutoff, fam.member(m)));
  }
  WfPointResult res;
  res.regression = detail::fit_decay_allow_floor(hs, mags, opt.floor);
  res.verdict = classify_decay(res.regression, opt);
  return res;
}

inline WfPointResult wf_psdo_test(const HFamily& fam, double x0, double xi0,
                                  const WfOptions& opt = {}) {
  return wf_psdo_test(fam, {x0, 0.0}, {xi0, 0.0}, opt);
}

// Verdict map over a rectangle of phase-space points (1D families). Each
// spatial column shares its cutoff and transform per h; frequency probes
// then read the dual grid inside the moving window, which keeps the scan
// at O(nx * sweep * N log N) rather than quadratic cost.
struct WfScanResult {
  std::vector<double> x;
  std::vector<double> xi;
  std::vector<WfVerdict> verdicts;  // row-major over (x, xi)
  std::vector<double> slopes;
  std::vector<double> r_squared;

  const WfVerdict& at(std::size_t ix, std::size_t ixi) const {
    return verdicts[ix * xi.size() + ixi];
  }
};

inline WfScanResult wf_scan(const HFamily& fam, double x_lo, double x_hi,
                            std::size_t nx, double xi_lo, double xi_hi,
                            std::size_t nxi, const WfOptions& opt = {}) {
  if (fam.grid().dim() != 1)
    throw invalid_argument_error("wf_scan: 1D families only");
  if (nx < 2 || nxi < 2)
    throw invalid_argument_error("wf_scan: need at least a 2x2 probe grid");
  WfScanResult out;
  for (std::size_t i = 0; i < nx; ++i)
    out.x.push_back(x_lo + (x_hi - x_lo) * static_cast<double>(i) /
                               static_cast<double>(nx - 1));
  for (std::size_t j = 0; j < nxi; ++j)
    out.xi.push_back(xi_lo + (xi_hi - xi_lo) * static_cast<double>(j) /
                                static_cast<double>(nxi - 1));
  const std::vector<double>& hs = fam.h_values();
  const double xi_peak = std::max(std::abs(xi_lo), std::abs(xi_hi));
  auto window = [&](std::size_t m) {
    return opt.freq_radius *
           (opt.shrink_freq_window ? std::sqrt(hs[m] / hs.front()) : 1.0);
  };
  for (std::size_t m = 0; m < hs.size(); ++m)
    require_resolved(fam.grid(), hs[m], xi_peak + window(m), "wf scan");

  // magnitudes[(i, j)][m]: probe (x_i, xi_j) at sweep member m.
  std::vector<std::vector<double>> mags(
      nx * nxi, std::vector<double>(hs.size(), 0.0));
  for (std::size_t m = 0; m < hs.size(); ++m) {
    const double rxi = window(m);
    std::vector<SampledFunction> specs;
    specs.reserve(nx);
    for (std::size_t i = 0; i < nx; ++i)
      specs.push_back(sft(detail::space_cutoff(
          fam.member(m), {out.x[i], 0.0}, opt.space_radius)));
    parallel_for(nx, [&](std::size_t i) {
      const SampledFunction& spec = specs[i];
      const Axis& da = spec.grid.axis(0);
      for (std::size_t j = 0; j < nxi; ++j) {
        double best = 0.0;
        for (std::int64_t k = 0; k < da.n; ++k) {
          if (std::abs(da.node(k) - out.xi[j]) > rxi) continue;
          best = std::max(
              best, std::abs(spec.values[static_cast<std::size_t>(k)]));
        }
        mags[i * nxi + j][m] = best;
      }
    });
  }
  out.verdicts.resize(nx * nxi);
  out.slopes.resize(nx * nxi);
  out.r_squared.resize(nx * nxi);
  for (std::size_t p = 0; p < nx * nxi; ++p) {
    SweepRegression reg = detail::fit_decay_allow_floor(hs, mags[p], opt.floor);
    out.verdicts[p] = classify_decay(reg, opt);
    out.slopes[p] = reg.slope;
    out.r_squared[p] = reg.r_squared;
  }
  return out;
}

// Growth control: localized Sobolev norms over the sweep should follow a
// power law in h for every requested order. A family growing faster than
// any power (such as e^{1/h} times a bump) produces log-log data no line
// fits: the polynomial-law fit falls below the r^2 cutoff and the family
// is reported as not tempered. Pure power laws fit cleanly and report
// their growth order as -slope.
struct TemperednessReport {
  bool tempered = true;
  std::vector<double> orders;           // requested Sobolev orders
  std::vector<SweepRegression> fits;    // ||chi u_h||_{H^m} vs h, per order
  std::vector<double> growth;           // fitted growth exponent per order
};

inline TemperednessReport temperedness_check(
    const HFamily& fam, const std::array<double, 2>& x0, double space_radius,
    const std::vector<double>& orders = {0.0, 1.0}, double min_r2 = 0.9) {
  const std::vector<double>& hs = fam.h_values();
  if (hs.size() < 4)
    throw invalid_argument_error("temperedness check needs >= 4 sweep points");
  if (orders.empty())
    throw invalid_argument_error("temperedness check needs >= 1 order");
  TemperednessReport rep;
  rep.orders = orders;
  for (double s : orders) {
    std::vector<double> mags;
    for (std::size_t m = 0; m < hs.size(); ++m) {
      SampledFunction loc =
          detail::space_cutoff(fam.member(m), x0, space_radius);
      mags.push_back(sobolev_norm(loc, s));
    }
    SweepRegression reg =
        detail::fit_decay_allow_floor(hs, mags, default_magnitude_floor);
    // Only genuine growth can break temperedness. A vanishing family, a
    // family whose norms stay within a bounded band over the whole sweep,
    // or one whose fitted trend does not grow as h -> 0 is controlled by
    // h^0; the power-law r^2 cutoff is applied to growing families only,
    // where a bad fit means faster-than-polynomial growth.
    bool bounded = false;
    if (!reg.floor_hit) {
      double ylo = std::numeric_limits<double>::infinity();
      double yhi = -std::numeric_limits<double>::infinity();
      for (double v : mags) {
        ylo = std::min(ylo, std::log(v));
        yhi = std::max(yhi, std::log(v));
      }
      bounded = (yhi - ylo) < 0.5;
    }
    bool poly_law = reg.floor_dominated() || bounded || reg.slope >= 0.0 ||
                    reg.r_squared >= min_r2;
    if (!poly_law) rep.tempered = false;
    rep.growth.push_back(reg.floor_dominated() ? 0.0 : -reg.slope);
    rep.fits.push_back(std::move(reg));
  }
  return rep;
}

// Decay verdict for a symbol family near a phase-space point, through the
// shrinking-ball derivative maxima of symbol_decay_order. This probes the
// operator side: points where every derivative dies rapidly lie outside
// the operator's microsupport.
inline WfPointResult op_wavefront(const HSymbol& a,
                                  const std::array<double, 2>& x0,
                                  const std::array<double, 2>& xi0,
                                  const std::vector<double>& h_values,
                                  double ball_radius = 0.25,
                                  const WfOptions& opt = {}) {
  WfPointResult res;
  res.regression =
      symbol_decay_order(a, x0, xi0, ball_radius, h_values, opt.floor);
  res.verdict = classify_decay(res.regression, opt);
  return res;
}

// Stability probe: a verdict is trustworthy when halving the spatial
// cutoff radius does not change it.
inline bool wf_verdict_stable(const HFamily& fam,
                              const std::array<double, 2>& x0,
                              const std::array<double, 2>& xi0,
                              const WfOptions& opt = {}) {
  WfPointResult full = wf_finite_test(fam, x0, xi0, opt);
  WfOptions halved = opt;
  halved.space_radius *= 0.5;
  WfPointResult half = wf_finite_test(fam, x0, xi0, halved);
  return full.verdict == half.verdict;
}

}  // namespace mlk
