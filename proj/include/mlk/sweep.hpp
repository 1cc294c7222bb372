#pragma once

// h-sweeps and decay-order regression. "O(h^infinity)" is approximated on
// a desk scale by fitting log-magnitude against log-h over a geometric
// ladder h_k = 2^-k and reading the slope; magnitudes below an absolute
// numerical floor are excluded from the fit but remembered, because
// falling through the floor is itself the strongest decay signal we can
// measure.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "mlk/grid.hpp"

namespace mlk {

inline constexpr double default_magnitude_floor = 1e-13;

struct SweepSpec {
  int k_min = 4;
  int k_max = 10;

  std::vector<double> h_values() const {
    if (k_min > k_max)
      throw invalid_argument_error("sweep: k_min must be <= k_max");
    std::vector<double> hs;
    for (int k = k_min; k <= k_max; ++k) hs.push_back(std::pow(2.0, -k));
    return hs;
  }
  static SweepSpec default_1d() { return {4, 10}; }
  static SweepSpec default_2d() { return {4, 8}; }
};

// One function sampled at every h of a sweep, all members sharing a grid.
// The shared grid must resolve the most oscillatory member, so build it
// for the smallest h.
class HFamily {
 public:
  HFamily(Grid grid, std::vector<double> h_values,
          std::vector<SampledFunction> members)
      : grid_(grid), h_(std::move(h_values)), members_(std::move(members)) {
    if (h_.size() < 2)
      throw invalid_argument_error("h family: need at least two h values");
    if (members_.size() != h_.size())
      throw invalid_argument_error("h family: member/h count mismatch");
    for (std::size_t i = 0; i < h_.size(); ++i) {
      if (members_[i].grid != grid_)
        throw invalid_argument_error("h family: members must share the grid");
      if (members_[i].h != h_[i])
        throw invalid_argument_error("h family: member h does not match list");
    }
    for (std::size_t i = 1; i < h_.size(); ++i)
      if (!(h_[i] < h_[i - 1]))
        throw invalid_argument_error(
            "h family: h values must be strictly decreasing");
    const double ratio = h_[1] / h_[0];
    for (std::size_t i = 1; i < h_.size(); ++i)
      if (std::abs(h_[i] / h_[i - 1] - ratio) > 1e-12)
        throw invalid_argument_error(
            "h family: h values must be geometric (constant ratio)");
  }

  static HFamily generate(
      const Grid& grid, const std::vector<double>& h_values,
      const std::function<SampledFunction(const Grid&, double)>& synth) {
    std::vector<SampledFunction> members;
    members.reserve(h_values.size());
    for (double h : h_values) members.push_back(synth(grid, h));
    return HFamily(grid, h_values, std::move(members));
  }

  const Grid& grid() const { return grid_; }
  const std::vector<double>& h_values() const { return h_; }
  std::size_t size() const { return h_.size(); }
  const SampledFunction& member(std::size_t i) const { return members_[i]; }

 private:
  Grid grid_;
  std::vector<double> h_;
  std::vector<SampledFunction> members_;
};

// Least-squares fit of log(magnitude) against log(h). slope > 0 means the
// quantity decays as h -> 0 like h^slope. When fewer than 4 magnitudes
// survive the floor the sweep is "floor dominated": decay too fast to
// measure, reported as slope = +inf with r^2 = 1.
struct SweepRegression {
  std::vector<double> h_values;
  std::vector<double> magnitudes;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool floor_hit = false;
  int usable_points = 0;
  double floor = default_magnitude_floor;

  bool floor_dominated() const { return usable_points < 4; }
};

namespace detail {

inline SweepRegression fit_decay_allow_floor(
    const std::vector<double>& h_values, const std::vector<double>& magnitudes,
    double floor) {
  if (h_values.size() != magnitudes.size())
    throw invalid_argument_error("decay fit: h/magnitude count mismatch");
  if (h_values.size() < 4)
    throw invalid_argument_error("decay fit: need at least 4 sweep points");
  SweepRegression reg;
  reg.h_values = h_values;
  reg.magnitudes = magnitudes;
  reg.floor = floor;

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < h_values.size(); ++i) {
    if (!(magnitudes[i] > floor)) {
      reg.floor_hit = true;
      continue;
    }
    lx.push_back(std::log(h_values[i]));
    ly.push_back(std::log(magnitudes[i]));
  }
  reg.usable_points = static_cast<int>(lx.size());
  if (reg.floor_dominated()) {
    reg.slope = std::numeric_limits<double>::infinity();
    reg.intercept = std::numeric_limits<double>::quiet_NaN();
    reg.r_squared = 1.0;
    return reg;
  }

  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  reg.slope = sxy / sxx;
  reg.intercept = my - reg.slope * mx;
  // Magnitudes that agree to within arithmetic roundoff are a constant
  // law. Without this, residual wiggle at the 1e-15 level makes the
  // variance ratio meaningless (r^2 measures trend explained, and there
  // is no trend to explain); define r^2 = 1 for such sweeps so they read
  // as a clean flat line.
  double span = 0.0;
  for (std::size_t i = 0; i < ly.size(); ++i)
    for (std::size_t j = i + 1; j < ly.size(); ++j)
      span = std::max(span, std::abs(ly[i] - ly[j]));
  if (span < 1e-9) {
    reg.r_squared = 1.0;
  } else {
    double ssres = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      double pred = reg.intercept + reg.slope * lx[i];
      ssres += (ly[i] - pred) * (ly[i] - pred);
    }
    reg.r_squared = 1.0 - ssres / syy;
  }
  return reg;
}

}  // namespace detail

// Public fit: errors when fewer than 4 points survive the floor (the
// error records whether the floor caused it).
inline SweepRegression decay_fit(const std::vector<double>& h_values,
                                 const std::vector<double>& magnitudes,
                                 double floor = default_magnitude_floor) {
  SweepRegression reg = detail::fit_decay_allow_floor(h_values, magnitudes, floor);
  if (reg.floor_dominated())
    throw insufficient_points_error(reg.usable_points, reg.floor_hit);
  return reg;
}

}  // namespace mlk
