#pragma once

// Uniform-lattice piecewise-cubic interpolation (cubic convolution with a
// 4-point stencil, quadratic ghost extrapolation at the edges). Used for
// numerically constructed functions: generating functions of charts,
// transported/corrected symbols, reconstructed amplitudes. Evaluation and
// derivatives up to order 3 are exact per cubic piece, so differentiating
// an interpolated function is well defined everywhere except the (measure
// zero) knot set.

#include <cmath>

#include "mlk/core.hpp"

namespace mlk {

enum class OutOfRange { zero, clamp, error };

namespace detail {

// Catmull-Rom weights and their t-derivatives for t in [0,1).
inline void cubic_weights(double t, int dorder, double w[4]) {
  switch (dorder) {
    case 0:
      w[0] = 0.5 * (-t * t * t + 2.0 * t * t - t);
      w[1] = 0.5 * (3.0 * t * t * t - 5.0 * t * t + 2.0);
      w[2] = 0.5 * (-3.0 * t * t * t + 4.0 * t * t + t);
      w[3] = 0.5 * (t * t * t - t * t);
      return;
    case 1:
      w[0] = 0.5 * (-3.0 * t * t + 4.0 * t - 1.0);
      w[1] = 0.5 * (9.0 * t * t - 10.0 * t);
      w[2] = 0.5 * (-9.0 * t * t + 8.0 * t + 1.0);
      w[3] = 0.5 * (3.0 * t * t - 2.0 * t);
      return;
    case 2:
      w[0] = 0.5 * (-6.0 * t + 4.0);
      w[1] = 0.5 * (18.0 * t - 10.0);
      w[2] = 0.5 * (-18.0 * t + 8.0);
      w[3] = 0.5 * (6.0 * t - 2.0);
      return;
    case 3:
      w[0] = -3.0;
      w[1] = 9.0;
      w[2] = -9.0;
      w[3] = 3.0;
      return;
    default:
      w[0] = w[1] = w[2] = w[3] = 0.0;
      return;
  }
}

}  // namespace detail

class UniformTable1D {
 public:
  UniformTable1D(double lo, double dx, std::vector<cplx> f,
                 OutOfRange policy = OutOfRange::clamp)
      : lo_(lo), dx_(dx), f_(std::move(f)), policy_(policy) {
    if (f_.size() < 4)
      throw invalid_argument_error("interp table needs at least 4 samples");
    if (!(dx_ > 0.0))
      throw invalid_argument_error("interp table spacing must be positive");
  }

  double lo() const { return lo_; }
  double hi() const { return lo_ + dx_ * static_cast<double>(f_.size() - 1); }
  double spacing() const { return dx_; }
  std::size_t size() const { return f_.size(); }

  cplx eval(double x, int dorder = 0) const {
    const std::int64_t n = static_cast<std::int64_t>(f_.size());
    double s = (x - lo_) / dx_;
    if (s < 0.0 || s > static_cast<double>(n - 1)) {
      switch (policy_) {
        case OutOfRange::zero:
          return cplx(0.0, 0.0);
        case OutOfRange::clamp:
          s = std::min(std::max(s, 0.0), static_cast<double>(n - 1));
          break;
        case OutOfRange::error:
          throw invalid_argument_error("interp: query outside table range");
      }
    }
    std::int64_t i = static_cast<std::int64_t>(std::floor(s));
    if (i >= n - 1) i = n - 2;
    double t = s - static_cast<double>(i);
    double w[4];
    detail::cubic_weights(t, dorder, w);
    cplx acc(0.0, 0.0);
    for (int k = -1; k <= 2; ++k) acc += w[k + 1] * sample(i + k);
    return acc / std::pow(dx_, dorder);
  }

 private:
  cplx sample(std::int64_t i) const {
    const std::int64_t n = static_cast<std::int64_t>(f_.size());
    if (i < 0) return 3.0 * f_[0] - 3.0 * f_[1] + f_[2];
    if (i >= n) {
      return 3.0 * f_[static_cast<std::size_t>(n - 1)] -
             3.0 * f_[static_cast<std::size_t>(n - 2)] +
             f_[static_cast<std::size_t>(n - 3)];
    }
    return f_[static_cast<std::size_t>(i)];
  }

  double lo_, dx_;
  std::vector<cplx> f_;
  OutOfRange policy_;
};

class UniformTable2D {
 public:
  UniformTable2D(double lo0, double d0, std::int64_t n0, double lo1, double d1,
                 std::int64_t n1, std::vector<cplx> f,
                 OutOfRange policy = OutOfRange::zero)
      : lo0_(lo0), d0_(d0), n0_(n0), lo1_(lo1), d1_(d1), n1_(n1),
        f_(std::move(f)), policy_(policy) {
    if (n0_ < 4 || n1_ < 4)
      throw invalid_argument_error("interp table needs at least 4x4 samples");
    if (static_cast<std::int64_t>(f_.size()) != n0_ * n1_)
      throw invalid_argument_error("interp table size mismatch");
    if (!(d0_ > 0.0) || !(d1_ > 0.0))
      throw invalid_argument_error("interp table spacing must be positive");
  }

  cplx eval(double x0, double x1, int dorder0 = 0, int dorder1 = 0) const {
    double s0 = (x0 - lo0_) / d0_;
    double s1 = (x1 - lo1_) / d1_;
    const double m0 = static_cast<double>(n0_ - 1);
    const double m1 = static_cast<double>(n1_ - 1);
    if (s0 < 0.0 || s0 > m0 || s1 < 0.0 || s1 > m1) {
      switch (policy_) {
        case OutOfRange::zero:
          return cplx(0.0, 0.0);
        case OutOfRange::clamp:
          s0 = std::min(std::max(s0, 0.0), m0);
          s1 = std::min(std::max(s1, 0.0), m1);
          break;
        case OutOfRange::error:
          throw invalid_argument_error("interp: query outside table range");
      }
    }
    std::int64_t i0 = std::min(static_cast<std::int64_t>(std::floor(s0)),
                               n0_ - 2);
    std::int64_t i1 = std::min(static_cast<std::int64_t>(std::floor(s1)),
                               n1_ - 2);
    double w0[4], w1[4];
    detail::cubic_weights(s0 - static_cast<double>(i0), dorder0, w0);
    detail::cubic_weights(s1 - static_cast<double>(i1), dorder1, w1);
    cplx acc(0.0, 0.0);
    for (int a = -1; a <= 2; ++a) {
      cplx row(0.0, 0.0);
      for (int b = -1; b <= 2; ++b)
        row += w1[b + 1] * sample(i0 + a, i1 + b);
      acc += w0[a + 1] * row;
    }
    return acc / (std::pow(d0_, dorder0) * std::pow(d1_, dorder1));
  }

 private:
  cplx raw(std::int64_t i, std::int64_t j) const {
    return f_[static_cast<std::size_t>(i * n1_ + j)];
  }
  cplx sample(std::int64_t i, std::int64_t j) const {
    // Ghost rows/columns by quadratic extrapolation, applied per axis.
    if (i < 0) return 3.0 * sample(0, j) - 3.0 * sample(1, j) + sample(2, j);
    if (i >= n0_)
      return 3.0 * sample(n0_ - 1, j) - 3.0 * sample(n0_ - 2, j) +
             sample(n0_ - 3, j);
    if (j < 0) return 3.0 * raw(i, 0) - 3.0 * raw(i, 1) + raw(i, 2);
    if (j >= n1_)
      return 3.0 * raw(i, n1_ - 1) - 3.0 * raw(i, n1_ - 2) + raw(i, n1_ - 3);
    return raw(i, j);
  }

  double lo0_, d0_;
  std::int64_t n0_;
  double lo1_, d1_;
  std::int64_t n1_;
  std::vector<cplx> f_;
  OutOfRange policy_;
};

}  // namespace mlk
