#pragma once

// Shared basics: error types, numeric constants, and the deterministic
// parallel loop used by every module. Nothing here knows about grids or
// symbols; keep it that way.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mlk {

using cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

// Smooth compactly supported cutoff profile
//   exp(1 - d^2 / (d^2 - (t-c)^2))  for |t-c| < d,  0 otherwise,
// equal to 1 at t = c. This exact formula is relied on across modules;
// do not swap in a different mollifier.
inline double bump_value(double t, double center, double radius) {
  const double s = t - center;
  const double d2 = radius * radius;
  const double r2 = s * s;
  if (!(r2 < d2)) return 0.0;
  return std::exp(1.0 - d2 / (d2 - r2));
}

// Radial bump on R^2.
inline double bump_value2(double t0, double t1, double c0, double c1,
                          double radius) {
  const double r2 = (t0 - c0) * (t0 - c0) + (t1 - c1) * (t1 - c1);
  const double d2 = radius * radius;
  if (!(r2 < d2)) return 0.0;
  return std::exp(1.0 - d2 / (d2 - r2));
}

// Base class for everything this library throws on contract violations.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid construction arguments (bad grid shape, empty sweep, ...).
class invalid_argument_error : public error {
 public:
  explicit invalid_argument_error(const std::string& what) : error(what) {}
};

// Grid spacing too coarse for the requested oscillation at some h.
// Carries the offending h and the spacing the caller would need, so the
// CLI can name both in its diagnostic.
class resolution_error : public error {
 public:
  resolution_error(double h, double spacing, double required_spacing,
                   const std::string& context)
      : error("oscillation resolution violated" +
              (context.empty() ? std::string() : " (" + context + ")") +
              ": h=" + std::to_string(h) + " grid spacing " +
              std::to_string(spacing) + " exceeds required " +
              std::to_string(required_spacing)),
        h(h),
        spacing(spacing),
        required_spacing(required_spacing) {}
  double h;
  double spacing;
  double required_spacing;
};

// decay_fit with too few magnitudes above the numerical floor.
class insufficient_points_error : public error {
 public:
  insufficient_points_error(int usable, bool floor_hit)
      : error("decay fit needs at least 4 usable points, got " +
              std::to_string(usable) +
              (floor_hit ? " (remaining magnitudes below floor)" : "")),
        usable(usable),
        floor_hit(floor_hit) {}
  int usable;
  bool floor_hit;
};

namespace detail {

inline unsigned thread_budget() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("MLK_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0 && static_cast<unsigned long>(v) < hw)
      hw = static_cast<unsigned>(v);
  }
  return hw;
}

}  // namespace detail

// Runs body(i) for i in [0, count). Work is split into contiguous static
// blocks so each index lands on a fixed thread regardless of timing; any
// reduction over results must be done by the caller in index order, which
// keeps every pipeline bitwise reproducible. MLK_THREADS caps the pool.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  unsigned nthreads = detail::thread_budget();
  if (count == 0) return;
  if (nthreads <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  if (static_cast<std::size_t>(nthreads) > count)
    nthreads = static_cast<unsigned>(count);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  std::exception_ptr first_error = nullptr;
  std::mutex guard;
  std::size_t chunk = (count + nthreads - 1) / nthreads;
  for (unsigned t = 0; t < nthreads; ++t) {
    std::size_t begin = static_cast<std::size_t>(t) * chunk;
    std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, &first_error, &guard, begin, end]() {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mlk
