#pragma once

// Iterative radix-2 FFT, power-of-two lengths only. Deliberately not
// backed by an external FFT library: plans there can reorder floating
// point work between runs, and downstream reports are required to be
// byte-identical. Accuracy is ~1e-15 * log2(n), plenty under every
// tolerance used in this project.

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "mlk/core.hpp"

namespace mlk::detail {

struct FftPlan {
  std::vector<std::size_t> bitrev;
  // twiddle[s] holds e^{-2*pi*i*j/m} for stage size m = 2^(s+1), j < m/2.
  std::vector<std::vector<cplx>> twiddle;
};

inline const FftPlan& fft_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;

  auto plan = std::make_unique<FftPlan>();
  plan->bitrev.resize(n);
  std::size_t log2n = 0;
  while ((std::size_t{1} << log2n) < n) ++log2n;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < log2n; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
    plan->bitrev[i] = r;
  }
  plan->twiddle.resize(log2n);
  for (std::size_t s = 0; s < log2n; ++s) {
    std::size_t m = std::size_t{2} << s;
    plan->twiddle[s].resize(m / 2);
    for (std::size_t j = 0; j < m / 2; ++j) {
      double ang = -2.0 * pi * static_cast<double>(j) / static_cast<double>(m);
      plan->twiddle[s][j] = cplx(std::cos(ang), std::sin(ang));
    }
  }
  const FftPlan& ref = *plan;
  cache.emplace(n, std::move(plan));
  return ref;
}

// In-place DFT: sign=-1 gives sum_j x_j e^{-2*pi*i*jk/n} (no scaling),
// sign=+1 the conjugate transform (also unscaled).
inline void fft_inplace(cplx* x, std::size_t n, int sign) {
  if (n <= 1) return;
  const FftPlan& plan = fft_plan(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = plan.bitrev[i];
    if (j > i) std::swap(x[i], x[j]);
  }
  for (std::size_t s = 0; s < plan.twiddle.size(); ++s) {
    std::size_t m = std::size_t{2} << s;
    const auto& tw = plan.twiddle[s];
    for (std::size_t k = 0; k < n; k += m) {
      for (std::size_t j = 0; j < m / 2; ++j) {
        cplx w = sign < 0 ? tw[j] : std::conj(tw[j]);
        cplx t = w * x[k + j + m / 2];
        cplx u = x[k + j];
        x[k + j] = u + t;
        x[k + j + m / 2] = u - t;
      }
    }
  }
}

}  // namespace mlk::detail
