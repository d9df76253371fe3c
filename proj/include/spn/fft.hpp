#pragma once

#include <spn/error.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace spn::fft {

using Complex = std::complex<double>;

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 Cooley-Tukey. `inverse` applies the 1/n scale.
inline void transform(std::span<Complex> a, bool inverse = false) {
  const std::size_t n = a.size();
  require(is_power_of_two(n), ErrorCode::InvalidArgument, "FFT length must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      const Complex w(std::cos(ang * static_cast<double>(k)), std::sin(ang * static_cast<double>(k)));
      for (std::size_t i = k; i < n; i += len) {
        const Complex u = a[i];
        const Complex v = a[i + half] * w;
        a[i] = u + v;
        a[i + half] = u - v;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

inline std::vector<Complex> forward(std::vector<Complex> a) {
  transform(a, false);
  return a;
}

inline std::vector<Complex> inverse(std::vector<Complex> a) {
  transform(a, true);
  return a;
}

}  // namespace spn::fft
