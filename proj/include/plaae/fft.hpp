#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "plaae/error.hpp"

namespace plaae {

// Iterative radix-2 FFT. Forward uses e^{-i2πkn/N}; inverse uses e^{+i2πkn/N}
// and is unnormalized (caller divides by N when reconstructing).
struct FftPlan {
  int n = 0;
  int log2n = 0;
  std::vector<std::complex<double>> twiddle;  // e^{-i2πj/N}, j in [0, N/2)
  std::vector<int> rev;
};

inline FftPlan make_fft_plan(int n) {
  if (n < 2 || (n & (n - 1)) != 0) raise(ErrorKind::config, "fft size must be a power of two, got " + std::to_string(n));
  FftPlan p;
  p.n = n;
  while ((1 << p.log2n) < n) ++p.log2n;
  p.twiddle.resize(n / 2);
  const double step = -2.0 * 3.141592653589793238462643383279502884 / n;
  for (int j = 0; j < n / 2; ++j) p.twiddle[j] = std::polar(1.0, step * j);
  p.rev.resize(n);
  for (int i = 0; i < n; ++i) {
    int r = 0;
    for (int bit = 0; bit < p.log2n; ++bit) r |= ((i >> bit) & 1) << (p.log2n - 1 - bit);
    p.rev[i] = r;
  }
  return p;
}

inline void fft(const FftPlan& p, std::complex<double>* a, bool inverse) {
  for (int i = 0; i < p.n; ++i)
    if (i < p.rev[i]) std::swap(a[i], a[p.rev[i]]);
  for (int len = 2; len <= p.n; len <<= 1) {
    const int half = len / 2;
    const int tstep = p.n / len;
    for (int start = 0; start < p.n; start += len) {
      for (int j = 0; j < half; ++j) {
        std::complex<double> w = p.twiddle[static_cast<size_t>(j) * tstep];
        if (inverse) w = std::conj(w);
        const std::complex<double> u = a[start + j];
        const std::complex<double> v = a[start + j + half] * w;
        a[start + j] = u + v;
        a[start + j + half] = u - v;
      }
    }
  }
}

}  // namespace plaae
