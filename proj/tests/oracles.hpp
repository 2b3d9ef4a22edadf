#pragma once

// Test-only reference computations. Deliberately naive and independent of
// the library's FFT and filtering code.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

inline std::vector<std::complex<double>> naive_dft(std::span<const std::complex<double>> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{};
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n));
    out[k] = acc;
  }
  return out;
}

/// Amplitude of the sinusoid at `freq_hz` in x[begin, end), by projection onto
/// e^{-i 2 pi f t}. Exact for tones with an integer number of cycles in range.
inline double tone_amplitude(std::span<const double> x, double freq_hz, double fs, std::size_t begin,
                             std::size_t end) {
  std::complex<double> acc{};
  for (std::size_t i = begin; i < end; ++i)
    acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / fs);
  return 2.0 * std::abs(acc) / static_cast<double>(end - begin);
}

inline double tone_amplitude(std::span<const double> x, double freq_hz, double fs) {
  return tone_amplitude(x, freq_hz, fs, 0, x.size());
}

inline std::vector<double> sine(double freq_hz, double fs, std::size_t n, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / fs + phase);
  return x;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double db(double ratio) { return 20.0 * std::log10(ratio); }

}  // namespace oracle
