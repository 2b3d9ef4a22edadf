#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "spiro/error.hpp"
#include "spiro/features/frames.hpp"

namespace spiro::features {

inline constexpr double kLogFloor = 1e-10;

struct MelConfig {
  int mfe_bands = 40;
  int melspec_bands = 64;
  int mfcc_coeffs = 13;
  double fmin_hz = 0.0;
  double fmax_hz = 0.0;  // 0: Nyquist

  double upper_hz(int fs) const { return fmax_hz > 0.0 ? fmax_hz : 0.5 * fs; }

  void validate(int fs) const {
    require(mfe_bands >= 1 && melspec_bands >= 1 && mfcc_coeffs >= 1, ErrorKind::InvalidInput,
            "band and coefficient counts must be positive");
    require(mfcc_coeffs <= mfe_bands, ErrorKind::InvalidInput, "more cepstral coefficients than mel bands");
    require(fmin_hz >= 0.0 && fmin_hz < upper_hz(fs) && upper_hz(fs) <= 0.5 * fs, ErrorKind::InvalidInput,
            "mel range must satisfy 0 <= fmin < fmax <= Nyquist");
  }
};

// HTK mel scale.
inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// bands x (nfft/2 + 1) triangular filters with unit peaks, evenly spaced on
/// the mel scale and evaluated at each bin's exact frequency.
inline FrameMatrix mel_filterbank(int bands, std::size_t nfft, int fs, double fmin_hz, double fmax_hz) {
  const std::size_t bins = nfft / 2 + 1;
  const double lo = hz_to_mel(fmin_hz);
  const double hi = hz_to_mel(fmax_hz);
  std::vector<double> edges(static_cast<std::size_t>(bands) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bands + 1));
  FrameMatrix fb = FrameMatrix::Zero(bands, static_cast<Eigen::Index>(bins));
  for (int b = 0; b < bands; ++b) {
    const double l = edges[static_cast<std::size_t>(b)];
    const double c = edges[static_cast<std::size_t>(b) + 1];
    const double r = edges[static_cast<std::size_t>(b) + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * fs / static_cast<double>(nfft);
      double w = 0.0;
      if (f > l && f <= c) w = (f - l) / (c - l);
      else if (f > c && f < r) w = (r - f) / (r - c);
      fb(b, static_cast<Eigen::Index>(k)) = w;
    }
  }
  return fb;
}

/// Mel filter-bank energies (frames x bands) from a power spectrum.
inline FrameMatrix mel_energies(const FrameMatrix& power, int bands, std::size_t nfft, int fs, double fmin_hz,
                                double fmax_hz) {
  const auto fb = mel_filterbank(bands, nfft, fs, fmin_hz, fmax_hz);
  return power * fb.transpose();
}

inline FrameMatrix mfe(const FrameMatrix& frames, int fs, const MelConfig& mel = {}, std::size_t nfft = 0) {
  mel.validate(fs);
  if (nfft == 0) nfft = signal::next_power_of_two(static_cast<std::size_t>(frames.cols()));
  return mel_energies(power_spectrum(frames, nfft), mel.mfe_bands, nfft, fs, mel.fmin_hz, mel.upper_hz(fs));
}

inline FrameMatrix log_energies(const FrameMatrix& e) {
  return e.unaryExpr([](double v) { return std::log(v + kLogFloor); });
}

inline FrameMatrix db_energies(const FrameMatrix& e) {
  return e.unaryExpr([](double v) { return 10.0 * std::log10(v + kLogFloor); });
}

/// Orthonormal DCT-II along each row, keeping the first `coeffs` outputs.
inline FrameMatrix dct2(const FrameMatrix& x, int coeffs) {
  const auto m = x.cols();
  FrameMatrix basis(coeffs, m);
  for (int n = 0; n < coeffs; ++n) {
    const double scale = std::sqrt((n == 0 ? 1.0 : 2.0) / static_cast<double>(m));
    for (Eigen::Index j = 0; j < m; ++j)
      basis(n, j) = scale * std::cos(std::numbers::pi * n * (static_cast<double>(j) + 0.5) / static_cast<double>(m));
  }
  return x * basis.transpose();
}

/// Cepstral coefficients: DCT-II of log mel energies.
inline FrameMatrix mfcc_from_energies(const FrameMatrix& energies, int coeffs) {
  return dct2(log_energies(energies), coeffs);
}

inline FrameMatrix mfcc(const FrameMatrix& frames, int fs, const MelConfig& mel = {}, std::size_t nfft = 0) {
  return mfcc_from_energies(mfe(frames, fs, mel, nfft), mel.mfcc_coeffs);
}

/// Per-column mean/variance normalization across frames. Columns with zero
/// variance, and any input with fewer than two frames, normalize to zeros.
inline FrameMatrix mvn(const FrameMatrix& x) {
  FrameMatrix out = FrameMatrix::Zero(x.rows(), x.cols());
  if (x.rows() < 2) return out;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    const double var = (x.col(j).array() - mean).square().mean();
    if (!(var > 1e-24 * (1.0 + mean * mean))) continue;
    out.col(j) = (x.col(j).array() - mean) / std::sqrt(var);
  }
  return out;
}

}  // namespace spiro::features
