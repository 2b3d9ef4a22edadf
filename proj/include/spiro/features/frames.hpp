#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>

#include "spiro/error.hpp"
#include "spiro/signal/fft.hpp"
#include "spiro/signal/recording.hpp"

namespace spiro::features {

/// Row-major matrix: one row per frame.
using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FrameConfig {
  double window_ms = 30.0;
  double step_ms = 15.0;
  int fft_length = 0;  // 0: smallest power of two holding one window

  std::size_t window_samples(int fs) const {
    return static_cast<std::size_t>(std::lround(window_ms * 1e-3 * fs));
  }
  std::size_t step_samples(int fs) const { return static_cast<std::size_t>(std::lround(step_ms * 1e-3 * fs)); }
  std::size_t fft_size(int fs) const {
    return fft_length > 0 ? static_cast<std::size_t>(fft_length) : signal::next_power_of_two(window_samples(fs));
  }

  void validate(int fs) const {
    require(window_ms > 0.0 && step_ms > 0.0, ErrorKind::InvalidInput, "window and step must be positive");
    require(step_ms <= window_ms, ErrorKind::InvalidInput, "step must not exceed the window");
    require(window_samples(fs) >= 1 && step_samples(fs) >= 1, ErrorKind::InvalidInput,
            "window or step shorter than one sample");
    require(fft_length >= 0, ErrorKind::InvalidInput, "fft length must be positive");
    const std::size_t n = fft_size(fs);
    require(signal::is_power_of_two(n), ErrorKind::InvalidInput, "fft length must be a power of two");
    require(n >= window_samples(fs), ErrorKind::InvalidInput, "fft length shorter than the window");
  }
};

inline std::size_t frame_count(std::size_t n_samples, std::size_t window, std::size_t step) {
  return n_samples < window ? 0 : (n_samples - window) / step + 1;
}

/// Rectangular frames: count = floor((N - W) / S) + 1, each W samples long.
inline FrameMatrix frame_signal(std::span<const double> x, int fs, const FrameConfig& cfg = {}) {
  cfg.validate(fs);
  const std::size_t w = cfg.window_samples(fs);
  const std::size_t s = cfg.step_samples(fs);
  require(x.size() >= w, ErrorKind::SignalTooShort, "signal shorter than one analysis window");
  const std::size_t count = frame_count(x.size(), w, s);
  FrameMatrix frames(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(w));
  for (std::size_t f = 0; f < count; ++f)
    for (std::size_t j = 0; j < w; ++j) frames(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(j)) = x[f * s + j];
  return frames;
}

inline FrameMatrix frame_signal(const signal::AudioRecording& rec, const FrameConfig& cfg = {}) {
  rec.validate();
  return frame_signal(rec.samples, rec.sample_rate_hz, cfg);
}

/// One-sided periodogram with nfft/2 + 1 bins per frame, scaled so that each
/// row sums to the frame energy (Parseval).
inline FrameMatrix power_spectrum(const FrameMatrix& frames, std::size_t nfft) {
  require(nfft >= static_cast<std::size_t>(frames.cols()), ErrorKind::InvalidInput, "fft length shorter than frame");
  const std::size_t bins = nfft / 2 + 1;
  FrameMatrix out(frames.rows(), static_cast<Eigen::Index>(bins));
  std::vector<double> row(static_cast<std::size_t>(frames.cols()));
  for (Eigen::Index f = 0; f < frames.rows(); ++f) {
    for (Eigen::Index j = 0; j < frames.cols(); ++j) row[static_cast<std::size_t>(j)] = frames(f, j);
    const auto spec = signal::rfft(row, nfft);
    for (std::size_t k = 0; k < bins; ++k) {
      const bool edge = k == 0 || 2 * k == nfft;
      out(f, static_cast<Eigen::Index>(k)) = (edge ? 1.0 : 2.0) * std::norm(spec[k]) / static_cast<double>(nfft);
    }
  }
  return out;
}

}  // namespace spiro::features
