#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "spiro/error.hpp"
#include "spiro/signal/fft.hpp"
#include "spiro/signal/recording.hpp"

namespace spiro::signal {

/// Scale by max |x| so the result spans [-1, 1]. All-zero input is returned as is.
inline AudioRecording normalize(const AudioRecording& rec) {
  rec.validate();
  AudioRecording out = rec;
  const double m = max_abs(rec.samples);
  if (m == 0.0) return out;
  for (double& v : out.samples) v /= m;
  return out;
}

inline constexpr double kOnsetThreshold = 0.10;
inline constexpr double kOnsetWindowS = 0.030;

/// Short-window RMS centered on every sample; the window shrinks at the edges.
inline std::vector<double> sliding_rms(std::span<const double> x, std::size_t window) {
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];
  const std::size_t left = (window - 1) / 2;
  const std::size_t right = window - 1 - left;
  std::vector<double> rms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= left ? i - left : 0;
    const std::size_t hi = std::min(n - 1, i + right);
    const double mean = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    rms[i] = std::sqrt(std::max(0.0, mean));
  }
  return rms;
}

/// First sample whose 30 ms RMS exceeds `threshold_fraction` of the maximum RMS.
inline std::size_t detect_exhalation_start(const AudioRecording& rec,
                                           double threshold_fraction = kOnsetThreshold,
                                           double window_s = kOnsetWindowS) {
  rec.validate();
  require(threshold_fraction > 0.0 && threshold_fraction < 1.0, ErrorKind::InvalidInput,
          "threshold fraction must lie in (0, 1)");
  const auto window = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(window_s * rec.sample_rate_hz)));
  const auto rms = sliding_rms(rec.samples, std::min(window, rec.samples.size()));
  const double peak = *std::max_element(rms.begin(), rms.end());
  if (peak <= 0.0) fail(ErrorKind::OnsetNotFound, "recording is silent");
  const double level = threshold_fraction * peak;
  for (std::size_t i = 0; i < rms.size(); ++i)
    if (rms[i] > level) return i;
  fail(ErrorKind::OnsetNotFound, "threshold never exceeded");
}

/// Segment from one second before the onset to the end of the recording.
inline AudioRecording clip_forced(const AudioRecording& rec, std::size_t onset, double preroll_s = 1.0) {
  rec.validate();
  require(onset < rec.samples.size(), ErrorKind::InvalidInput, "onset beyond end of recording");
  const auto preroll = static_cast<std::size_t>(std::lround(preroll_s * rec.sample_rate_hz));
  const std::size_t start = onset >= preroll ? onset - preroll : 0;
  AudioRecording out;
  out.sample_rate_hz = rec.sample_rate_hz;
  out.source_id = rec.source_id;
  out.samples.assign(rec.samples.begin() + static_cast<std::ptrdiff_t>(start), rec.samples.end());
  return out;
}

/// |analytic signal| computed with one FFT over the whole input.
inline Envelope hilbert_envelope(const AudioRecording& rec) {
  require(rec.samples.size() >= 2, ErrorKind::InvalidInput, "Hilbert transform needs at least 2 samples");
  const std::size_t n = rec.samples.size();
  const auto half = rfft(rec.samples);
  // Analytic spectrum: DC (and Nyquist for even n) kept, positive bins doubled,
  // negative bins zero.
  std::vector<Complex> spec(n);
  spec[0] = half[0];
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) spec[k] = 2.0 * half[k];
  if (n % 2 == 0) spec[n / 2] = half[n / 2];
  const auto analytic = ifft(std::move(spec));
  Envelope env;
  env.sample_rate_hz = rec.sample_rate_hz;
  env.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) env.values[i] = std::abs(analytic[i]);
  return env;
}

}  // namespace spiro::signal
