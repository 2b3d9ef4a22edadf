#pragma once

// Tidal front end: band-limit the recording to the breathing band, slice it
// into rectangular windows and compute a log mel filter-bank energy map
// (frames x bands) per window.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "spiro/error.hpp"
#include "spiro/features/frames.hpp"
#include "spiro/features/mel.hpp"
#include "spiro/signal/envelope.hpp"
#include "spiro/signal/filters.hpp"
#include "spiro/signal/recording.hpp"

namespace spiro::tidal {

struct TidalHyper {
  double window_s = 1.0;
  double offset_fraction = 0.5;  // offset as a fraction of the window
  int fft_length = 256;

  double offset_s() const { return window_s * offset_fraction; }

  bool operator==(const TidalHyper&) const = default;
};

/// {0.5, 1, 2 s} x {25, 50, 100 %} x {256, 512}.
inline std::vector<TidalHyper> tidal_grid() {
  std::vector<TidalHyper> g;
  for (double w : {0.5, 1.0, 2.0})
    for (double o : {0.25, 0.5, 1.0})
      for (int n : {256, 512}) g.push_back({w, o, n});
  return g;
}

struct MfeConfig {
  int bands = 16;
  double fmax_hz = 500.0;     // capped at Nyquist
  double max_frame_ms = 32.0;  // frame = min(fft_length, max_frame_ms) samples, half-frame step
};

inline constexpr double kGuardPassHz = 450.0;

/// Classifier input: peak normalization, 50-500 Hz Butterworth band-pass, and
/// a 60 dB Kaiser guard low-pass (450 -> 500 Hz) so that broadband input keeps
/// well under 1 % of its energy above 500 Hz. At rates of 1 kHz and below the
/// band-pass upper edge moves to 0.45 fs and the guard is unnecessary.
inline signal::AudioRecording prepare(const signal::AudioRecording& rec) {
  rec.validate();
  auto out = signal::normalize(rec);
  const int fs = rec.sample_rate_hz;
  const double high = std::min(signal::kTidalHighHz, 0.45 * fs);
  require(high > signal::kTidalLowHz, ErrorKind::InvalidInput, "sample rate too low for the tidal band");
  const auto sos = signal::butterworth_bandpass(signal::kTidalBandpassOrder / 2, signal::kTidalLowHz, high, fs);
  out.samples = signal::sos_filtfilt(sos, out.samples);
  if (0.5 * fs > signal::kTidalHighHz)
    out.samples = signal::lowpass_zero_phase(out.samples, fs, kGuardPassHz, signal::kTidalHighHz);
  return out;
}

struct TidalWindowBatch {
  std::vector<features::FrameMatrix> windows;  // log MFE, frames x bands
  double window_s = 0.0;
  double offset_s = 0.0;
  std::string source;
};

inline std::size_t window_count(std::size_t length, std::size_t window, std::size_t offset) {
  return length < window ? 0 : (length - window) / offset + 1;
}

inline features::FrameConfig frame_config(int fs, int fft_length, const MfeConfig& mfe = {}) {
  const auto cap = static_cast<std::size_t>(std::lround(mfe.max_frame_ms * 1e-3 * fs));
  const std::size_t frame = std::min<std::size_t>(static_cast<std::size_t>(fft_length), cap);
  features::FrameConfig fc;
  fc.window_ms = 1e3 * static_cast<double>(frame) / fs;
  fc.step_ms = 1e3 * static_cast<double>(std::max<std::size_t>(1, frame / 2)) / fs;
  fc.fft_length = fft_length;
  return fc;
}

/// Log mel energies of one window.
inline features::FrameMatrix window_mfe(std::span<const double> x, int fs, int fft_length, const MfeConfig& mfe = {}) {
  const auto fc = frame_config(fs, fft_length, mfe);
  features::MelConfig mel;
  mel.mfe_bands = mfe.bands;
  mel.mfcc_coeffs = 1;
  mel.fmax_hz = std::min(mfe.fmax_hz, 0.5 * fs);
  const auto frames = features::frame_signal(x, fs, fc);
  return features::log_energies(features::mfe(frames, fs, mel, static_cast<std::size_t>(fft_length)));
}

/// count = floor((L - window) / offset) + 1 windows of `window_s` seconds.
inline TidalWindowBatch slice_windows(const signal::AudioRecording& rec, double window_s, double offset_s,
                                      int fft_length, const MfeConfig& mfe = {}) {
  rec.validate();
  require(window_s > 0.0 && offset_s > 0.0, ErrorKind::InvalidInput, "window and offset must be positive");
  require(offset_s <= window_s + 1e-12, ErrorKind::InvalidInput, "offset must not exceed the window");
  require(fft_length > 0 && signal::is_power_of_two(static_cast<std::size_t>(fft_length)), ErrorKind::InvalidInput,
          "fft length must be a power of two");
  const int fs = rec.sample_rate_hz;
  const auto w = static_cast<std::size_t>(std::lround(window_s * fs));
  const auto o = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(offset_s * fs)));
  require(w <= rec.samples.size(), ErrorKind::SignalTooShort, "window longer than the recording");
  TidalWindowBatch b;
  b.window_s = window_s;
  b.offset_s = offset_s;
  b.source = rec.source_id;
  const std::size_t count = window_count(rec.samples.size(), w, o);
  b.windows.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    b.windows.push_back(window_mfe(std::span<const double>(rec.samples).subspan(k * o, w), fs, fft_length, mfe));
  return b;
}

inline TidalWindowBatch slice_windows(const signal::AudioRecording& rec, const TidalHyper& h,
                                      const MfeConfig& mfe = {}) {
  return slice_windows(rec, h.window_s, h.offset_s(), h.fft_length, mfe);
}

}  // namespace spiro::tidal
