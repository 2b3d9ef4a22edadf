#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "spiro/error.hpp"
#include "spiro/signal/envelope.hpp"
#include "spiro/signal/filters.hpp"
#include "spiro/signal/peaks.hpp"
#include "spiro/signal/recording.hpp"

namespace spiro::tidal {

struct RespirationConfig {
  double smoothing_passband_hz = 1.0;  // Kaiser low-pass passband edge for the envelope
  int envelope_rate_hz = 50;           // envelope is block-averaged to this rate before peak picking
  double min_separation_s = signal::kRespirationMinSeparationS;
  double prominence_fraction = signal::kRespirationProminenceFraction;
};

struct RespirationResult {
  double rate_bpm = 0.0;  // valid only when !rejected
  signal::PeakSet peak_set;
  bool rejected = false;
  std::string reason;
  double duration_s = 0.0;

  /// Breathing cycles contained in the analysed window: duration / mean gap.
  double cycles_in_window() const noexcept {
    return rejected || peak_set.mean_peak_to_peak_s <= 0.0 ? 0.0 : duration_s / peak_set.mean_peak_to_peak_s;
  }
};

inline double rate_from_gap(double mean_gap_s) {
  require(mean_gap_s > 0.0, ErrorKind::InvalidInput, "mean peak gap must be positive");
  return 60.0 / mean_gap_s;
}

/// Breathing envelope: Hilbert magnitude, Kaiser low-pass, then block means
/// down to `envelope_rate_hz`.
inline signal::Envelope breathing_envelope(const signal::AudioRecording& rec, const RespirationConfig& cfg = {}) {
  rec.validate();
  auto env = signal::hilbert_envelope(rec);
  const auto spec = signal::design_kaiser_fir(rec.sample_rate_hz, cfg.smoothing_passband_hz);
  if (static_cast<std::size_t>(spec.order) < env.size()) env = signal::smooth_fir(env, spec);
  const int block = std::max(1, rec.sample_rate_hz / std::max(1, cfg.envelope_rate_hz));
  signal::Envelope out;
  out.sample_rate_hz = rec.sample_rate_hz / block;
  const std::size_t b = static_cast<std::size_t>(block);
  for (std::size_t i = 0; i + b <= env.size(); i += b) {
    double s = 0.0;
    for (std::size_t j = 0; j < b; ++j) s += env.values[i + j];
    out.values.push_back(s / static_cast<double>(b));
  }
  return out;
}

/// Respiration rate = 60 / mean peak-to-peak time of the breathing envelope.
/// An envelope without at least two qualifying peaks yields a rejected result.
inline RespirationResult respiration_rate_from_envelope(const signal::Envelope& env, double duration_s,
                                                        const RespirationConfig& cfg = {}) {
  RespirationResult r;
  r.duration_s = duration_s;
  const double peak = env.values.empty() ? 0.0 : *std::max_element(env.values.begin(), env.values.end());
  if (!(peak > 0.0)) {
    r.rejected = true;
    r.reason = "zero-amplitude envelope";
    return r;
  }
  try {
    r.peak_set = signal::detect_peaks(env, cfg.min_separation_s, cfg.prominence_fraction * peak);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InsufficientPeaks) throw;
    r.rejected = true;
    r.reason = e.what();
    return r;
  }
  r.rate_bpm = rate_from_gap(r.peak_set.mean_peak_to_peak_s);
  return r;
}

inline RespirationResult respiration_rate(const signal::AudioRecording& rec, const RespirationConfig& cfg = {}) {
  return respiration_rate_from_envelope(breathing_envelope(rec, cfg), rec.duration_s(), cfg);
}

struct MetronomeReport {
  double theoretical_cycles = 0.0;
  double measured_cycles = 0.0;
  double deviation_cycles = 0.0;
};

/// A metronome at `bpm` clicks once per inhalation and once per exhalation,
/// so one breathing cycle spans two beats.
inline double metronome_cycles(double bpm_metronome, double duration_s) {
  require(bpm_metronome > 0.0 && duration_s > 0.0, ErrorKind::InvalidInput, "inputs must be positive");
  return bpm_metronome / 2.0 / 60.0 * duration_s;
}

inline MetronomeReport metronome_check(double measured_cycles, double bpm_metronome, double duration_s) {
  MetronomeReport m;
  m.theoretical_cycles = metronome_cycles(bpm_metronome, duration_s);
  m.measured_cycles = measured_cycles;
  m.deviation_cycles = std::abs(m.theoretical_cycles - measured_cycles);
  return m;
}

inline MetronomeReport metronome_check(const RespirationResult& audio_rate, double bpm_metronome,
                                       double duration_s) {
  const double measured = audio_rate.rejected ? 0.0 : duration_s / audio_rate.peak_set.mean_peak_to_peak_s;
  return metronome_check(measured, bpm_metronome, duration_s);
}

}  // namespace spiro::tidal
