#pragma once

// Deterministic test-signal generators. Every generator is a pure function of
// its parameters (including the seed).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "spiro/error.hpp"
#include "spiro/seed.hpp"
#include "spiro/signal/fft.hpp"
#include "spiro/signal/recording.hpp"

namespace spiro::signal {

enum class SynthKind { Am, Breath, Forced, Noise, Speech };

struct SynthParams {
  SynthKind kind = SynthKind::Noise;
  int sample_rate_hz = 16000;
  double duration_s = 20.0;
  std::uint64_t seed = 1;
  double amplitude = 0.5;

  // am: message (1 + depth * cos(2 pi f_m t)) on a carrier with harmonics.
  double carrier_hz = 1000.0;
  double message_hz = 2.0;
  double modulation_depth = 0.5;
  std::vector<double> harmonic_gains = {1.0, 0.6, 0.4};

  // breath: band-limited bursts centered at (k + 1/2) * 60 / bpm.
  double bpm = 15.0;
  double band_low_hz = 100.0;
  double band_high_hz = 1500.0;
  double burst_fraction = 0.4;  // burst length relative to the breathing period
  double snr_db = std::numeric_limits<double>::infinity();

  // forced: single decaying burst.
  double onset_s = 1.5;
  double rise_s = 0.08;
  double decay_tau_s = 1.2;
  double exhale_s = 6.0;
  double noise_floor = 0.002;

  // speech: harmonic stack with syllabic modulation.
  double f0_hz = 150.0;
  double syllable_rate_hz = 4.0;
};

namespace detail {

inline std::size_t sample_count(const SynthParams& p) {
  require(p.sample_rate_hz > 0, ErrorKind::InvalidInput, "sample rate must be positive");
  require(p.duration_s > 0.0, ErrorKind::InvalidInput, "duration must be positive");
  return static_cast<std::size_t>(std::llround(p.duration_s * p.sample_rate_hz));
}

inline AudioRecording make_recording(const SynthParams& p, std::string id) {
  AudioRecording rec;
  rec.sample_rate_hz = p.sample_rate_hz;
  rec.source_id = std::move(id);
  return rec;
}

inline double hann_bump(double t, double center, double width) {
  const double u = (t - center) / width;
  if (std::abs(u) >= 0.5) return 0.0;
  const double c = std::cos(std::numbers::pi * u);
  return c * c;
}

}  // namespace detail

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double stddev = 1.0) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = stddev * rng.normal();
  return x;
}

/// Gaussian noise restricted to [low_hz, high_hz], synthesized directly as a
/// Hermitian spectrum with random in-band bins, scaled to unit RMS.
inline std::vector<double> band_noise(std::size_t n, int sample_rate_hz, double low_hz, double high_hz,
                                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Complex> spec(n / 2 + 1);
  const double df = static_cast<double>(sample_rate_hz) / static_cast<double>(n);
  for (std::size_t k = 1; 2 * k <= n; ++k) {
    const double f = static_cast<double>(k) * df;
    const double re = rng.normal();
    const double im = rng.normal();
    if (f < low_hz || f > high_hz) continue;
    spec[k] = Complex(re, (2 * k == n) ? 0.0 : im);
  }
  auto out = irfft(std::move(spec), n);
  double e = 0.0;
  for (double v : out) e += v * v;
  const double rms = std::sqrt(e / static_cast<double>(n));
  if (rms > 0.0)
    for (double& v : out) v /= rms;
  return out;
}

/// Adds white noise so that signal power / noise power equals `snr_db`.
inline void add_noise_snr(std::vector<double>& x, double snr_db, std::uint64_t seed) {
  if (!std::isfinite(snr_db)) return;
  const double power = energy(x) / static_cast<double>(x.size());
  const double noise_power = power / std::pow(10.0, snr_db / 10.0);
  const auto w = white_noise(x.size(), seed, std::sqrt(noise_power));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += w[i];
}

/// The AM message 1 + depth * cos(2 pi f_m t) used by synth_am.
inline double am_message(const SynthParams& p, double t) {
  return 1.0 + p.modulation_depth * std::cos(2.0 * std::numbers::pi * p.message_hz * t);
}

inline AudioRecording synth_am(const SynthParams& p) {
  const std::size_t n = detail::sample_count(p);
  require(!p.harmonic_gains.empty(), ErrorKind::InvalidInput, "need at least one carrier harmonic");
  require(p.carrier_hz * static_cast<double>(p.harmonic_gains.size()) < 0.5 * p.sample_rate_hz,
          ErrorKind::InvalidInput, "carrier harmonics exceed Nyquist");
  auto rec = detail::make_recording(p, "synth:am");
  rec.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / p.sample_rate_hz;
    double carrier = 0.0;
    for (std::size_t h = 0; h < p.harmonic_gains.size(); ++h)
      carrier += p.harmonic_gains[h] * std::cos(2.0 * std::numbers::pi * p.carrier_hz * (h + 1) * t);
    rec.samples[i] = p.amplitude * am_message(p, t) * carrier;
  }
  add_noise_snr(rec.samples, p.snr_db, derive_seed(p.seed, "am-noise"));
  return rec;
}

/// Centers of the exhalation bursts of a regular breathing pattern.
inline std::vector<double> breath_schedule(double bpm, double duration_s) {
  require(bpm > 0.0, ErrorKind::InvalidInput, "bpm must be positive");
  const double period = 60.0 / bpm;
  std::vector<double> centers;
  for (double c = 0.5 * period; c < duration_s; c += period) centers.push_back(c);
  return centers;
}

/// Band-limited noise bursts (Hann-shaped) centered at the given times.
inline AudioRecording synth_breath_schedule(const SynthParams& p, const std::vector<double>& centers,
                                            double burst_s) {
  const std::size_t n = detail::sample_count(p);
  require(p.band_low_hz < p.band_high_hz && p.band_high_hz <= 0.5 * p.sample_rate_hz,
          ErrorKind::InvalidInput, "breath band must lie below Nyquist");
  require(burst_s > 0.0, ErrorKind::InvalidInput, "burst length must be positive");
  auto rec = detail::make_recording(p, "synth:breath");
  const auto carrier = band_noise(n, p.sample_rate_hz, p.band_low_hz, p.band_high_hz, derive_seed(p.seed, "breath"));
  rec.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / p.sample_rate_hz;
    double env = 0.0;
    for (double c : centers) env += detail::hann_bump(t, c, burst_s);
    rec.samples[i] = p.amplitude * env * carrier[i];
  }
  add_noise_snr(rec.samples, p.snr_db, derive_seed(p.seed, "breath-noise"));
  return rec;
}

inline AudioRecording synth_breath(const SynthParams& p) {
  require(p.burst_fraction > 0.0 && p.burst_fraction <= 1.0, ErrorKind::InvalidInput,
          "burst fraction must lie in (0, 1]");
  return synth_breath_schedule(p, breath_schedule(p.bpm, p.duration_s), p.burst_fraction * 60.0 / p.bpm);
}

/// Noiseless flow envelope of the synthetic forced maneuver: linear rise,
/// exponential decay, cosine taper to zero at onset + exhale_s.
inline double forced_flow_shape(const SynthParams& p, double t) {
  const double u = t - p.onset_s;
  if (u <= 0.0 || u >= p.exhale_s) return 0.0;
  double f = u < p.rise_s ? u / p.rise_s : std::exp(-(u - p.rise_s) / p.decay_tau_s);
  const double taper_start = 0.85 * p.exhale_s;
  if (u > taper_start) f *= 0.5 * (1.0 + std::cos(std::numbers::pi * (u - taper_start) / (p.exhale_s - taper_start)));
  return f;
}

inline AudioRecording synth_forced(const SynthParams& p) {
  const std::size_t n = detail::sample_count(p);
  require(p.onset_s >= 0.0 && p.onset_s < p.duration_s, ErrorKind::InvalidInput, "onset outside recording");
  require(p.rise_s > 0.0 && p.decay_tau_s > 0.0 && p.exhale_s > p.rise_s, ErrorKind::InvalidInput,
          "invalid forced-maneuver timing");
  auto rec = detail::make_recording(p, "synth:forced");
  const double high = std::min(4000.0, 0.45 * p.sample_rate_hz);
  const auto carrier = band_noise(n, p.sample_rate_hz, 150.0, high, derive_seed(p.seed, "forced"));
  const auto floor = white_noise(n, derive_seed(p.seed, "forced-floor"), p.noise_floor);
  rec.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / p.sample_rate_hz;
    rec.samples[i] = p.amplitude * forced_flow_shape(p, t) * carrier[i] + floor[i];
  }
  return rec;
}

inline AudioRecording synth_noise(const SynthParams& p) {
  auto rec = detail::make_recording(p, "synth:noise");
  rec.samples = white_noise(detail::sample_count(p), derive_seed(p.seed, "noise"), p.amplitude);
  return rec;
}

/// Voiced speech stand-in: harmonics of a slowly gliding f0 (with 1/h roll-off)
/// gated by syllable-rate bursts separated by short pauses.
inline AudioRecording synth_speech(const SynthParams& p) {
  const std::size_t n = detail::sample_count(p);
  require(p.f0_hz > 0.0 && p.f0_hz < 0.25 * p.sample_rate_hz, ErrorKind::InvalidInput, "invalid f0");
  auto rec = detail::make_recording(p, "synth:speech");
  Rng rng(derive_seed(p.seed, "speech"));
  const double glide_hz = 0.3 + 0.4 * rng.uniform();
  const double glide_depth = 0.08 + 0.07 * rng.uniform();
  const double nyq = 0.5 * p.sample_rate_hz;
  const int harmonics = std::max(1, static_cast<int>(std::min(4000.0, 0.9 * nyq) / p.f0_hz));
  std::vector<double> phase_offsets(static_cast<std::size_t>(harmonics));
  for (double& v : phase_offsets) v = 2.0 * std::numbers::pi * rng.uniform();
  const double syllable_phase = rng.uniform();
  rec.samples.assign(n, 0.0);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / p.sample_rate_hz;
    const double f0 = p.f0_hz * (1.0 + glide_depth * std::sin(2.0 * std::numbers::pi * glide_hz * t));
    phase += 2.0 * std::numbers::pi * f0 / p.sample_rate_hz;
    double v = 0.0;
    for (int h = 1; h <= harmonics; ++h)
      v += std::sin(h * phase + phase_offsets[static_cast<std::size_t>(h - 1)]) / h;
    const double syl = std::sin(std::numbers::pi * std::fmod(p.syllable_rate_hz * t + syllable_phase, 1.0));
    rec.samples[i] = p.amplitude * std::pow(syl, 0.5) * v;
  }
  add_noise_snr(rec.samples, p.snr_db, derive_seed(p.seed, "speech-noise"));
  return rec;
}

inline AudioRecording synth(const SynthParams& p) {
  switch (p.kind) {
    case SynthKind::Am: return synth_am(p);
    case SynthKind::Breath: return synth_breath(p);
    case SynthKind::Forced: return synth_forced(p);
    case SynthKind::Noise: return synth_noise(p);
    case SynthKind::Speech: return synth_speech(p);
  }
  fail(ErrorKind::InvalidInput, "unknown synth kind");
}

}  // namespace spiro::signal
