#pragma once

#include <cstddef>

#include "spiro/flow/curves.hpp"
#include "spiro/signal/envelope.hpp"
#include "spiro/signal/filters.hpp"
#include "spiro/signal/recording.hpp"

namespace spiro::flow {

struct ForcedConfig {
  double onset_threshold = signal::kOnsetThreshold;
  double onset_window_s = signal::kOnsetWindowS;
  double preroll_s = 1.0;
  double passband_edge_hz = 10.0;
  double attenuation_db = 10.0;
  ShapeRules rules;
};

/// Everything the forced pipeline derives from one recording.
struct ForcedAnalysis {
  signal::AudioRecording clipped;  // normalized, starting preroll_s before the onset
  std::size_t onset = 0;           // onset index within `clipped`
  signal::Envelope envelope;       // smoothed Hilbert envelope of `clipped`
  FlowVolumeCurve curve;
  ShapeVerdict verdict;
};

/// normalize -> onset -> clip -> Hilbert envelope -> Kaiser low-pass ->
/// flow/volume curves -> shape rules.
inline ForcedAnalysis analyze_maneuver(const signal::AudioRecording& rec, const ForcedConfig& cfg = {}) {
  ForcedAnalysis a;
  const auto norm = signal::normalize(rec);
  const std::size_t onset = signal::detect_exhalation_start(norm, cfg.onset_threshold, cfg.onset_window_s);
  a.clipped = signal::clip_forced(norm, onset, cfg.preroll_s);
  a.onset = onset - (norm.size() - a.clipped.size());
  const auto spec = signal::design_kaiser_fir(rec.sample_rate_hz, cfg.passband_edge_hz, cfg.attenuation_db);
  a.envelope = signal::smooth_fir(signal::hilbert_envelope(a.clipped), spec);
  a.curve = flow_volume(flow_time(a.envelope));
  a.verdict = shape_check(a.curve, cfg.rules);
  return a;
}

}  // namespace spiro::flow
