#pragma once

// Manifest adapters for the tidal pipeline.

#include <string>
#include <vector>

#include "spiro/error.hpp"
#include "spiro/io/accel.hpp"
#include "spiro/io/manifest.hpp"
#include "spiro/io/wav.hpp"
#include "spiro/tidal/respiration.hpp"
#include "spiro/tidal/study.hpp"

namespace spiro::app {

/// Reference rate of a tidal entry: rr_bpm when given, otherwise the
/// accelerometer estimate. Returns a negative value when neither is usable.
inline double reference_rate(const io::ManifestEntry& e) {
  if (e.rr_bpm) return *e.rr_bpm;
  if (!e.accel_path.empty()) {
    const auto r = io::accel_rr(io::load_accel_csv(e.accel_path));
    if (!r.rejected) return r.rate_bpm;
  }
  return -1.0;
}

/// Labeled recordings of the tidal entries (label from the entry's class).
inline std::vector<tidal::LabeledRecording> tidal_corpus(const io::Manifest& m) {
  std::vector<tidal::LabeledRecording> out;
  for (const auto* e : m.of("tidal")) {
    tidal::LabeledRecording r;
    r.rec = io::load_wav(e->audio_path);
    r.rec.source_id = e->key();
    r.label = tidal::parse_class(e->label);
    r.bpm = r.label == 0 ? reference_rate(*e) : 0.0;
    out.push_back(std::move(r));
  }
  require(!out.empty(), ErrorKind::InvalidDataset, "manifest has no tidal entries");
  return out;
}

/// Tidal-class recordings with a usable reference rate.
inline std::vector<tidal::LabeledRecording> breathing_only(const std::vector<tidal::LabeledRecording>& corpus) {
  std::vector<tidal::LabeledRecording> out;
  for (const auto& r : corpus)
    if (r.label == 0 && r.bpm > 0.0) out.push_back(r);
  return out;
}

}  // namespace spiro::app
