#pragma once

// Seeded synthetic forced-maneuver corpus with spirometer-style ground truth.
// Each subject has lung parameters (FVC and an exhalation time constant);
// the audio shape follows them so that the features carry the signal, and
// per-recording jitter makes repeated maneuvers differ slightly.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <string>
#include <vector>

#include "spiro/seed.hpp"
#include "spiro/signal/synth.hpp"

namespace spiro::flow {

struct LungTruth {
  double fvc_L = 0.0;
  double fev1_L = 0.0;
  double pef_Ls = 0.0;
};

struct SyntheticManeuver {
  std::string subject_id;
  int repetition = 0;
  signal::SynthParams params;
  LungTruth truth;
};

/// Truth implied by an exponential exhalation of `fvc` liters with time
/// constant `tau` after a linear rise of `rise` seconds.
inline LungTruth lung_truth(double fvc, double tau, double rise) {
  LungTruth t;
  t.fvc_L = fvc;
  t.pef_Ls = fvc / (tau + 0.5 * rise);
  const double after_rise = std::max(0.0, 1.0 - rise);
  t.fev1_L = std::min(fvc, 0.5 * rise * t.pef_Ls + t.pef_Ls * tau * (1.0 - std::exp(-after_rise / tau)));
  return t;
}

inline std::vector<SyntheticManeuver> synth_forced_corpus(int subjects, int per_subject, std::uint64_t seed,
                                                          int sample_rate_hz = 16000) {
  std::vector<SyntheticManeuver> out;
  for (int s = 0; s < subjects; ++s) {
    Rng subject_rng(derive_seed(seed, "forced-subject", static_cast<std::uint64_t>(s)));
    const double fvc = subject_rng.uniform(2.5, 5.5);
    const double tau = subject_rng.uniform(0.45, 1.3);
    const double rise = subject_rng.uniform(0.05, 0.14);
    char id[16];
    std::snprintf(id, sizeof id, "S%02d", s + 1);
    for (int r = 0; r < per_subject; ++r) {
      Rng rng(derive_seed(seed, std::string("forced-rep-") + id, static_cast<std::uint64_t>(r)));
      SyntheticManeuver m;
      m.subject_id = id;
      m.repetition = r;
      auto& p = m.params;
      p.kind = signal::SynthKind::Forced;
      p.sample_rate_hz = sample_rate_hz;
      p.duration_s = 8.0;
      p.seed = derive_seed(seed, std::string("forced-audio-") + id, static_cast<std::uint64_t>(r));
      p.onset_s = rng.uniform(0.8, 1.8);
      p.rise_s = rise * rng.uniform(0.9, 1.1);
      p.decay_tau_s = tau * rng.uniform(0.95, 1.05);
      p.exhale_s = std::min(6.0, 2.0 + fvc * rng.uniform(0.7, 0.8));
      p.amplitude = rng.uniform(0.3, 0.8);
      m.truth = lung_truth(fvc * rng.uniform(0.98, 1.02), p.decay_tau_s, p.rise_s);
      out.push_back(std::move(m));
    }
  }
  return out;
}

}  // namespace spiro::flow
