#pragma once

// Synthetic 3-class corpus, recording-grouped cross-validation of the window
// classifier, hyperparameter selection and the sampling-rate study.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spiro/error.hpp"
#include "spiro/seed.hpp"
#include "spiro/signal/filters.hpp"
#include "spiro/signal/synth.hpp"
#include "spiro/tidal/classify.hpp"
#include "spiro/tidal/cnn.hpp"
#include "spiro/tidal/respiration.hpp"
#include "spiro/tidal/windows.hpp"

namespace spiro::tidal {

struct LabeledRecording {
  signal::AudioRecording rec;
  int label = 0;
  double bpm = 0.0;  // tidal only
};

/// `per_class` recordings of each class. Tidal: band-limited breath bursts at
/// 8-30 bpm; speech: harmonic stacks with 100-300 Hz fundamentals; noise:
/// white. Tidal and speech carry additive white noise at 30 dB SNR.
inline std::vector<LabeledRecording> synth_tidal_corpus(std::size_t per_class, double duration_s, std::uint64_t seed,
                                                        int sample_rate_hz = 16000) {
  std::vector<LabeledRecording> out;
  for (int label = 0; label < kClassCount; ++label)
    for (std::size_t i = 0; i < per_class; ++i) {
      Rng rng(derive_seed(seed, kClassNames[static_cast<std::size_t>(label)], i));
      signal::SynthParams p;
      p.sample_rate_hz = sample_rate_hz;
      p.duration_s = duration_s;
      p.seed = rng.next_u64();
      p.amplitude = rng.uniform(0.2, 0.8);
      LabeledRecording r;
      r.label = label;
      if (label == 0) {
        p.kind = signal::SynthKind::Breath;
        p.bpm = rng.uniform(8.0, 30.0);
        p.band_low_hz = rng.uniform(80.0, 150.0);
        p.band_high_hz = std::min(rng.uniform(800.0, 1500.0), 0.45 * sample_rate_hz);
        p.burst_fraction = rng.uniform(0.35, 0.5);
        p.snr_db = 30.0;
        r.bpm = p.bpm;
      } else if (label == 1) {
        p.kind = signal::SynthKind::Speech;
        p.f0_hz = rng.uniform(100.0, 300.0);
        p.syllable_rate_hz = rng.uniform(3.0, 5.0);
        p.snr_db = 30.0;
      } else {
        p.kind = signal::SynthKind::Noise;
      }
      r.rec = signal::synth(p);
      r.rec.source_id = std::string(kClassNames[static_cast<std::size_t>(label)]) + "-" + std::to_string(i);
      out.push_back(std::move(r));
    }
  return out;
}

/// Breathing recordings with known rates (uniform in [lo, hi] bpm).
inline std::vector<LabeledRecording> synth_breath_set(std::size_t n, double duration_s, double snr_db,
                                                      std::uint64_t seed, double lo_bpm = 8.0, double hi_bpm = 30.0,
                                                      int sample_rate_hz = 16000) {
  std::vector<LabeledRecording> out;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, "breath-set", i));
    signal::SynthParams p;
    p.kind = signal::SynthKind::Breath;
    p.sample_rate_hz = sample_rate_hz;
    p.duration_s = duration_s;
    p.seed = rng.next_u64();
    p.bpm = rng.uniform(lo_bpm, hi_bpm);
    p.snr_db = snr_db;
    LabeledRecording r;
    r.rec = signal::synth(p);
    r.rec.source_id = "breath-" + std::to_string(i);
    r.bpm = p.bpm;
    out.push_back(std::move(r));
  }
  return out;
}

/// Fold index per recording: within each class a seeded shuffle, then round robin.
inline std::vector<int> stratified_folds(const std::vector<int>& labels, int k, std::uint64_t seed) {
  require(k >= 2, ErrorKind::InvalidInput, "need at least 2 folds");
  std::vector<int> fold(labels.size(), 0);
  for (int c = 0; c < kClassCount; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) idx.push_back(i);
    Rng rng(derive_seed(seed, "folds", static_cast<std::uint64_t>(c)));
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
    for (std::size_t j = 0; j < idx.size(); ++j) fold[idx[j]] = static_cast<int>(j % static_cast<std::size_t>(k));
  }
  return fold;
}

struct CvResult {
  double window_accuracy = 0.0;  // share of held-out windows labeled correctly
  double vote_accuracy = 0.0;    // share of held-out recordings whose vote is correct
  std::size_t windows = 0;
};

/// Recording-grouped k-fold CV on pre-sliced windows.
inline CvResult cross_validate(const std::vector<TidalWindowBatch>& batches, const std::vector<int>& labels,
                               const std::vector<int>& folds, const CnnConfig& cfg, std::uint64_t seed) {
  require(batches.size() == labels.size() && labels.size() == folds.size(), ErrorKind::InvalidInput,
          "batches, labels and folds differ in length");
  const int k = *std::max_element(folds.begin(), folds.end()) + 1;
  std::size_t correct = 0, total = 0, votes_right = 0;
  for (int f = 0; f < k; ++f) {
    std::vector<features::FrameMatrix> maps;
    std::vector<int> y;
    for (std::size_t r = 0; r < batches.size(); ++r)
      if (folds[r] != f)
        for (const auto& w : batches[r].windows) {
          maps.push_back(w);
          y.push_back(labels[r]);
        }
    const auto m = train_cnn(maps, y, cfg, derive_seed(seed, "fold", static_cast<std::uint64_t>(f)));
    for (std::size_t r = 0; r < batches.size(); ++r) {
      if (folds[r] != f) continue;
      const auto pred = window_labels(m, batches[r]);
      for (int p : pred) correct += p == labels[r];
      total += pred.size();
      votes_right += vote(pred).voted_label == labels[r];
    }
  }
  CvResult res;
  res.windows = total;
  res.window_accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  res.vote_accuracy = static_cast<double>(votes_right) / static_cast<double>(batches.size());
  return res;
}

/// Band-limited copies of every recording.
inline std::vector<signal::AudioRecording> prepare_all(const std::vector<LabeledRecording>& corpus) {
  std::vector<signal::AudioRecording> out;
  out.reserve(corpus.size());
  for (const auto& r : corpus) out.push_back(prepare(r.rec));
  return out;
}

inline std::vector<TidalWindowBatch> slice_all(const std::vector<signal::AudioRecording>& prepared,
                                               const TidalHyper& h, const MfeConfig& mfe = {}) {
  std::vector<TidalWindowBatch> out;
  out.reserve(prepared.size());
  for (const auto& r : prepared) out.push_back(slice_windows(r, h, mfe));
  return out;
}

inline std::vector<int> labels_of(const std::vector<LabeledRecording>& corpus) {
  std::vector<int> y;
  for (const auto& r : corpus) y.push_back(r.label);
  return y;
}

inline CvResult cross_validate(const std::vector<LabeledRecording>& corpus, const TidalHyper& h, int k,
                               const CnnConfig& cfg, std::uint64_t seed, const MfeConfig& mfe = {}) {
  const auto labels = labels_of(corpus);
  return cross_validate(slice_all(prepare_all(corpus), h, mfe), labels, stratified_folds(labels, k, seed), cfg, seed);
}

struct GridEntry {
  TidalHyper hyper;
  CvResult cv;
};

struct Selection {
  std::vector<GridEntry> entries;
  std::size_t best = 0;  // highest window accuracy; first wins ties
};

inline Selection select_hyper(const std::vector<LabeledRecording>& corpus, const std::vector<TidalHyper>& grid, int k,
                              const CnnConfig& cfg, std::uint64_t seed, const MfeConfig& mfe = {}) {
  require(!grid.empty(), ErrorKind::InvalidInput, "empty hyperparameter grid");
  const auto prepared = prepare_all(corpus);
  const auto labels = labels_of(corpus);
  const auto folds = stratified_folds(labels, k, seed);
  Selection s;
  for (const auto& h : grid) {
    s.entries.push_back({h, cross_validate(slice_all(prepared, h, mfe), labels, folds, cfg, seed)});
    if (s.entries.back().cv.window_accuracy > s.entries[s.best].cv.window_accuracy) s.best = s.entries.size() - 1;
  }
  return s;
}

/// Final classifier on every window of the corpus.
inline CnnModel train_classifier(const std::vector<LabeledRecording>& corpus, const TidalHyper& h,
                                 const CnnConfig& cfg, std::uint64_t seed, const MfeConfig& mfe = {}) {
  require(!corpus.empty(), ErrorKind::InvalidDataset, "empty corpus");
  const int fs = corpus.front().rec.sample_rate_hz;
  std::vector<features::FrameMatrix> maps;
  std::vector<int> y;
  for (const auto& r : corpus) {
    require(r.rec.sample_rate_hz == fs, ErrorKind::InvalidDataset, "corpus mixes sample rates");
    for (auto& w : slice_windows(prepare(r.rec), h, mfe).windows) {
      maps.push_back(std::move(w));
      y.push_back(r.label);
    }
  }
  auto m = train_cnn(maps, y, cfg, seed);
  m.hyper = h;
  m.mfe = mfe;
  m.sample_rate_hz = fs;
  return m;
}

// ---------------------------------------------------------------------------
// Sampling-rate study
// ---------------------------------------------------------------------------

inline const std::vector<int>& study_rates() {
  static const std::vector<int> rates = {16000, 8000, 4000, 2000, 1000};
  return rates;
}

struct StudyRow {
  int rate_hz = 0;
  double accuracy = 0.0;  // window accuracy, recording-grouped k-fold CV
  double rate_mae = 0.0;  // bpm, over accepted breath recordings
  std::size_t rejected = 0;
};

inline std::vector<LabeledRecording> decimate_all(const std::vector<LabeledRecording>& corpus, int rate_hz) {
  std::vector<LabeledRecording> out = corpus;
  for (auto& r : out) r.rec = signal::decimate(r.rec, rate_hz);
  return out;
}

/// Mean absolute respiration-rate error (bpm) over recordings that are not rejected.
inline std::pair<double, std::size_t> respiration_mae(const std::vector<LabeledRecording>& breaths,
                                                      const RespirationConfig& rc = {}) {
  double s = 0.0;
  std::size_t n = 0, rejected = 0;
  for (const auto& b : breaths) {
    const auto r = respiration_rate(b.rec, rc);
    if (r.rejected) {
      ++rejected;
      continue;
    }
    s += std::abs(r.rate_bpm - b.bpm);
    ++n;
  }
  return {n ? s / static_cast<double>(n) : 0.0, rejected};
}

inline std::vector<StudyRow> sampling_rate_study(const std::vector<LabeledRecording>& corpus,
                                                 const std::vector<LabeledRecording>& breaths,
                                                 const std::vector<int>& rates, const TidalHyper& h, int k,
                                                 const CnnConfig& cfg, std::uint64_t seed,
                                                 const MfeConfig& mfe = {}) {
  std::vector<StudyRow> rows;
  for (int rate : rates) {
    StudyRow row;
    row.rate_hz = rate;
    row.accuracy = cross_validate(decimate_all(corpus, rate), h, k, cfg, seed, mfe).window_accuracy;
    const auto [mae, rejected] = respiration_mae(decimate_all(breaths, rate));
    row.rate_mae = mae;
    row.rejected = rejected;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace spiro::tidal
