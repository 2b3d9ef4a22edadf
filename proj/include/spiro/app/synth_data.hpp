#pragma once

// Writes a synthetic dataset (WAV files, accelerometer CSVs and a manifest)
// so every command can run without recorded data.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "spiro/flow/corpus.hpp"
#include "spiro/io/accel.hpp"
#include "spiro/io/manifest.hpp"
#include "spiro/io/report.hpp"
#include "spiro/io/wav.hpp"
#include "spiro/tidal/study.hpp"

namespace spiro::app {

struct SynthDataOptions {
  int subjects = 6;
  int per_subject = 3;
  std::size_t tidal_per_class = 6;
  double tidal_duration_s = 20.0;
  // Forced and tidal recordings are written once per position with identical audio.
  std::vector<std::string> positions = {"L1"};
  std::string mask_type = "n95";
  std::uint64_t seed = 1;
  int sample_rate_hz = 16000;
  bool forced = true;
  bool tidal = true;
};

/// Writes the dataset under `dir` and returns the manifest path.
inline std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SynthDataOptions& opt) {
  namespace fs = std::filesystem;
  require(!opt.positions.empty(), ErrorKind::InvalidInput, "at least one sensor position is required");
  for (const auto& p : opt.positions)
    require(io::detail::positions().count(p) > 0, ErrorKind::InvalidInput, "unknown sensor position " + p);
  fs::create_directories(dir / "audio");
  fs::create_directories(dir / "accel");
  io::Manifest m;

  if (opt.forced)
    for (const auto& s : flow::synth_forced_corpus(opt.subjects, opt.per_subject, opt.seed, opt.sample_rate_hz)) {
      const auto rec = signal::synth(s.params);
      for (const auto& pos : opt.positions) {
        char name[64];
        std::snprintf(name, sizeof name, "forced_%s_%s_r%d.wav", s.subject_id.c_str(), pos.c_str(), s.repetition);
        io::save_wav((dir / "audio" / name).string(), rec);
        io::ManifestEntry e;
        e.subject_id = s.subject_id;
        e.mask_type = opt.mask_type;
        e.maneuver = "forced";
        e.sensor_position = pos;
        e.repetition = s.repetition;
        e.audio_path = (dir / "audio" / name).string();
        e.fvc_L = s.truth.fvc_L;
        e.fev1_L = s.truth.fev1_L;
        e.pef_Ls = s.truth.pef_Ls;
        m.entries.push_back(std::move(e));
      }
    }

  if (opt.tidal) {
    const auto corpus = tidal::synth_tidal_corpus(opt.tidal_per_class, opt.tidal_duration_s,
                                                  derive_seed(opt.seed, "synth-tidal"), opt.sample_rate_hz);
    for (const auto& r : corpus) {
      for (const auto& pos : opt.positions) {
        const std::string stem = "tidal_" + r.rec.source_id + "_" + pos;
        io::save_wav((dir / "audio" / (stem + ".wav")).string(), r.rec);
        io::ManifestEntry e;
        e.subject_id = r.rec.source_id;
        e.mask_type = opt.mask_type;
        e.maneuver = "tidal";
        e.sensor_position = pos;
        e.label = tidal::kClassNames[static_cast<std::size_t>(r.label)];
        e.audio_path = (dir / "audio" / (stem + ".wav")).string();
        if (r.label == 0) {
          e.rr_bpm = r.bpm;
          const auto accel = io::synth_accel(r.bpm, opt.tidal_duration_s, derive_seed(opt.seed, r.rec.source_id));
          e.accel_path = (dir / "accel" / (stem + ".csv")).string();
          io::save_accel_csv(e.accel_path, accel);
        }
        m.entries.push_back(std::move(e));
      }
    }
  }

  io::validate(m);
  const auto path = dir / "manifest.json";
  io::write_json(path, io::manifest_to_json(m, dir));
  return path;
}

}  // namespace spiro::app
