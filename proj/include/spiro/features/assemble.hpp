#pragma once

// Fixed per-variant feature schema for forced maneuvers.
//
// Blocks, in order (233 values):
//   mfe_00..39        mel filter-bank energies (40 bands)
//   log_mfe_00..39    log(mfe + 1e-10)
//   mfcc_00..12       cepstral coefficients
//   mfcc_mvn_00..09   mean/variance-normalized cepstral coefficients
//   power_00..31      log of the periodogram averaged into 32 equal-width bands
//   melspec_00..63    64-band mel spectrogram in dB
//   wave_<name>       17 temporal descriptors of the waveform segment
//   fv_<name>         17 temporal descriptors of the flow-volume curve
//
// Frame tracks are reduced to one value per column. The PEF variant uses the
// cumulative reduction (1/N^2) sum_k S_k, S_k the running sum over frames; FEV1
// and FVC use the frame mean. MVN tracks have zero mean by construction, so
// they always use the cumulative reduction.
//
// Waveform segments: PEF [onset, envelope peak] (at least pef_min_s long),
// FEV1 [onset, onset + fev1_s], FVC the whole clipped maneuver.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "spiro/error.hpp"
#include "spiro/features/frames.hpp"
#include "spiro/features/mel.hpp"
#include "spiro/features/temporal.hpp"
#include "spiro/flow/curves.hpp"
#include "spiro/flow/maneuver.hpp"

namespace spiro::features {

inline constexpr const char* kFeatureSchemaVersion = "spiro-features/1";

enum class TargetVariant { PEF, FEV1, FVC, Generic };

inline const char* to_string(TargetVariant v) {
  switch (v) {
    case TargetVariant::PEF: return "PEF";
    case TargetVariant::FEV1: return "FEV1";
    case TargetVariant::FVC: return "FVC";
    case TargetVariant::Generic: return "generic";
  }
  return "generic";
}

inline TargetVariant parse_variant(const std::string& s) {
  if (s == "PEF" || s == "pef") return TargetVariant::PEF;
  if (s == "FEV1" || s == "fev1") return TargetVariant::FEV1;
  if (s == "FVC" || s == "fvc") return TargetVariant::FVC;
  if (s == "generic") return TargetVariant::Generic;
  fail(ErrorKind::InvalidInput, "unknown target variant: " + s);
}

struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
  TargetVariant target_variant = TargetVariant::Generic;

  std::size_t size() const noexcept { return values.size(); }
};

struct FeatureConfig {
  FrameConfig frames;
  MelConfig mel;
  int mfcc_mvn_coeffs = 10;
  int power_bands = 32;
  std::size_t fv_grid_points = 200;
  double pef_min_s = 0.1;
  double fev1_s = 1.0;
};

namespace detail {

inline std::string indexed(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%02d", prefix, i);
  return buf;
}

inline Eigen::VectorXd mean_rows(const FrameMatrix& m) { return m.colwise().mean().transpose(); }

inline Eigen::VectorXd cumulative_rows(const FrameMatrix& m) {
  const auto n = m.rows();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.cols());
  for (Eigen::Index i = 0; i < n; ++i) out += static_cast<double>(n - i) * m.row(i).transpose();
  return out / static_cast<double>(n * n);
}

inline FrameMatrix band_average(const FrameMatrix& power, int bands) {
  const auto bins = power.cols();
  FrameMatrix out = FrameMatrix::Zero(power.rows(), bands);
  std::vector<double> count(static_cast<std::size_t>(bands), 0.0);
  for (Eigen::Index k = 0; k < bins; ++k) {
    const auto b = std::min<Eigen::Index>(bands - 1, k * bands / bins);
    out.col(b) += power.col(k);
    count[static_cast<std::size_t>(b)] += 1.0;
  }
  for (int b = 0; b < bands; ++b)
    if (count[static_cast<std::size_t>(b)] > 0) out.col(b) /= count[static_cast<std::size_t>(b)];
  return out;
}

/// Flow sampled on `points` equally spaced volume fractions in [0, 1].
inline std::vector<double> flow_on_volume_grid(const flow::FlowVolumeCurve& c, std::size_t points) {
  const double total = c.total_volume();
  require(total > 0.0, ErrorKind::InvalidInput, "flow-volume curve has zero volume");
  std::vector<double> out(points);
  std::size_t j = 0;
  for (std::size_t i = 0; i < points; ++i) {
    const double v = total * static_cast<double>(i) / static_cast<double>(points - 1);
    while (j + 1 < c.points.size() && c.points[j + 1].volume < v) ++j;
    if (j + 1 >= c.points.size()) {
      out[i] = c.points.back().flow;
      continue;
    }
    const auto& a = c.points[j];
    const auto& b = c.points[j + 1];
    const double span = b.volume - a.volume;
    const double u = span > 0.0 ? std::clamp((v - a.volume) / span, 0.0, 1.0) : 1.0;
    out[i] = a.flow + u * (b.flow - a.flow);
  }
  return out;
}

inline void append(FeatureVector& fv, const char* prefix, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    fv.names.push_back(indexed(prefix, static_cast<int>(i)));
    fv.values.push_back(v(i));
  }
}

inline void append_temporal(FeatureVector& fv, const char* prefix, const std::array<double, 17>& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    fv.names.push_back(std::string(prefix) + "_" + std::string(kTemporalNames[i]));
    fv.values.push_back(t[i]);
  }
}

}  // namespace detail

/// Sample range [begin, end) of the clipped maneuver used for `variant`.
inline std::pair<std::size_t, std::size_t> segment_for(TargetVariant variant, std::size_t onset, std::size_t peak,
                                                       std::size_t length, int fs, const FeatureConfig& cfg = {}) {
  auto samples = [fs](double s) { return static_cast<std::size_t>(std::lround(s * fs)); };
  switch (variant) {
    case TargetVariant::PEF: return {onset, std::min(length, std::max(peak + 1, onset + samples(cfg.pef_min_s)))};
    case TargetVariant::FEV1: return {onset, std::min(length, onset + samples(cfg.fev1_s))};
    case TargetVariant::FVC:
    case TargetVariant::Generic: return {0, length};
  }
  return {0, length};
}

inline FeatureVector assemble(const signal::AudioRecording& clipped, std::size_t onset,
                              const flow::FlowVolumeCurve& curve, const flow::ShapeVerdict& verdict,
                              TargetVariant variant, const FeatureConfig& cfg = {}) {
  if (!verdict.accepted) {
    std::string why;
    for (const auto& r : verdict.reasons) why += (why.empty() ? "" : ",") + r;
    fail(ErrorKind::RejectedManeuver, "flow-volume shape rejected (" + why + ")");
  }
  clipped.validate();
  const int fs = clipped.sample_rate_hz;
  const auto [begin, end] = segment_for(variant, onset, curve.pef_index, clipped.size(), fs, cfg);
  require(begin < end, ErrorKind::SignalTooShort, "empty analysis segment");
  const std::span<const double> segment(clipped.samples.data() + begin, end - begin);

  const auto frames = frame_signal(segment, fs, cfg.frames);
  const std::size_t nfft = cfg.frames.fft_size(fs);
  const auto power = power_spectrum(frames, nfft);
  const double fmax = cfg.mel.upper_hz(fs);
  const auto energies = mel_energies(power, cfg.mel.mfe_bands, nfft, fs, cfg.mel.fmin_hz, fmax);
  const auto cepstra = mfcc_from_energies(energies, cfg.mel.mfcc_coeffs);
  const FrameMatrix normalized = mvn(cepstra.leftCols(std::min(cfg.mfcc_mvn_coeffs, cfg.mel.mfcc_coeffs)));
  const auto melspec = db_energies(mel_energies(power, cfg.mel.melspec_bands, nfft, fs, cfg.mel.fmin_hz, fmax));
  const auto bands = detail::band_average(power, cfg.power_bands);

  const bool cumulative = variant == TargetVariant::PEF;
  auto reduce = [&](const FrameMatrix& m) {
    return cumulative ? detail::cumulative_rows(m) : detail::mean_rows(m);
  };

  FeatureVector fv;
  fv.target_variant = variant;
  detail::append(fv, "mfe", reduce(energies));
  detail::append(fv, "log_mfe", reduce(log_energies(energies)));
  detail::append(fv, "mfcc", reduce(cepstra));
  detail::append(fv, "mfcc_mvn", detail::cumulative_rows(normalized));
  detail::append(fv, "power", reduce(bands).unaryExpr([](double v) { return std::log(v + kLogFloor); }));
  detail::append(fv, "melspec", reduce(melspec));
  detail::append_temporal(fv, "wave", temporal_features(segment, fs));
  detail::append_temporal(fv, "fv", temporal_features(detail::flow_on_volume_grid(curve, cfg.fv_grid_points)));

  for (std::size_t i = 0; i < fv.values.size(); ++i)
    require(std::isfinite(fv.values[i]), ErrorKind::InvalidInput, "non-finite feature " + fv.names[i]);
  return fv;
}

inline FeatureVector assemble(const flow::ForcedAnalysis& a, TargetVariant variant, const FeatureConfig& cfg = {}) {
  return assemble(a.clipped, a.onset, a.curve, a.verdict, variant, cfg);
}

inline std::size_t schema_length(const FeatureConfig& cfg = {}) {
  return static_cast<std::size_t>(2 * cfg.mel.mfe_bands + cfg.mel.mfcc_coeffs +
                                  std::min(cfg.mfcc_mvn_coeffs, cfg.mel.mfcc_coeffs) + cfg.power_bands +
                                  cfg.mel.melspec_bands) +
         2 * kTemporalNames.size();
}

/// CSV: a comment line with the schema version, a header of names, then rows.
inline void write_csv(std::ostream& os, const std::vector<FeatureVector>& rows) {
  os << "# " << kFeatureSchemaVersion << '\n';
  if (rows.empty()) return;
  for (std::size_t i = 0; i < rows[0].names.size(); ++i) os << (i ? "," : "") << rows[0].names[i];
  os << '\n';
  const auto old = os.precision(17);
  for (const auto& r : rows) {
    require(r.names == rows[0].names, ErrorKind::SchemaError, "feature rows disagree on schema");
    for (std::size_t i = 0; i < r.values.size(); ++i) os << (i ? "," : "") << r.values[i];
    os << '\n';
  }
  os.precision(old);
}

}  // namespace spiro::features
