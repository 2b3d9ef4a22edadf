#pragma once

// Chest accelerometer traces (100 Hz) and the reference respiration rate
// derived from them.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "spiro/error.hpp"
#include "spiro/seed.hpp"
#include "spiro/signal/fft.hpp"
#include "spiro/signal/filters.hpp"
#include "spiro/signal/peaks.hpp"
#include "spiro/tidal/respiration.hpp"

namespace spiro::io {

inline constexpr int kAccelRateHz = 100;

struct AccelTrace {
  std::vector<double> t_s, x, y, z;
  int rate_hz = kAccelRateHz;

  double duration_s() const { return static_cast<double>(x.size()) / rate_hz; }

  void validate() const {
    require(rate_hz > 0, ErrorKind::InvalidInput, "accelerometer rate must be positive");
    require(!x.empty() && x.size() == y.size() && y.size() == z.size() && z.size() == t_s.size(),
            ErrorKind::InvalidInput, "accelerometer axes differ in length");
    for (std::size_t i = 1; i < t_s.size(); ++i)
      require(t_s[i] > t_s[i - 1], ErrorKind::InvalidInput, "accelerometer time stamps are not increasing");
  }

  const std::vector<double>& axis(int a) const { return a == 0 ? x : a == 1 ? y : z; }
};

struct AccelConfig {
  std::size_t smoothing_window = 20;  // samples of the moving average
  double band_low_hz = 0.1;          // dominant-axis band
  double band_high_hz = 0.7;
  double min_separation_s = signal::kRespirationMinSeparationS;
  double prominence_fraction = 0.25;  // of the smoothed signal's range
  double min_duration_s = 10.0;
};

/// Power of the mean-removed axis between lo and hi Hz.
inline double band_power(const std::vector<double>& v, int rate_hz, double lo_hz, double hi_hz) {
  double mean = 0.0;
  for (double s : v) mean += s;
  mean /= static_cast<double>(v.size());
  std::vector<double> c(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) c[i] = v[i] - mean;
  const auto spec = signal::rfft(c);
  double p = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * rate_hz / static_cast<double>(v.size());
    if (f >= lo_hz && f <= hi_hz) p += std::norm(spec[k]);
  }
  return p;
}

/// Axis (0 = x, 1 = y, 2 = z) with the most power in the breathing band; the first wins ties.
inline int dominant_axis(const AccelTrace& tr, const AccelConfig& cfg = {}) {
  int best = 0;
  double best_p = -1.0;
  for (int a = 0; a < 3; ++a) {
    const double p = band_power(tr.axis(a), tr.rate_hz, cfg.band_low_hz, cfg.band_high_hz);
    if (p > best_p) best_p = p, best = a;
  }
  return best;
}

/// Reference rate: moving average of the dominant axis, peak picking,
/// 60 / mean peak gap. A flat or peakless trace is rejected.
inline tidal::RespirationResult accel_rr(const AccelTrace& tr, const AccelConfig& cfg = {}) {
  tr.validate();
  require(tr.duration_s() >= cfg.min_duration_s, ErrorKind::SignalTooShort,
          "accelerometer trace shorter than " + std::to_string(cfg.min_duration_s) + " s");
  tidal::RespirationResult r;
  r.duration_s = tr.duration_s();
  const auto smooth = signal::moving_average(tr.axis(dominant_axis(tr, cfg)), cfg.smoothing_window);
  const auto [lo, hi] = std::minmax_element(smooth.begin(), smooth.end());
  const double range = *hi - *lo;
  if (!(range > 1e-12)) {
    r.rejected = true;
    r.reason = "flat accelerometer trace";
    return r;
  }
  try {
    r.peak_set = signal::detect_peaks(smooth, tr.rate_hz, cfg.min_separation_s, cfg.prominence_fraction * range);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InsufficientPeaks) throw;
    r.rejected = true;
    r.reason = e.what();
    return r;
  }
  r.rate_bpm = tidal::rate_from_gap(r.peak_set.mean_peak_to_peak_s);
  return r;
}

/// Chest motion for a regular breathing pattern: the dominant (z) axis peaks at
/// the exhalation-burst centers of signal::breath_schedule; x and y carry only noise.
inline AccelTrace synth_accel(double bpm, double duration_s, std::uint64_t seed, double noise = 0.1,
                              double amplitude = 1.0) {
  require(bpm > 0.0 && duration_s > 0.0, ErrorKind::InvalidInput, "bpm and duration must be positive");
  AccelTrace tr;
  Rng rng(derive_seed(seed, "accel"));
  const double period = 60.0 / bpm;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * kAccelRateHz));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kAccelRateHz;
    tr.t_s.push_back(t);
    tr.x.push_back(noise * rng.normal());
    tr.y.push_back(0.2 + noise * rng.normal());
    tr.z.push_back(amplitude * std::cos(2.0 * std::numbers::pi * (t - 0.5 * period) / period) + noise * rng.normal());
  }
  return tr;
}

/// CSV with header t_s,x,y,z.
inline AccelTrace load_accel_csv(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + path);
  AccelTrace tr;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("t_s", 0) == 0) continue;
    std::array<double, 4> v{};
    std::stringstream ss(line);
    std::string cell;
    std::size_t k = 0;
    while (std::getline(ss, cell, ',')) {
      if (k >= 4) break;
      try {
        std::size_t used = 0;
        v[k] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        fail(ErrorKind::FormatError, path + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
      }
      ++k;
    }
    require(k == 4, ErrorKind::FormatError, path + ":" + std::to_string(line_no) + ": expected 4 columns");
    tr.t_s.push_back(v[0]);
    tr.x.push_back(v[1]);
    tr.y.push_back(v[2]);
    tr.z.push_back(v[3]);
  }
  tr.validate();
  return tr;
}

inline void save_accel_csv(const std::string& path, const AccelTrace& tr) {
  tr.validate();
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + path);
  out.precision(10);
  out << "t_s,x,y,z\n";
  for (std::size_t i = 0; i < tr.x.size(); ++i)
    out << tr.t_s[i] << ',' << tr.x[i] << ',' << tr.y[i] << ',' << tr.z[i] << '\n';
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + path);
}

}  // namespace spiro::io
