#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "spiro/error.hpp"
#include "spiro/signal/recording.hpp"

namespace spiro::signal {

struct PeakSet {
  std::vector<std::size_t> indices;  // strictly increasing
  double mean_peak_to_peak_s = 0.0;
  int sample_rate_hz = 1;
};

/// Local maxima; a flat top counts once, at its middle sample.
inline std::vector<std::size_t> local_maxima(std::span<const double> x) {
  std::vector<std::size_t> peaks;
  const std::size_t n = x.size();
  if (n < 3) return peaks;
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i - 1] < x[i]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        peaks.push_back((i + ahead - 1) / 2);
        i = ahead;
        continue;
      }
    }
    ++i;
  }
  return peaks;
}

/// Topographic prominence of the peak at `p`: height above the higher of the
/// two lowest points reached before climbing above the peak on either side.
inline double prominence(std::span<const double> x, std::size_t p) {
  const double h = x[p];
  double left_min = h;
  for (std::size_t i = p; i-- > 0;) {
    if (x[i] > h) break;
    left_min = std::min(left_min, x[i]);
  }
  double right_min = h;
  for (std::size_t i = p + 1; i < x.size(); ++i) {
    if (x[i] > h) break;
    right_min = std::min(right_min, x[i]);
  }
  return h - std::max(left_min, right_min);
}

/// Peak picking in the style of scipy.signal.find_peaks: local maxima,
/// then minimum spacing (taller peaks win), then minimum prominence.
inline std::vector<std::size_t> find_peaks(std::span<const double> x, std::size_t min_distance,
                                           double min_prominence) {
  auto peaks = local_maxima(x);
  if (min_distance > 1 && peaks.size() > 1) {
    std::vector<std::size_t> order(peaks.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[peaks[a]] > x[peaks[b]]; });
    std::vector<bool> keep(peaks.size(), true);
    for (std::size_t idx : order) {
      if (!keep[idx]) continue;
      for (std::size_t j = idx; j-- > 0 && peaks[idx] - peaks[j] < min_distance;) keep[j] = false;
      for (std::size_t j = idx + 1; j < peaks.size() && peaks[j] - peaks[idx] < min_distance; ++j)
        keep[j] = false;
    }
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < peaks.size(); ++k)
      if (keep[k]) kept.push_back(peaks[k]);
    peaks = std::move(kept);
  }
  std::erase_if(peaks, [&](std::size_t p) { return prominence(x, p) < min_prominence; });
  return peaks;
}

inline constexpr double kRespirationMinSeparationS = 1.5;
inline constexpr double kRespirationProminenceFraction = 0.05;

/// Peaks at least `min_separation_s` apart with prominence >= `min_prominence`.
/// Throws InsufficientPeaks when fewer than two survive.
inline PeakSet detect_peaks(std::span<const double> x, int sample_rate_hz, double min_separation_s,
                            double min_prominence) {
  require(!x.empty(), ErrorKind::InvalidInput, "signal is empty");
  require(sample_rate_hz > 0, ErrorKind::InvalidInput, "sample rate must be positive");
  const auto distance = static_cast<std::size_t>(std::ceil(min_separation_s * sample_rate_hz));
  // A zero-prominence "peak" is numerical noise on a flat signal.
  const double floor = std::max(min_prominence, 1e-12);
  PeakSet set;
  set.sample_rate_hz = sample_rate_hz;
  set.indices = find_peaks(x, std::max<std::size_t>(1, distance), floor);
  if (set.indices.size() < 2)
    fail(ErrorKind::InsufficientPeaks, "found " + std::to_string(set.indices.size()) + " peak(s)");
  const double span = static_cast<double>(set.indices.back() - set.indices.front());
  set.mean_peak_to_peak_s = span / static_cast<double>(set.indices.size() - 1) / sample_rate_hz;
  return set;
}

inline PeakSet detect_peaks(const Envelope& env, double min_separation_s, double min_prominence) {
  return detect_peaks(env.values, env.sample_rate_hz, min_separation_s, min_prominence);
}

}  // namespace spiro::signal
