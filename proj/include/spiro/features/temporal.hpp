#pragma once

// Seventeen whole-signal time-series descriptors. Times are in seconds when a
// sample rate is given, otherwise in samples (fs = 1).
//
//   autocorrelation      lag-1 autocorrelation of the mean-removed signal
//   centroid             sum(t x^2) / sum(x^2)
//   mean_abs_diff        mean |x[i+1] - x[i]|
//   mean_diff            mean (x[i+1] - x[i])
//   median_abs_diff      median |x[i+1] - x[i]|
//   median_diff          median (x[i+1] - x[i])
//   distance             sum sqrt(1 + (x[i+1] - x[i])^2)
//   sum_abs_diff         sum |x[i+1] - x[i]|
//   total_energy         sum x^2 / (t[N-1] - t[0])
//   entropy              Shannon entropy of a 10-bin amplitude histogram / log2(10)
//   pk_pk_distance       |argmax - argmin| in time units
//   auc                  sum 0.5 |x[i] + x[i+1]| dt
//   abs_energy           sum x^2
//   max_peaks            count of x[i-1] < x[i] > x[i+1]
//   min_peaks            count of x[i-1] > x[i] < x[i+1]
//   slope                least-squares slope of x against t
//   zero_crossing_rate   number of sign changes of sign(x) in {-1, 0, 1}
//
// Scaling x by c > 0: energies scale by c^2; diffs, auc and slope by c;
// autocorrelation, centroid, entropy, peak counts, pk_pk_distance and zero
// crossings are invariant; distance is neither.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "spiro/error.hpp"

namespace spiro::features {

inline constexpr std::array<std::string_view, 17> kTemporalNames = {
    "autocorrelation", "centroid",     "mean_abs_diff", "mean_diff",  "median_abs_diff", "median_diff",
    "distance",        "sum_abs_diff", "total_energy",  "entropy",    "pk_pk_distance",  "auc",
    "abs_energy",      "max_peaks",    "min_peaks",     "slope",      "zero_crossing_rate"};

namespace detail {

inline double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2), v.end());
  const double upper = v[n / 2];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2));
  return 0.5 * (lower + upper);
}

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace detail

inline std::array<double, 17> temporal_features(std::span<const double> x, double fs = 1.0) {
  require(x.size() >= 3, ErrorKind::InvalidInput, "temporal features need at least 3 samples");
  require(fs > 0.0, ErrorKind::InvalidInput, "sample rate must be positive");
  const std::size_t n = x.size();
  const double dt = 1.0 / fs;

  double mean = 0.0, energy = 0.0, t_energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean += x[i];
    energy += x[i] * x[i];
    t_energy += static_cast<double>(i) * dt * x[i] * x[i];
  }
  mean /= static_cast<double>(n);

  double c0 = 0.0, c1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c0 += (x[i] - mean) * (x[i] - mean);
    if (i + 1 < n) c1 += (x[i] - mean) * (x[i + 1] - mean);
  }

  std::vector<double> d(n - 1), ad(n - 1);
  double sum_d = 0.0, sum_ad = 0.0, distance = 0.0, auc = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    d[i] = x[i + 1] - x[i];
    ad[i] = std::abs(d[i]);
    sum_d += d[i];
    sum_ad += ad[i];
    distance += std::sqrt(1.0 + d[i] * d[i]);
    auc += 0.5 * std::abs(x[i] + x[i + 1]) * dt;
  }

  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  double entropy = 0.0;
  if (*mx > *mn) {
    std::array<double, 10> hist{};
    for (double v : x) {
      const auto b = std::min<std::size_t>(9, static_cast<std::size_t>((v - *mn) / (*mx - *mn) * 10.0));
      hist[b] += 1.0;
    }
    for (double h : hist)
      if (h > 0.0) {
        const double p = h / static_cast<double>(n);
        entropy -= p * std::log2(p);
      }
    entropy /= std::log2(10.0);
  }

  double max_peaks = 0.0, min_peaks = 0.0, crossings = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (x[i - 1] < x[i] && x[i] > x[i + 1]) max_peaks += 1.0;
    if (x[i - 1] > x[i] && x[i] < x[i + 1]) min_peaks += 1.0;
  }
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (detail::sign_of(x[i]) != detail::sign_of(x[i + 1])) crossings += 1.0;

  const double t_mean = 0.5 * static_cast<double>(n - 1) * dt;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt - t_mean;
    sxy += t * (x[i] - mean);
    sxx += t * t;
  }

  const double nd = static_cast<double>(n - 1);
  return {c0 > 0.0 ? c1 / c0 : 0.0,
          energy > 0.0 ? t_energy / energy : 0.0,
          sum_ad / nd,
          sum_d / nd,
          detail::median(ad),
          detail::median(d),
          distance,
          sum_ad,
          energy / (nd * dt),
          entropy,
          std::abs(static_cast<double>(mx - x.begin()) - static_cast<double>(mn - x.begin())) * dt,
          auc,
          energy,
          max_peaks,
          min_peaks,
          sxy / sxx,
          crossings};
}

}  // namespace spiro::features
