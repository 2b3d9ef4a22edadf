#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "spiro/error.hpp"

namespace spiro::learn {

/// |(actual - estimate) / actual| * 100.
inline double percentage_error(double actual, double estimate) {
  require(actual != 0.0, ErrorKind::InvalidInput, "percentage error is undefined for a zero reference");
  return std::abs((actual - estimate) / actual) * 100.0;
}

inline double mean(std::span<const double> v) {
  require(!v.empty(), ErrorKind::InvalidInput, "mean of empty sequence");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double mean_absolute_error(std::span<const double> truth, std::span<const double> estimate) {
  require(truth.size() == estimate.size() && !truth.empty(), ErrorKind::InvalidInput, "mismatched sequences");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(truth[i] - estimate[i]);
  return s / static_cast<double>(truth.size());
}

struct BlandAltman {
  double mean_diff = 0.0;
  double sd_diff = 0.0;  // sample standard deviation (n - 1)
  double lower = 0.0;
  double upper = 0.0;
  std::vector<std::pair<double, double>> points;  // (mean of pair, estimate - truth)
};

inline BlandAltman bland_altman(std::span<const std::pair<double, double>> truth_estimate) {
  require(truth_estimate.size() >= 2, ErrorKind::InvalidInput, "Bland-Altman needs at least 2 pairs");
  BlandAltman b;
  std::vector<double> d;
  for (const auto& [t, e] : truth_estimate) {
    d.push_back(e - t);
    b.points.emplace_back(0.5 * (t + e), e - t);
  }
  b.mean_diff = mean(d);
  double ss = 0.0;
  for (double v : d) ss += (v - b.mean_diff) * (v - b.mean_diff);
  b.sd_diff = std::sqrt(ss / static_cast<double>(d.size() - 1));
  b.lower = b.mean_diff - 2.0 * b.sd_diff;
  b.upper = b.mean_diff + 2.0 * b.sd_diff;
  return b;
}

}  // namespace spiro::learn
