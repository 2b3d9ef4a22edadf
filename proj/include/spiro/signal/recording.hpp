#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "spiro/error.hpp"

namespace spiro::signal {

/// Mono PCM signal. Samples are raw PCM scale until normalize() is applied.
struct AudioRecording {
  std::vector<double> samples;
  int sample_rate_hz = 16000;
  int channel_count = 1;
  std::string source_id;

  std::size_t size() const noexcept { return samples.size(); }
  double duration_s() const noexcept {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate_hz);
  }
  std::span<const double> view() const noexcept { return samples; }

  void validate() const {
    require(sample_rate_hz > 0, ErrorKind::InvalidInput, "sample rate must be positive");
    require(channel_count == 1, ErrorKind::InvalidInput, "recording must be mono");
    require(!samples.empty(), ErrorKind::InvalidInput, "recording is empty");
  }
};

/// Nonnegative flow-rate proxy sampled at the recording rate.
struct Envelope {
  std::vector<double> values;
  int sample_rate_hz = 16000;

  std::size_t size() const noexcept { return values.size(); }
  std::span<const double> view() const noexcept { return values; }
};

inline double max_abs(std::span<const double> x) noexcept {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline double energy(std::span<const double> x) noexcept {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

}  // namespace spiro::signal
