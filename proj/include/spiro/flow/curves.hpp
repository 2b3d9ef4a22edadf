#pragma once

// Flow-proxy curves derived from the smoothed envelope and a rule-based check
// of flow-volume shape. Units are uncalibrated: flow is envelope amplitude and
// volume is its running sum.

#include <algorithm>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "spiro/error.hpp"
#include "spiro/signal/recording.hpp"

namespace spiro::flow {

struct FlowTimeCurve {
  std::vector<double> flow;
  int sample_rate_hz = 16000;

  std::size_t size() const noexcept { return flow.size(); }
};

struct VolumeTimeCurve {
  std::vector<double> volume;
  int sample_rate_hz = 16000;

  std::size_t size() const noexcept { return volume.size(); }
};

struct FlowVolumePoint {
  double volume = 0.0;
  double flow = 0.0;
};

struct FlowVolumeCurve {
  std::vector<FlowVolumePoint> points;
  std::size_t pef_index = 0;
  int sample_rate_hz = 16000;

  std::size_t size() const noexcept { return points.size(); }
  double pef() const noexcept { return points.empty() ? 0.0 : points[pef_index].flow; }
  double total_volume() const noexcept { return points.empty() ? 0.0 : points.back().volume; }
};

inline FlowTimeCurve flow_time(const signal::Envelope& env) {
  require(!env.values.empty(), ErrorKind::InvalidInput, "empty envelope");
  FlowTimeCurve f;
  f.sample_rate_hz = env.sample_rate_hz;
  f.flow = env.values;
  for (double& v : f.flow) v = std::max(0.0, v);
  return f;
}

/// volume[k] = sum of flow[0..k].
inline VolumeTimeCurve volume_time(const FlowTimeCurve& f) {
  require(!f.flow.empty(), ErrorKind::InvalidInput, "empty flow curve");
  VolumeTimeCurve v;
  v.sample_rate_hz = f.sample_rate_hz;
  v.volume.resize(f.flow.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < f.flow.size(); ++i) {
    acc += f.flow[i];
    v.volume[i] = acc;
  }
  return v;
}

/// Pairs each flow sample with the cumulative volume at the same instant.
/// pef_index is the first sample attaining the maximum flow.
inline FlowVolumeCurve flow_volume(const FlowTimeCurve& f) {
  const auto v = volume_time(f);
  FlowVolumeCurve c;
  c.sample_rate_hz = f.sample_rate_hz;
  c.points.resize(f.flow.size());
  for (std::size_t i = 0; i < f.flow.size(); ++i) c.points[i] = {v.volume[i], f.flow[i]};
  c.pef_index = static_cast<std::size_t>(std::max_element(f.flow.begin(), f.flow.end()) - f.flow.begin());
  return c;
}

// ---------------------------------------------------------------------------
// Shape rules
//
// R1  peak flow early: the points with flow >= near_peak_fraction * PEF have
//     their mean volume within the first pef_volume_fraction of total volume.
//     Using the centroid of the near-peak plateau (rather than the argmax alone)
//     makes a flat curve fail, since its "peak" spans the whole maneuver.
// R2  post-peak flow predominantly non-increasing: the post-peak curve is
//     averaged into equal-volume bins; at least monotone_fraction of the
//     bin-to-bin deltas must be <= monotone_tolerance * PEF.
// R3  curvilinear tail: mean flow over the final terminal_window of points is
//     below terminal_fraction * PEF.
//
// All rules compare ratios, so verdicts do not change when flow is scaled.
// ---------------------------------------------------------------------------

struct ShapeRules {
  double pef_volume_fraction = 0.30;
  double near_peak_fraction = 0.95;
  double monotone_fraction = 0.90;
  double monotone_tolerance = 0.05;
  std::size_t post_peak_bins = 50;
  double terminal_fraction = 0.10;
  double terminal_window = 0.05;
};

inline constexpr std::size_t kMinShapePoints = 10;

struct ShapeVerdict {
  bool accepted = true;
  std::vector<std::string> reasons;
};

namespace detail {

inline bool rule_pef_early(const FlowVolumeCurve& c, const ShapeRules& r) {
  const double total = c.total_volume();
  const double level = r.near_peak_fraction * c.pef();
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : c.points)
    if (p.flow >= level) {
      sum += p.volume;
      ++n;
    }
  return sum / static_cast<double>(n) <= r.pef_volume_fraction * total;
}

inline bool rule_monotone_tail(const FlowVolumeCurve& c, const ShapeRules& r) {
  const double v0 = c.points[c.pef_index].volume;
  const double span = c.total_volume() - v0;
  if (span <= 0.0) return true;
  const std::size_t bins = std::max<std::size_t>(2, r.post_peak_bins);
  std::vector<double> sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t i = c.pef_index; i < c.points.size(); ++i) {
    const double u = (c.points[i].volume - v0) / span;
    const auto b = std::min(bins - 1, static_cast<std::size_t>(u * static_cast<double>(bins)));
    sum[b] += c.points[i].flow;
    ++count[b];
  }
  std::vector<double> mean;
  for (std::size_t b = 0; b < bins; ++b)
    if (count[b] > 0) mean.push_back(sum[b] / static_cast<double>(count[b]));
  if (mean.size() < 2) return true;
  const double tol = r.monotone_tolerance * c.pef();
  std::size_t ok = 0;
  for (std::size_t i = 0; i + 1 < mean.size(); ++i)
    if (mean[i + 1] - mean[i] <= tol) ++ok;
  return static_cast<double>(ok) >= r.monotone_fraction * static_cast<double>(mean.size() - 1);
}

inline bool rule_terminal_flow(const FlowVolumeCurve& c, const ShapeRules& r) {
  const std::size_t n = c.points.size();
  const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(r.terminal_window * static_cast<double>(n)));
  double s = 0.0;
  for (std::size_t i = n - w; i < n; ++i) s += c.points[i].flow;
  return s / static_cast<double>(w) < r.terminal_fraction * c.pef();
}

}  // namespace detail

inline ShapeVerdict shape_check(const FlowVolumeCurve& c, const ShapeRules& rules = {}) {
  require(c.points.size() >= kMinShapePoints, ErrorKind::InvalidInput, "flow-volume curve has too few points");
  ShapeVerdict v;
  if (!(c.pef() > 0.0)) {
    v.reasons = {"R1", "R2", "R3"};
    v.accepted = false;
    return v;
  }
  if (!detail::rule_pef_early(c, rules)) v.reasons.push_back("R1");
  if (!detail::rule_monotone_tail(c, rules)) v.reasons.push_back("R2");
  if (!detail::rule_terminal_flow(c, rules)) v.reasons.push_back("R3");
  v.accepted = v.reasons.empty();
  return v;
}

/// Keeps the curve up to the point where post-peak volume reaches `fraction`
/// of its total, i.e. a maneuver stopped before its tail flattens out.
inline FlowVolumeCurve truncate_tail(const FlowVolumeCurve& c, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorKind::InvalidInput, "fraction must lie in (0, 1]");
  const double v0 = c.points.at(c.pef_index).volume;
  const double stop = v0 + fraction * (c.total_volume() - v0);
  FlowVolumeCurve out = c;
  std::size_t end = c.pef_index + 1;
  while (end < c.points.size() && c.points[end - 1].volume < stop) ++end;
  out.points.resize(end);
  return out;
}

/// CSV with columns t_s, flow, volume, one row per sample.
inline void write_csv(std::ostream& os, const FlowVolumeCurve& c) {
  os << "t_s,flow,volume\n";
  const auto old = os.precision(10);
  for (std::size_t i = 0; i < c.points.size(); ++i)
    os << static_cast<double>(i) / c.sample_rate_hz << ',' << c.points[i].flow << ',' << c.points[i].volume << '\n';
  os.precision(old);
}

}  // namespace spiro::flow
