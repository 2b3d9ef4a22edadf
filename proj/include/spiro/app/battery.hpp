#pragma once

// Battery-life estimate from three current states over a one-minute cycle:
// sampling audio, running the classifier, and idling for the rest.
//
// Only the state currents, the 1.64 mA average, 11 active hours per day and
// the 240 mAh cell are fixed. The per-state durations are back-solved:
// with 20 s of sampling per measurement,
//   60 * 1.64 = 20 * 1.6 + c * 4.7 + (40 - c) * 0.96  ->  c = 28 / 3.74 = 7.4866 s
// of classification per measurement.

#include "spiro/error.hpp"

namespace spiro::app {

struct BatteryModel {
  double idle_mA = 0.96;
  double sampling_mA = 1.6;
  double classify_mA = 4.7;
  double measurements_per_min = 1.0;
  double sampling_s = 20.0;              // per measurement
  double classify_s = 28.0 / 3.74;       // per measurement (back-solved)
  double active_h_per_day = 11.0;
  double capacity_mAh = 240.0;
  bool idle_day_drain = false;  // also drain idle current outside the active hours

  void validate() const {
    require(idle_mA > 0.0 && sampling_mA > 0.0 && classify_mA > 0.0, ErrorKind::InvalidInput,
            "state currents must be positive");
    require(capacity_mAh > 0.0, ErrorKind::InvalidInput, "capacity must be positive");
    require(measurements_per_min >= 0.0 && sampling_s >= 0.0 && classify_s >= 0.0, ErrorKind::InvalidInput,
            "durations must be non-negative");
    require(measurements_per_min * (sampling_s + classify_s) <= 60.0, ErrorKind::InvalidInput,
            "active states exceed the one-minute cycle");
    require(active_h_per_day > 0.0 && active_h_per_day <= 24.0, ErrorKind::InvalidInput,
            "active hours must lie in (0, 24]");
  }
};

struct BatteryEstimate {
  double avg_mA = 0.0;
  double active_hours = 0.0;  // capacity / average current
  double days = 0.0;
};

inline double average_current(const BatteryModel& m) {
  m.validate();
  const double sampling = m.measurements_per_min * m.sampling_s;
  const double classify = m.measurements_per_min * m.classify_s;
  const double idle = 60.0 - sampling - classify;
  return (sampling * m.sampling_mA + classify * m.classify_mA + idle * m.idle_mA) / 60.0;
}

inline BatteryEstimate estimate_battery(const BatteryModel& m) {
  BatteryEstimate e;
  e.avg_mA = average_current(m);
  e.active_hours = m.capacity_mAh / e.avg_mA;
  const double per_day = e.avg_mA * m.active_h_per_day + (m.idle_day_drain ? m.idle_mA * (24.0 - m.active_h_per_day) : 0.0);
  e.days = m.capacity_mAh / per_day;
  return e;
}

}  // namespace spiro::app
