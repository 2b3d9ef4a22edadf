#pragma once

// Sensor-placement study: forced models trained on position L1 and evaluated
// on every other position; respiration-rate error per position.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "spiro/app/forced.hpp"
#include "spiro/app/tidal_app.hpp"
#include "spiro/io/manifest.hpp"
#include "spiro/learn/metrics.hpp"

namespace spiro::app {

inline constexpr const char* kTrainPosition = "L1";

inline const std::vector<std::string>& evaluation_positions() {
  static const std::vector<std::string> p = {"C1", "R1", "L3", "R3"};
  return p;
}

struct PositionRow {
  std::string position;
  std::map<TargetVariant, double> forced_mpe;  // per target
  std::optional<double> tidal_mae;             // bpm
  bool over_gate = false;                      // any forced MPE above the ATS gate
};

struct PositionTable {
  std::vector<PositionRow> rows;
  std::vector<std::string> warnings;
};

/// Mean over subjects of each subject's mean percentage error.
inline double subject_mpe(const learn::TrainedEstimator& model, const learn::Dataset& d,
                          const std::vector<std::size_t>& rows) {
  std::map<std::string, std::vector<double>> per;
  for (auto i : rows)
    per[d.rows[i].subject_id].push_back(learn::percentage_error(d.rows[i].target, learn::predict(model, d.rows[i].features)));
  std::vector<double> means;
  for (const auto& [s, e] : per) means.push_back(learn::mean(e));
  return learn::mean(means);
}

inline PositionTable position_study(const io::Manifest& m, learn::ModelKind kind, const ForcedTrainOptions& opt) {
  PositionTable t;
  std::set<std::string> present;
  for (const auto& e : m.entries) present.insert(e.sensor_position);

  const auto data = build_forced_data(m.of("forced"));
  std::map<TargetVariant, learn::TrainedEstimator> models;
  bool have_forced = false;
  for (const auto& [target, set] : data.sets) {
    if (set.rows.empty()) continue;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < set.rows.size(); ++i)
      if (set.rows[i].tags.at("position") == kTrainPosition) train.push_back(i);
    if (train.empty()) {
      t.warnings.push_back(std::string("no accepted forced maneuvers at ") + kTrainPosition + "; forced columns skipped");
      break;
    }
    models[target] = train_forced(set.subset(train), kind, opt);
    have_forced = true;
  }

  for (const auto& pos : evaluation_positions()) {
    if (!present.count(pos)) {
      t.warnings.push_back("position " + pos + " not in manifest; skipped");
      continue;
    }
    PositionRow row;
    row.position = pos;
    if (have_forced)
      for (const auto& [target, set] : data.sets) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < set.rows.size(); ++i)
          if (set.rows[i].tags.at("position") == pos) idx.push_back(i);
        if (idx.empty()) continue;
        row.forced_mpe[target] = subject_mpe(models.at(target), set, idx);
        row.over_gate = row.over_gate || row.forced_mpe[target] > learn::kAtsGatePercent;
      }
    std::vector<double> errs;
    for (const auto* e : m.of("tidal")) {
      if (e->sensor_position != pos || e->label != "tidal") continue;
      const double ref = reference_rate(*e);
      const auto r = tidal::respiration_rate(io::load_wav(e->audio_path));
      if (ref > 0.0 && !r.rejected) errs.push_back(std::abs(r.rate_bpm - ref));
    }
    if (!errs.empty()) row.tidal_mae = learn::mean(errs);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline nlohmann::ordered_json to_json(const PositionTable& t) {
  nlohmann::ordered_json j;
  j["report"] = "spiro-positions/1";
  j["train_position"] = kTrainPosition;
  j["ats_gate_percent"] = learn::kAtsGatePercent;
  auto& rows = j["positions"] = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    nlohmann::ordered_json o;
    o["position"] = r.position;
    auto& f = o["forced_mpe"] = nlohmann::ordered_json::object();
    for (const auto& [target, v] : r.forced_mpe) f[features::to_string(target)] = v;
    o["tidal_mae_bpm"] = r.tidal_mae ? nlohmann::ordered_json(*r.tidal_mae) : nlohmann::ordered_json(nullptr);
    o["over_gate"] = r.over_gate;
    rows.push_back(std::move(o));
  }
  j["warnings"] = t.warnings;
  return j;
}

}  // namespace spiro::app
