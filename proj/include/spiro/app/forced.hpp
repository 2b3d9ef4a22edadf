#pragma once

// Manifest-driven forced-maneuver pipeline: audio -> shape-checked curves ->
// per-target feature rows -> training and nested evaluation.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "spiro/error.hpp"
#include "spiro/features/assemble.hpp"
#include "spiro/flow/maneuver.hpp"
#include "spiro/io/manifest.hpp"
#include "spiro/io/wav.hpp"
#include "spiro/learn/evaluation.hpp"
#include "spiro/learn/selection.hpp"

namespace spiro::app {

using features::TargetVariant;

inline const std::vector<TargetVariant>& forced_targets() {
  static const std::vector<TargetVariant> t = {TargetVariant::PEF, TargetVariant::FEV1, TargetVariant::FVC};
  return t;
}

inline double truth_of(const io::ManifestEntry& e, TargetVariant v) {
  switch (v) {
    case TargetVariant::PEF: return e.pef_Ls.value_or(0.0);
    case TargetVariant::FEV1: return e.fev1_L.value_or(0.0);
    case TargetVariant::FVC: return e.fvc_L.value_or(0.0);
    case TargetVariant::Generic: break;
  }
  fail(ErrorKind::InvalidInput, "no ground truth for the generic variant");
}

struct Rejection {
  std::string key;
  std::string reason;
};

struct ForcedData {
  std::map<TargetVariant, learn::Dataset> sets;
  std::vector<Rejection> rejected;
};

inline std::map<std::string, std::string> tags_of(const io::ManifestEntry& e) {
  auto tags = e.demographics;
  tags["mask_type"] = e.mask_type;
  tags["position"] = e.sensor_position;
  return tags;
}

/// Feature rows for every accepted forced entry. Entries whose curve fails
/// the shape rules are listed in `rejected`; subjects left without any
/// accepted maneuver are recorded as excluded.
inline ForcedData build_forced_data(const std::vector<const io::ManifestEntry*>& entries,
                                    const flow::ForcedConfig& fc = {}, const features::FeatureConfig& cfg = {}) {
  ForcedData d;
  std::set<std::string> all, kept;
  for (auto v : forced_targets()) d.sets[v].target_kind = v;
  for (const auto* e : entries) {
    if (e->maneuver != "forced") continue;
    all.insert(e->subject_id);
    const auto a = flow::analyze_maneuver(io::load_wav(e->audio_path), fc);
    if (!a.verdict.accepted) {
      std::string why;
      for (const auto& r : a.verdict.reasons) why += (why.empty() ? "" : ",") + r;
      d.rejected.push_back({e->key(), "shape rules " + why});
      continue;
    }
    kept.insert(e->subject_id);
    for (auto v : forced_targets()) {
      learn::DatasetRow row;
      row.subject_id = e->subject_id;
      row.features = features::assemble(a, v, cfg);
      row.target = truth_of(*e, v);
      row.tags = tags_of(*e);
      d.sets[v].rows.push_back(std::move(row));
    }
  }
  for (const auto& s : all)
    if (!kept.count(s))
      for (auto& [v, set] : d.sets) set.excluded_subjects.push_back(s);
  return d;
}

struct ForcedTrainOptions {
  bool use_sfs = true;
  learn::SfsOptions sfs;
  std::optional<learn::Hyper> sfs_hyper;          // default_sfs_hyper of the model kind otherwise
  std::optional<std::vector<learn::Hyper>> grid;  // default grid of the model kind otherwise
  std::uint64_t seed = 1;
};

/// Hyperparameters for scoring candidate features during selection; forests
/// use a small tree count to keep the search affordable.
inline learn::Hyper default_sfs_hyper(learn::ModelKind kind) {
  learn::Hyper h;
  if (kind == learn::ModelKind::RandomForest) h.trees = 25;
  return h;
}

/// Feature selection and grid search on the whole dataset, then a final fit.
inline learn::TrainedEstimator train_forced(const learn::Dataset& data, learn::ModelKind kind,
                                            const ForcedTrainOptions& opt) {
  const auto selected = opt.use_sfs ? learn::sfs(data, kind, opt.sfs_hyper.value_or(default_sfs_hyper(kind)), opt.seed, opt.sfs).selected : data.schema();
  const auto grid = opt.grid ? *opt.grid : learn::default_grid(kind);
  const auto scores = grid.size() == 1 ? std::vector<double>{0.0}
                                       : learn::cv_scores(kind, data, selected, grid, opt.seed, opt.sfs.cv);
  return learn::fit(kind, data, selected, grid[learn::argmin(scores)], opt.seed);
}

inline nlohmann::ordered_json rejections_json(const std::vector<Rejection>& r) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& x : r) j.push_back({{"entry", x.key}, {"reason", x.reason}});
  return j;
}

struct ForcedEvalOptions {
  std::vector<learn::ModelKind> kinds = {learn::ModelKind::Linear, learn::ModelKind::RandomForest,
                                         learn::ModelKind::Svr};
  bool use_sfs = true;
  bool global_sfs = false;
  std::size_t max_features = 8;
  std::uint64_t seed = 1;
};

struct ForcedEvaluation {
  std::map<TargetVariant, std::map<learn::ModelKind, learn::EvalReport>> reports;
  std::vector<Rejection> rejected;
};

inline ForcedEvaluation evaluate_forced(const ForcedData& data, const ForcedEvalOptions& opt) {
  ForcedEvaluation ev;
  ev.rejected = data.rejected;
  for (const auto& [target, set] : data.sets) {
    require(!set.rows.empty(), ErrorKind::InvalidDataset, "no accepted forced maneuvers to evaluate");
    for (auto kind : opt.kinds) {
      learn::NestedOptions n;
      n.use_sfs = opt.use_sfs;
      n.global_sfs = opt.global_sfs;
      n.sfs.max_features = opt.max_features;
      n.sfs_hyper = default_sfs_hyper(kind);
      n.seed = opt.seed;
      ev.reports[target][kind] = learn::nested_loocv(set, kind, learn::default_grid(kind), n);
    }
  }
  return ev;
}

inline nlohmann::ordered_json to_json(const ForcedEvaluation& ev, const ForcedEvalOptions& opt) {
  nlohmann::ordered_json j;
  j["report"] = "spiro-forced-eval/1";
  j["seed"] = opt.seed;
  j["feature_schema"] = features::kFeatureSchemaVersion;
  j["feature_selection"] = !opt.use_sfs ? "none" : opt.global_sfs ? "global" : "per-fold";
  j["ats_gate_percent"] = learn::kAtsGatePercent;
  j["rejected"] = rejections_json(ev.rejected);
  auto& targets = j["targets"] = nlohmann::ordered_json::object();
  for (const auto& [target, by_kind] : ev.reports) {
    auto& t = targets[features::to_string(target)] = nlohmann::ordered_json::object();
    for (const auto& [kind, rep] : by_kind) t[learn::to_string(kind)] = learn::to_json(rep);
  }
  return j;
}

/// Estimates from one recording with per-target models. A rejected curve
/// yields the verdict and no estimates.
struct ForcedEstimate {
  flow::ForcedAnalysis analysis;
  std::map<TargetVariant, double> values;
};

inline ForcedEstimate estimate_forced(const signal::AudioRecording& rec,
                                      const std::map<TargetVariant, learn::TrainedEstimator>& models,
                                      const flow::ForcedConfig& fc = {}, const features::FeatureConfig& cfg = {}) {
  ForcedEstimate out;
  out.analysis = flow::analyze_maneuver(rec, fc);
  if (!out.analysis.verdict.accepted) return out;
  for (const auto& [target, model] : models)
    out.values[target] = learn::predict(model, features::assemble(out.analysis, target, cfg));
  return out;
}

}  // namespace spiro::app
