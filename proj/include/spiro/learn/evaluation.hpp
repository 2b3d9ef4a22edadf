#pragma once

// Nested leave-one-subject-out evaluation. For every held-out subject the
// training fold alone is used for feature selection and for the grid search
// (inner subject-fold CV); the refitted model then predicts the held-out rows.

#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "spiro/error.hpp"
#include "spiro/learn/dataset.hpp"
#include "spiro/learn/estimator.hpp"
#include "spiro/learn/metrics.hpp"
#include "spiro/learn/selection.hpp"

namespace spiro::learn {

inline constexpr double kAtsGatePercent = 7.0;

struct NestedOptions {
  bool use_sfs = true;
  bool global_sfs = false;  // select once on all data (leaks the held-out subject; for comparison only)
  SfsOptions sfs;
  Hyper sfs_hyper;          // model settings used while scoring candidate features
  std::uint64_t seed = 1;
};

struct Prediction {
  std::string subject_id;
  double truth = 0.0;
  double estimate = 0.0;
  std::map<std::string, std::string> tags;
};

struct SubjectOutcome {
  double percent_error = 0.0;
  Hyper hyper;
  std::vector<std::string> selected;
  std::vector<std::string> training_subjects;
};

struct EvalReport {
  features::TargetVariant target_kind = features::TargetVariant::Generic;
  ModelKind model_kind = ModelKind::Linear;
  std::map<std::string, double> per_subject_percent_error;
  double mpe = 0.0;
  std::vector<Prediction> predictions;
  std::map<std::string, std::map<std::string, double>> groups;  // tag -> value -> mean row error
  BlandAltman bland_altman;
  std::vector<std::string> excluded_subjects;
  std::map<std::string, SubjectOutcome> outcomes;
  bool ats_gate_pass = true;
};

/// Index of the smallest score; the first one wins ties.
inline std::size_t argmin(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[best]) best = i;
  return best;
}

inline EvalReport nested_loocv(const Dataset& data, ModelKind kind, const std::vector<Hyper>& grid,
                               const NestedOptions& opt = {}) {
  data.validate();
  const auto subjects = data.subjects();
  require(subjects.size() >= 3, ErrorKind::InvalidDataset, "nested LOOCV needs at least 3 subjects");
  require(!grid.empty(), ErrorKind::InvalidInput, "empty hyperparameter grid");

  EvalReport rep;
  rep.target_kind = data.target_kind;
  rep.model_kind = kind;
  rep.excluded_subjects = data.excluded_subjects;

  std::vector<std::string> global_selection;
  if (opt.use_sfs && opt.global_sfs) global_selection = sfs(data, kind, opt.sfs_hyper, opt.seed, opt.sfs).selected;

  for (const auto& held : subjects) {
    const auto train = data.subset(data.rows_of({held}, false));
    const auto test_idx = data.rows_of({held}, true);

    std::vector<std::string> selected = data.schema();
    if (opt.use_sfs) selected = opt.global_sfs ? global_selection : sfs(train, kind, opt.sfs_hyper, opt.seed, opt.sfs).selected;

    const auto scores = grid.size() == 1 ? std::vector<double>{0.0}
                                         : cv_scores(kind, train, selected, grid, opt.seed, opt.sfs.cv);
    const Hyper& best = grid[argmin(scores)];
    const auto model = fit(kind, train, selected, best, opt.seed);
    require(std::find(model.training_subjects.begin(), model.training_subjects.end(), held) ==
                model.training_subjects.end(),
            ErrorKind::InvalidDataset, "held-out subject leaked into training");

    std::vector<double> errs;
    for (auto i : test_idx) {
      const auto& row = data.rows[i];
      Prediction p{row.subject_id, row.target, predict(model, row.features), row.tags};
      errs.push_back(percentage_error(p.truth, p.estimate));
      rep.predictions.push_back(std::move(p));
    }
    SubjectOutcome o;
    o.percent_error = mean(errs);
    o.hyper = best;
    o.selected = selected;
    o.training_subjects = model.training_subjects;
    rep.per_subject_percent_error[held] = o.percent_error;
    rep.outcomes[held] = std::move(o);
  }

  std::vector<double> per_subject;
  for (const auto& [s, e] : rep.per_subject_percent_error) per_subject.push_back(e);
  rep.mpe = mean(per_subject);

  std::map<std::string, std::map<std::string, std::vector<double>>> grouped;
  std::vector<std::pair<double, double>> pairs;
  for (const auto& p : rep.predictions) {
    for (const auto& [k, v] : p.tags) grouped[k][v].push_back(percentage_error(p.truth, p.estimate));
    pairs.emplace_back(p.truth, p.estimate);
  }
  for (const auto& [k, values] : grouped)
    for (const auto& [v, e] : values) rep.groups[k][v] = mean(e);
  if (pairs.size() >= 2) rep.bland_altman = bland_altman(pairs);
  rep.ats_gate_pass = rep.mpe <= kAtsGatePercent;
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json hyper_json(ModelKind kind, const Hyper& h) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  if (kind == ModelKind::RandomForest) j["trees"] = h.trees;
  if (kind == ModelKind::Svr) {
    j["kernel"] = to_string(h.svr.kernel);
    j["c"] = h.svr.c;
    j["epsilon"] = h.svr.epsilon;
  }
  return j;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["target"] = features::to_string(r.target_kind);
  j["model"] = to_string(r.model_kind);
  j["mpe"] = r.mpe;
  j["ats_gate_percent"] = kAtsGatePercent;
  j["ats_gate_pass"] = r.ats_gate_pass;
  j["per_subject_percent_error"] = r.per_subject_percent_error;
  j["groups"] = r.groups;
  j["bland_altman"] = {{"mean_diff", r.bland_altman.mean_diff},
                       {"sd_diff", r.bland_altman.sd_diff},
                       {"lower", r.bland_altman.lower},
                       {"upper", r.bland_altman.upper}};
  j["excluded_subjects"] = r.excluded_subjects;
  auto& folds = j["folds"] = nlohmann::ordered_json::array();
  for (const auto& [s, o] : r.outcomes)
    folds.push_back({{"held_out", s},
                     {"percent_error", o.percent_error},
                     {"hyper", hyper_json(r.model_kind, o.hyper)},
                     {"selected_features", o.selected},
                     {"training_subjects", o.training_subjects}});
  auto& preds = j["predictions"] = nlohmann::ordered_json::array();
  for (const auto& p : r.predictions)
    preds.push_back({{"subject", p.subject_id}, {"truth", p.truth}, {"estimate", p.estimate}, {"tags", p.tags}});
  return j;
}

/// One row per subject: subject,percent_error.
inline void write_subject_csv(std::ostream& os, const EvalReport& r) {
  os << "subject,percent_error\n";
  const auto old = os.precision(17);
  for (const auto& [s, e] : r.per_subject_percent_error) os << s << ',' << e << '\n';
  os.precision(old);
}

/// Bland-Altman points: subject,truth,estimate,mean,diff.
inline void write_bland_altman_csv(std::ostream& os, const EvalReport& r) {
  os << "subject,truth,estimate,mean,diff\n";
  const auto old = os.precision(17);
  for (const auto& p : r.predictions)
    os << p.subject_id << ',' << p.truth << ',' << p.estimate << ',' << 0.5 * (p.truth + p.estimate) << ','
       << p.estimate - p.truth << '\n';
  os.precision(old);
}

}  // namespace spiro::learn
