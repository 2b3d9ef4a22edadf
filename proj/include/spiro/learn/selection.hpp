#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "spiro/learn/dataset.hpp"
#include "spiro/learn/estimator.hpp"
#include "spiro/learn/metrics.hpp"

namespace spiro::learn {

struct CvOptions {
  std::size_t loso_limit = 10;  // leave-one-subject-out up to this many subjects
  std::size_t k = 5;            // otherwise k subject folds
};

/// Mean over subjects of each subject's mean percentage error, for the
/// predictions of every grid entry. Random forests are fitted once per fold
/// with the largest tree count; smaller counts use the leading trees, which is
/// identical to fitting them separately.
inline std::vector<double> cv_scores(ModelKind kind, const Dataset& data, const std::vector<std::string>& selected,
                                     const std::vector<Hyper>& grid, std::uint64_t seed, const CvOptions& cv = {}) {
  require(!grid.empty(), ErrorKind::InvalidInput, "empty hyperparameter grid");
  const auto subjects = data.subjects();
  const auto folds = subject_folds(subjects, cv.loso_limit, cv.k);
  // errors[g][subject] = list of row errors
  std::vector<std::map<std::string, std::vector<double>>> errors(grid.size());

  const bool forest = kind == ModelKind::RandomForest;
  int max_trees = 0;
  for (const auto& h : grid) max_trees = std::max(max_trees, h.trees);

  for (const auto& fold : folds) {
    const auto train = data.subset(data.rows_of(fold, false));
    const auto test_idx = data.rows_of(fold, true);
    if (forest) {
      Hyper h = grid.front();
      h.trees = max_trees;
      const auto m = fit_rows(kind, train, selected, h, seed);
      for (auto i : test_idx) {
        const auto x = m.select(data.rows[i].features);
        for (std::size_t g = 0; g < grid.size(); ++g) {
          const double est = std::max(kMinPrediction, m.raw(x, static_cast<std::size_t>(grid[g].trees)));
          errors[g][data.rows[i].subject_id].push_back(percentage_error(data.rows[i].target, est));
        }
      }
    } else {
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto m = fit_rows(kind, train, selected, grid[g], seed);
        for (auto i : test_idx)
          errors[g][data.rows[i].subject_id].push_back(
              percentage_error(data.rows[i].target, predict(m, data.rows[i].features)));
      }
    }
  }

  std::vector<double> scores;
  for (const auto& per_subject : errors) {
    std::vector<double> subject_means;
    for (const auto& [s, e] : per_subject) subject_means.push_back(mean(e));
    scores.push_back(mean(subject_means));
  }
  return scores;
}

inline double cv_score(ModelKind kind, const Dataset& data, const std::vector<std::string>& selected, const Hyper& h,
                       std::uint64_t seed, const CvOptions& cv = {}) {
  return cv_scores(kind, data, selected, {h}, seed, cv).front();
}

struct SfsOptions {
  std::size_t max_features = 8;
  double tolerance = 1e-4;
  CvOptions cv;
};

struct SfsResult {
  std::vector<std::string> selected;
  std::vector<double> scores;  // inner-CV MPE after each addition; non-increasing
};

/// Greedy forward selection minimizing inner-CV MPE. Candidates are tried in
/// name order and only a strictly better score replaces the incumbent, so
/// ties go to the lexicographically first name. Stops at max_features or when
/// the best addition improves by less than `tolerance`.
inline SfsResult sfs(const Dataset& data, ModelKind kind, const Hyper& hyper, std::uint64_t seed,
                     const SfsOptions& opt = {}) {
  data.validate();
  auto candidates = data.schema();
  require(candidates.size() >= 2, ErrorKind::InvalidInput, "selection needs at least 2 features");
  std::sort(candidates.begin(), candidates.end());
  SfsResult r;
  std::set<std::string> chosen;
  double current = std::numeric_limits<double>::infinity();
  while (r.selected.size() < std::min(opt.max_features, candidates.size())) {
    double best = std::numeric_limits<double>::infinity();
    std::string best_name;
    for (const auto& name : candidates) {
      if (chosen.count(name)) continue;
      auto trial = r.selected;
      trial.push_back(name);
      const double s = cv_score(kind, data, trial, hyper, seed, opt.cv);
      if (s < best) {
        best = s;
        best_name = name;
      }
    }
    if (best_name.empty()) break;
    if (!r.selected.empty() && !(best < current - opt.tolerance)) break;
    r.selected.push_back(best_name);
    r.scores.push_back(best);
    chosen.insert(best_name);
    current = best;
  }
  return r;
}

}  // namespace spiro::learn
