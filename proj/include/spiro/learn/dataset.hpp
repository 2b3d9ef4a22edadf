#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "spiro/error.hpp"
#include "spiro/features/assemble.hpp"

namespace spiro::learn {

struct DatasetRow {
  std::string subject_id;
  features::FeatureVector features;
  double target = 0.0;  // liters (FEV1, FVC) or L/s (PEF)
  std::map<std::string, std::string> tags;  // mask_type, health, position, ...
};

struct Dataset {
  std::vector<DatasetRow> rows;
  features::TargetVariant target_kind = features::TargetVariant::Generic;
  std::vector<std::string> excluded_subjects;  // every maneuver rejected upstream

  const std::vector<std::string>& schema() const {
    require(!rows.empty(), ErrorKind::InvalidDataset, "dataset is empty");
    return rows.front().features.names;
  }

  void validate() const {
    require(!rows.empty(), ErrorKind::InvalidDataset, "dataset is empty");
    const auto& names = schema();
    for (const auto& r : rows) {
      require(!r.subject_id.empty(), ErrorKind::InvalidDataset, "row without subject id");
      require(r.features.names == names, ErrorKind::SchemaError, "rows disagree on feature schema");
      require(r.target > 0.0, ErrorKind::InvalidDataset, "target must be positive for subject " + r.subject_id);
    }
  }

  /// Sorted unique subject ids.
  std::vector<std::string> subjects() const {
    std::set<std::string> s;
    for (const auto& r : rows) s.insert(r.subject_id);
    return {s.begin(), s.end()};
  }

  Dataset subset(const std::vector<std::size_t>& idx) const {
    Dataset d;
    d.target_kind = target_kind;
    d.rows.reserve(idx.size());
    for (auto i : idx) d.rows.push_back(rows[i]);
    return d;
  }

  /// Rows whose subject is (or is not) in `ids`.
  std::vector<std::size_t> rows_of(const std::set<std::string>& ids, bool inside = true) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if ((ids.count(rows[i].subject_id) > 0) == inside) out.push_back(i);
    return out;
  }
};

/// Column indices of `names` within `schema`; unknown names are a SchemaError.
inline std::vector<std::size_t> column_indices(const std::vector<std::string>& schema,
                                               const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  out.reserve(names.size());
  for (const auto& n : names) {
    const auto it = std::find(schema.begin(), schema.end(), n);
    require(it != schema.end(), ErrorKind::SchemaError, "unknown feature " + n);
    out.push_back(static_cast<std::size_t>(it - schema.begin()));
  }
  return out;
}

inline Eigen::MatrixXd design_matrix(const Dataset& d, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(d.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < d.rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d.rows[i].features.values[cols[j]];
  return x;
}

inline Eigen::VectorXd target_vector(const Dataset& d) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(d.rows.size()));
  for (std::size_t i = 0; i < d.rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = d.rows[i].target;
  return y;
}

/// Subject folds: one subject per fold when there are at most `loso_limit`
/// subjects, otherwise `k` folds of consecutive sorted subjects.
inline std::vector<std::set<std::string>> subject_folds(const std::vector<std::string>& subjects,
                                                        std::size_t loso_limit = 10, std::size_t k = 5) {
  std::vector<std::set<std::string>> folds;
  if (subjects.size() <= loso_limit) {
    for (const auto& s : subjects) folds.push_back({s});
    return folds;
  }
  folds.resize(k);
  for (std::size_t i = 0; i < subjects.size(); ++i) folds[i * k / subjects.size()].insert(subjects[i]);
  return folds;
}

}  // namespace spiro::learn
