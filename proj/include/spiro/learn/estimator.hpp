#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "spiro/error.hpp"
#include "spiro/features/assemble.hpp"
#include "spiro/learn/dataset.hpp"
#include "spiro/learn/forest.hpp"
#include "spiro/learn/linear.hpp"
#include "spiro/learn/svr.hpp"

namespace spiro::learn {

enum class ModelKind { Linear, RandomForest, Svr };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Linear: return "linear";
    case ModelKind::RandomForest: return "random_forest";
    case ModelKind::Svr: return "svr";
  }
  return "linear";
}

inline ModelKind parse_model(const std::string& s) {
  if (s == "linear") return ModelKind::Linear;
  if (s == "random_forest" || s == "rf") return ModelKind::RandomForest;
  if (s == "svr") return ModelKind::Svr;
  fail(ErrorKind::InvalidInput, "unknown model kind: " + s);
}

struct Hyper {
  int trees = 100;
  SvrParams svr;

  bool operator==(const Hyper& o) const {
    return trees == o.trees && svr.kernel == o.svr.kernel && svr.c == o.svr.c && svr.epsilon == o.svr.epsilon;
  }
};

/// Tree counts 5, 15, ..., 495.
inline std::vector<Hyper> forest_grid() {
  std::vector<Hyper> g;
  for (int t = 5; t <= 500; t += 10) {
    Hyper h;
    h.trees = t;
    g.push_back(h);
  }
  return g;
}

/// C in {0.1, 1, 10, 100} x kernel in {linear, rbf, poly}, epsilon 0.1.
inline std::vector<Hyper> svr_grid() {
  std::vector<Hyper> g;
  for (double c : {0.1, 1.0, 10.0, 100.0})
    for (auto k : {SvrKernel::Linear, SvrKernel::Rbf, SvrKernel::Polynomial}) {
      Hyper h;
      h.svr.c = c;
      h.svr.kernel = k;
      g.push_back(h);
    }
  return g;
}

inline std::vector<Hyper> default_grid(ModelKind kind) {
  switch (kind) {
    case ModelKind::Linear: return {Hyper{}};
    case ModelKind::RandomForest: return forest_grid();
    case ModelKind::Svr: return svr_grid();
  }
  return {Hyper{}};
}

struct TrainedEstimator {
  ModelKind kind = ModelKind::Linear;
  features::TargetVariant target_kind = features::TargetVariant::Generic;
  std::vector<std::string> schema;             // full feature schema the model expects
  std::vector<std::string> selected_features;  // ordered subset actually used
  std::vector<std::size_t> columns;            // indices of selected_features in schema
  Hyper hyper;
  std::uint64_t train_seed = 0;
  std::vector<std::string> training_subjects;  // provenance

  LinearModel linear;
  RandomForest forest;
  SvrModel svr;

  Eigen::RowVectorXd select(const features::FeatureVector& fv) const {
    require(fv.names == schema, ErrorKind::SchemaError, "feature vector does not match the model schema");
    Eigen::RowVectorXd x(static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) x(static_cast<Eigen::Index>(j)) = fv.values[columns[j]];
    return x;
  }

  /// Raw model output on already-selected columns.
  double raw(const Eigen::Ref<const Eigen::RowVectorXd>& x, std::size_t n_trees = 0) const {
    switch (kind) {
      case ModelKind::Linear: return linear.predict(x);
      case ModelKind::RandomForest: return forest.predict(x, n_trees);
      case ModelKind::Svr: return svr.predict(x);
    }
    return 0.0;
  }
};

inline constexpr double kMinPrediction = 1e-6;

/// Lung parameters are positive; predictions are clamped to kMinPrediction.
inline double predict(const TrainedEstimator& m, const features::FeatureVector& fv) {
  return std::max(kMinPrediction, m.raw(m.select(fv)));
}

/// Fit without the subject-count precondition. Inner cross-validation of a
/// two-subject training fold trains on a single subject.
inline TrainedEstimator fit_rows(ModelKind kind, const Dataset& data, const std::vector<std::string>& selected,
                                 const Hyper& hyper, std::uint64_t seed) {
  data.validate();
  require(!selected.empty(), ErrorKind::InvalidInput, "no features selected");
  TrainedEstimator m;
  m.kind = kind;
  m.target_kind = data.target_kind;
  m.schema = data.schema();
  m.selected_features = selected;
  m.columns = column_indices(m.schema, selected);
  m.hyper = hyper;
  m.train_seed = seed;
  m.training_subjects = data.subjects();
  const auto x = design_matrix(data, m.columns);
  const auto y = target_vector(data);
  switch (kind) {
    case ModelKind::Linear: m.linear = fit_linear(x, y); break;
    case ModelKind::RandomForest:
      require(hyper.trees >= 1, ErrorKind::InvalidInput, "forest needs at least one tree");
      m.forest = fit_forest(x, y, hyper.trees, derive_seed(seed, "forest"));
      break;
    case ModelKind::Svr: m.svr = fit_svr(x, y, hyper.svr); break;
  }
  return m;
}

inline TrainedEstimator fit(ModelKind kind, const Dataset& data, const std::vector<std::string>& selected,
                            const Hyper& hyper, std::uint64_t seed) {
  require(data.subjects().size() >= 2, ErrorKind::InvalidDataset, "need at least 2 subjects to train");
  return fit_rows(kind, data, selected, hyper, seed);
}

inline TrainedEstimator fit(ModelKind kind, const Dataset& data, const Hyper& hyper, std::uint64_t seed) {
  return fit(kind, data, data.schema(), hyper, seed);
}

}  // namespace spiro::learn
