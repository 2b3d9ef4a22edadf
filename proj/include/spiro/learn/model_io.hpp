#pragma once

// Versioned JSON container for trained estimators.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "json.hpp"
#include "spiro/error.hpp"
#include "spiro/learn/estimator.hpp"

namespace spiro::learn {

inline constexpr const char* kModelFormat = "spiro-model/1";

namespace detail {

inline std::vector<double> to_vec(const Eigen::Ref<const Eigen::VectorXd>& v) { return {v.data(), v.data() + v.size()}; }

inline Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline nlohmann::ordered_json model_to_json(const TrainedEstimator& m) {
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["kind"] = to_string(m.kind);
  j["target"] = features::to_string(m.target_kind);
  j["schema_version"] = features::kFeatureSchemaVersion;
  j["schema"] = m.schema;
  j["selected_features"] = m.selected_features;
  j["train_seed"] = m.train_seed;
  j["training_subjects"] = m.training_subjects;
  j["hyper"] = {{"trees", m.hyper.trees},
                {"kernel", to_string(m.hyper.svr.kernel)},
                {"c", m.hyper.svr.c},
                {"epsilon", m.hyper.svr.epsilon}};
  switch (m.kind) {
    case ModelKind::Linear:
      j["linear"] = {{"weights", detail::to_vec(m.linear.weights)}, {"intercept", m.linear.intercept}};
      break;
    case ModelKind::RandomForest: {
      auto& trees = j["forest"] = nlohmann::ordered_json::array();
      for (const auto& t : m.forest.trees) {
        nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
        for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
        trees.push_back(std::move(nodes));
      }
      break;
    }
    case ModelKind::Svr: {
      const auto& s = m.svr;
      std::vector<std::vector<double>> support;
      for (Eigen::Index i = 0; i < s.support.rows(); ++i) support.push_back(detail::to_vec(s.support.row(i).transpose()));
      j["svr"] = {{"gamma", s.gamma},
                  {"degree", s.params.degree},
                  {"coef0", s.params.coef0},
                  {"mean", detail::to_vec(s.mean.transpose())},
                  {"scale", detail::to_vec(s.scale.transpose())},
                  {"support", support},
                  {"coef", detail::to_vec(s.coef)},
                  {"bias", s.bias}};
      break;
    }
  }
  return j;
}

inline TrainedEstimator model_from_json(const nlohmann::json& j) {
  try {
    require(j.at("format").get<std::string>() == kModelFormat, ErrorKind::FormatError, "unsupported model format");
    TrainedEstimator m;
    m.kind = parse_model(j.at("kind").get<std::string>());
    m.target_kind = features::parse_variant(j.at("target").get<std::string>());
    m.schema = j.at("schema").get<std::vector<std::string>>();
    m.selected_features = j.at("selected_features").get<std::vector<std::string>>();
    m.columns = column_indices(m.schema, m.selected_features);
    m.train_seed = j.at("train_seed").get<std::uint64_t>();
    m.training_subjects = j.at("training_subjects").get<std::vector<std::string>>();
    const auto& h = j.at("hyper");
    m.hyper.trees = h.at("trees").get<int>();
    m.hyper.svr.kernel = parse_kernel(h.at("kernel").get<std::string>());
    m.hyper.svr.c = h.at("c").get<double>();
    m.hyper.svr.epsilon = h.at("epsilon").get<double>();
    switch (m.kind) {
      case ModelKind::Linear:
        m.linear.weights = detail::from_vec(j.at("linear").at("weights").get<std::vector<double>>());
        m.linear.intercept = j.at("linear").at("intercept").get<double>();
        break;
      case ModelKind::RandomForest:
        for (const auto& t : j.at("forest")) {
          RegressionTree tree;
          for (const auto& n : t)
            tree.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                                  n.at(4).get<double>()});
          m.forest.trees.push_back(std::move(tree));
        }
        break;
      case ModelKind::Svr: {
        const auto& s = j.at("svr");
        m.svr.params = m.hyper.svr;
        m.svr.gamma = s.at("gamma").get<double>();
        m.svr.params.degree = s.at("degree").get<int>();
        m.svr.params.coef0 = s.at("coef0").get<double>();
        m.svr.mean = detail::from_vec(s.at("mean").get<std::vector<double>>()).transpose();
        m.svr.scale = detail::from_vec(s.at("scale").get<std::vector<double>>()).transpose();
        const auto support = s.at("support").get<std::vector<std::vector<double>>>();
        m.svr.support.resize(static_cast<Eigen::Index>(support.size()), m.svr.mean.size());
        for (std::size_t i = 0; i < support.size(); ++i)
          m.svr.support.row(static_cast<Eigen::Index>(i)) = detail::from_vec(support[i]).transpose();
        m.svr.coef = detail::from_vec(s.at("coef").get<std::vector<double>>());
        m.svr.bias = s.at("bias").get<double>();
        break;
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::FormatError, std::string("malformed model file: ") + e.what());
  }
}

}  // namespace spiro::learn
