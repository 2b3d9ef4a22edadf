#pragma once

#include <Eigen/Dense>

namespace spiro::learn {

/// Ordinary least squares with intercept. Solved on centered data with a
/// complete orthogonal decomposition, so rank-deficient designs get the
/// minimum-norm coefficients and a constant target gives zero weights.
struct LinearModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return intercept + x.dot(weights); }
};

inline LinearModel fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  LinearModel m;
  const Eigen::RowVectorXd mx = x.colwise().mean();
  const double my = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - mx;
  const Eigen::VectorXd yc = y.array() - my;
  if (x.cols() == 0) {
    m.weights = Eigen::VectorXd();
  } else {
    m.weights = xc.completeOrthogonalDecomposition().solve(yc);
  }
  m.intercept = my - mx.dot(m.weights);
  return m;
}

}  // namespace spiro::learn
