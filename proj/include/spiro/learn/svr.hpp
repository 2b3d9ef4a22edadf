#pragma once

// epsilon-insensitive support vector regression, solved in the dual with SMO
// (maximal-violating-pair first index, second-order choice of the second
// index, as in LIBSVM). Inputs are standardized with training statistics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "spiro/error.hpp"

namespace spiro::learn {

enum class SvrKernel { Linear, Rbf, Polynomial };

inline const char* to_string(SvrKernel k) {
  switch (k) {
    case SvrKernel::Linear: return "linear";
    case SvrKernel::Rbf: return "rbf";
    case SvrKernel::Polynomial: return "poly";
  }
  return "linear";
}

inline SvrKernel parse_kernel(const std::string& s) {
  if (s == "linear") return SvrKernel::Linear;
  if (s == "rbf") return SvrKernel::Rbf;
  if (s == "poly" || s == "polynomial") return SvrKernel::Polynomial;
  fail(ErrorKind::InvalidInput, "unknown SVR kernel: " + s);
}

struct SvrParams {
  SvrKernel kernel = SvrKernel::Rbf;
  double c = 1.0;
  double epsilon = 0.1;
  double gamma = 0.0;  // 0: 1 / n_features
  int degree = 3;
  double coef0 = 1.0;
  double tolerance = 1e-3;
};

struct SvrModel {
  SvrParams params;
  double gamma = 1.0;
  Eigen::RowVectorXd mean, scale;  // standardization
  Eigen::MatrixXd support;         // standardized support vectors
  Eigen::VectorXd coef;            // alpha - alpha*
  double bias = 0.0;

  double kernel(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b) const {
    switch (params.kernel) {
      case SvrKernel::Linear: return a.dot(b);
      case SvrKernel::Rbf: return std::exp(-gamma * (a - b).squaredNorm());
      case SvrKernel::Polynomial: return std::pow(gamma * a.dot(b) + params.coef0, params.degree);
    }
    return 0.0;
  }

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    const Eigen::RowVectorXd z = ((x - mean).array() * scale.array()).matrix();
    double f = bias;
    for (Eigen::Index i = 0; i < support.rows(); ++i) f += coef(i) * kernel(support.row(i), z);
    return f;
  }
};

inline SvrModel fit_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SvrParams& params) {
  require(params.c > 0.0 && params.epsilon >= 0.0, ErrorKind::InvalidInput, "invalid SVR parameters");
  const Eigen::Index l = x.rows();
  SvrModel m;
  m.params = params;
  m.gamma = params.gamma > 0.0 ? params.gamma : 1.0 / static_cast<double>(std::max<Eigen::Index>(1, x.cols()));
  m.mean = x.colwise().mean();
  m.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt((x.col(j).array() - m.mean(j)).square().mean());
    m.scale(j) = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
  Eigen::MatrixXd z(l, x.cols());
  for (Eigen::Index i = 0; i < l; ++i) z.row(i) = ((x.row(i) - m.mean).array() * m.scale.array()).matrix();

  Eigen::MatrixXd k(l, l);
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) k(i, j) = k(j, i) = m.kernel(z.row(i), z.row(j));

  // Variables t < l are alpha_t (sign +1), t >= l are alpha*_{t-l} (sign -1).
  const Eigen::Index n = 2 * l;
  const double c = params.c;
  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0), grad(static_cast<std::size_t>(n));
  std::vector<int> sign(static_cast<std::size_t>(n));
  auto idx = [l](Eigen::Index t) { return t < l ? t : t - l; };
  for (Eigen::Index t = 0; t < n; ++t) {
    sign[static_cast<std::size_t>(t)] = t < l ? 1 : -1;
    grad[static_cast<std::size_t>(t)] = t < l ? params.epsilon - y(t) : params.epsilon + y(t - l);
  }
  auto q = [&](Eigen::Index a, Eigen::Index b) {
    return sign[static_cast<std::size_t>(a)] * sign[static_cast<std::size_t>(b)] * k(idx(a), idx(b));
  };
  auto upper = [&](Eigen::Index t) { return alpha[static_cast<std::size_t>(t)] >= c; };
  auto lower = [&](Eigen::Index t) { return alpha[static_cast<std::size_t>(t)] <= 0.0; };
  constexpr double tau = 1e-12;

  const long max_iter = std::max<long>(10000000L, 100L * static_cast<long>(n));
  for (long iter = 0; iter < max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1, j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const double g = grad[static_cast<std::size_t>(t)];
      if (sign[static_cast<std::size_t>(t)] == 1) {
        if (!upper(t) && -g >= gmax) gmax = -g, i = t;
      } else if (!lower(t) && g >= gmax) {
        gmax = g, i = t;
      }
    }
    if (i < 0) break;
    double obj_min = std::numeric_limits<double>::infinity();
    const int si = sign[static_cast<std::size_t>(i)];
    for (Eigen::Index t = 0; t < n; ++t) {
      const double g = grad[static_cast<std::size_t>(t)];
      const double qii = k(idx(i), idx(i)), qtt = k(idx(t), idx(t));
      if (sign[static_cast<std::size_t>(t)] == 1) {
        if (lower(t)) continue;
        gmax2 = std::max(gmax2, g);
        const double diff = gmax + g;
        if (diff > 0.0) {
          const double quad = qii + qtt - 2.0 * si * q(i, t);
          const double obj = -(diff * diff) / (quad > 0.0 ? quad : tau);
          if (obj <= obj_min) obj_min = obj, j = t;
        }
      } else {
        if (upper(t)) continue;
        gmax2 = std::max(gmax2, -g);
        const double diff = gmax - g;
        if (diff > 0.0) {
          const double quad = qii + qtt + 2.0 * si * q(i, t);
          const double obj = -(diff * diff) / (quad > 0.0 ? quad : tau);
          if (obj <= obj_min) obj_min = obj, j = t;
        }
      }
    }
    if (gmax + gmax2 < params.tolerance || j < 0) break;

    auto& ai = alpha[static_cast<std::size_t>(i)];
    auto& aj = alpha[static_cast<std::size_t>(j)];
    const double old_i = ai, old_j = aj;
    const double gi = grad[static_cast<std::size_t>(i)], gj = grad[static_cast<std::size_t>(j)];
    const double qii = k(idx(i), idx(i)), qjj = k(idx(j), idx(j)), qij = q(i, j);
    if (sign[static_cast<std::size_t>(i)] != sign[static_cast<std::size_t>(j)]) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (-gi - gj) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) aj = 0.0, ai = diff;
      } else if (ai < 0.0) {
        ai = 0.0, aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > c) ai = c, aj = c - diff;
      } else if (aj > c) {
        aj = c, ai = c + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (gi - gj) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c) {
        if (ai > c) ai = c, aj = sum - c;
      } else if (aj < 0.0) {
        aj = 0.0, ai = sum;
      }
      if (sum > c) {
        if (aj > c) aj = c, ai = sum - c;
      } else if (ai < 0.0) {
        ai = 0.0, aj = sum;
      }
    }
    const double di = ai - old_i, dj = aj - old_j;
    for (Eigen::Index t = 0; t < n; ++t) grad[static_cast<std::size_t>(t)] += q(i, t) * di + q(j, t) * dj;
  }

  // Bias from free variables, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  int free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = sign[static_cast<std::size_t>(t)] * grad[static_cast<std::size_t>(t)];
    const bool pos = sign[static_cast<std::size_t>(t)] == 1;
    if (upper(t)) {
      if (pos) lb = std::max(lb, yg);
      else ub = std::min(ub, yg);
    } else if (lower(t)) {
      if (pos) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free;
      sum_free += yg;
    }
  }
  const double rho = free > 0 ? sum_free / free : 0.5 * (ub + lb);
  m.bias = -rho;

  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < l; ++i)
    if (alpha[static_cast<std::size_t>(i)] - alpha[static_cast<std::size_t>(i + l)] != 0.0) sv.push_back(i);
  m.support.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  m.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    m.support.row(static_cast<Eigen::Index>(s)) = z.row(sv[s]);
    m.coef(static_cast<Eigen::Index>(s)) = alpha[static_cast<std::size_t>(sv[s])] - alpha[static_cast<std::size_t>(sv[s] + l)];
  }
  return m;
}

}  // namespace spiro::learn
