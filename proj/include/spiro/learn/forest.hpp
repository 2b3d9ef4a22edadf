#pragma once

// Random forest of CART regression trees. Splits maximize variance reduction;
// nodes are split until they hold fewer than two samples or cannot be split.
// Each tree draws a bootstrap sample and considers floor(sqrt(p)) randomly
// chosen features per node (falling back to the remaining features when none
// of those can split). Tree t is seeded from (seed, t) alone, so the first T
// trees of a larger forest are exactly a T-tree forest.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "spiro/seed.hpp"

namespace spiro::learn {

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int n = 0;
    while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
      const auto& node = nodes[static_cast<std::size_t>(n)];
      n = x(node.feature) <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(n)].value;
  }
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t mtry, Rng& rng)
      : x_(x), y_(y), mtry_(mtry), rng_(rng) {}

  RegressionTree build(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    grow(std::move(rows));
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;
  };

  int grow(std::vector<std::size_t> rows) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double sum = 0.0;
    for (auto r : rows) sum += y_(static_cast<Eigen::Index>(r));
    tree_.nodes[static_cast<std::size_t>(id)].value = sum / static_cast<double>(rows.size());
    if (rows.size() < 2) return id;
    const Split s = best_split(rows, sum);
    if (s.feature < 0) return id;
    std::vector<std::size_t> left, right;
    for (auto r : rows)
      (x_(static_cast<Eigen::Index>(r), s.feature) <= s.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left));
    const int r = grow(std::move(right));
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = s.feature;
    node.threshold = s.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  // Maximizes sum_l^2 / n_l + sum_r^2 / n_r, which is equivalent to
  // minimizing the children's squared error.
  Split best_split(const std::vector<std::size_t>& rows, double total) {
    const std::size_t p = static_cast<std::size_t>(x_.cols());
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i + 1 < p; ++i) std::swap(order[i], order[i + rng_.index(p - i)]);

    const double n = static_cast<double>(rows.size());
    const double parent = total * total / n;
    Split best;
    best.score = parent;
    bool pure = true;
    for (auto r : rows)
      if (y_(static_cast<Eigen::Index>(r)) != y_(static_cast<Eigen::Index>(rows[0]))) pure = false;
    if (pure) return best;

    std::vector<std::size_t> sorted = rows;
    for (std::size_t k = 0; k < p; ++k) {
      if (k >= mtry_ && best.feature >= 0) break;
      const auto f = static_cast<Eigen::Index>(order[k]);
      std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return x_(static_cast<Eigen::Index>(a), f) < x_(static_cast<Eigen::Index>(b), f);
      });
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        left_sum += y_(static_cast<Eigen::Index>(sorted[i]));
        const double xa = x_(static_cast<Eigen::Index>(sorted[i]), f);
        const double xb = x_(static_cast<Eigen::Index>(sorted[i + 1]), f);
        if (!(xa < xb)) continue;
        const double nl = static_cast<double>(i + 1);
        const double right_sum = total - left_sum;
        const double score = left_sum * left_sum / nl + right_sum * right_sum / (n - nl);
        if (score > best.score + 1e-12 * std::abs(best.score)) {
          best.score = score;
          best.feature = static_cast<int>(f);
          best.threshold = 0.5 * (xa + xb);
          if (best.threshold >= xb) best.threshold = xa;  // guard against rounding up to xb
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  std::size_t mtry_;
  Rng& rng_;
  RegressionTree tree_;
};

/// Rows sorted by (target, features): a canonical order independent of the
/// order the caller supplied, so bootstrap draws depend only on the data.
inline std::vector<std::size_t> canonical_order(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(x.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
    if (y(ia) != y(ib)) return y(ia) < y(ib);
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      if (x(ia, j) != x(ib, j)) return x(ia, j) < x(ib, j);
    return false;
  });
  return idx;
}

}  // namespace detail

struct RandomForest {
  std::vector<RegressionTree> trees;

  /// Mean over the first `n_trees` trees (all when 0).
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x, std::size_t n_trees = 0) const {
    if (n_trees == 0 || n_trees > trees.size()) n_trees = trees.size();
    double s = 0.0;
    for (std::size_t t = 0; t < n_trees; ++t) s += trees[t].predict(x);
    return s / static_cast<double>(n_trees);
  }

  std::vector<double> tree_predictions(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    std::vector<double> out;
    out.reserve(trees.size());
    for (const auto& t : trees) out.push_back(t.predict(x));
    return out;
  }
};

inline RandomForest fit_forest(const Eigen::MatrixXd& x_in, const Eigen::VectorXd& y_in, int n_trees,
                               std::uint64_t seed) {
  const auto order = detail::canonical_order(x_in, y_in);
  Eigen::MatrixXd x(x_in.rows(), x_in.cols());
  Eigen::VectorXd y(y_in.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = x_in.row(static_cast<Eigen::Index>(order[i]));
    y(static_cast<Eigen::Index>(i)) = y_in(static_cast<Eigen::Index>(order[i]));
  }
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const std::size_t p = static_cast<std::size_t>(x.cols());
  const std::size_t mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p)))));
  RandomForest forest;
  forest.trees.reserve(static_cast<std::size_t>(n_trees));
  for (int t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(seed, "tree", static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = rng.index(n);
    std::sort(rows.begin(), rows.end());
    detail::TreeBuilder builder(x, y, mtry, rng);
    forest.trees.push_back(builder.build(std::move(rows)));
  }
  return forest;
}

}  // namespace spiro::learn
