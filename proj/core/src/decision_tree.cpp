#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "mtd/classifier.hpp"
#include "mtd/error.hpp"

namespace mtd {
namespace {

__extension__ typedef unsigned __int128 u128;

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> x;
  std::vector<std::uint32_t> y;
  std::vector<std::string> classes;

  double at(std::size_t r, std::size_t c) const { return x[r * cols + c]; }
};

Matrix to_matrix(const Dataset& ds) {
  if (ds.vectors.empty()) throw TrainError("training set is empty");
  if (ds.classes.empty()) throw TrainError("training set has no classes");
  Matrix m;
  m.rows = ds.vectors.size();
  m.cols = ds.feature_count();
  if (m.cols == 0) throw TrainError("training vectors have no features");
  m.classes = ds.classes;
  m.x.reserve(m.rows * m.cols);
  m.y.reserve(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const auto& v = ds.vectors[i];
    if (v.features.size() != m.cols) throw TrainError("vector " + std::to_string(i) + " has the wrong feature count");
    if (!v.label) throw TrainError("vector " + std::to_string(i) + " is unlabeled");
    auto c = ds.class_index(*v.label);
    if (c == ds.classes.size()) throw TrainError("vector " + std::to_string(i) + " has unknown label '" + *v.label + "'");
    for (double f : v.features)
      if (!std::isfinite(f)) throw TrainError("vector " + std::to_string(i) + " has a non-finite feature");
    m.x.insert(m.x.end(), v.features.begin(), v.features.end());
    m.y.push_back(static_cast<std::uint32_t>(c));
  }
  return m;
}

/// Greedy Gini tree construction over a (possibly repeated) sample of rows.
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& m, const TreeParams& params)
      : m_(m), params_(params), rng_(mix_seed(params.seed, 1)), n_classes_(m.classes.size()) {}

  DecisionTreeModel build(std::vector<std::uint32_t> rows) {
    rows_ = std::move(rows);
    buf_.resize(rows_.size());
    grow(0, rows_.size(), 0);
    DecisionTreeModel model;
    model.nodes = std::move(nodes_);
    model.classes = m_.classes;
    model.n_features = m_.cols;
    model.params = params_;
    return model;
  }

 private:
  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    // Score fraction num/den; larger is better (lower weighted impurity).
    u128 num = 0;
    u128 den = 1;
  };

  std::uint32_t grow(std::size_t begin, std::size_t end, unsigned depth) {
    const std::size_t n = end - begin;
    std::vector<std::uint32_t> counts(n_classes_, 0);
    for (std::size_t i = begin; i < end; ++i) ++counts[m_.y[rows_[i]]];
    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;

    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(TreeNode{});
    if (pure || depth >= params_.max_depth || n < 2 * std::max<std::size_t>(params_.min_samples_leaf, 1)) {
      nodes_[index].histogram = std::move(counts);
      return index;
    }

    const auto split = best_split(begin, end, counts);
    if (!split.found) {
      nodes_[index].histogram = std::move(counts);
      return index;
    }
    auto mid_it = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                        rows_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::uint32_t r) {
                                          return m_.at(r, split.feature) <= split.threshold;
                                        });
    const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());
    nodes_[index].feature = static_cast<std::int32_t>(split.feature);
    nodes_[index].threshold = split.threshold;
    const auto left = grow(begin, mid, depth + 1);
    const auto right = grow(mid, end, depth + 1);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> all(m_.cols);
    std::iota(all.begin(), all.end(), 0);
    const auto m = params_.max_features;
    if (m == 0 || m >= m_.cols) return all;
    for (std::size_t i = 0; i < m; ++i) {
      auto j = i + rng_.below(m_.cols - i);
      std::swap(all[i], all[j]);
    }
    all.resize(m);
    std::sort(all.begin(), all.end());
    return all;
  }

  Split best_split(std::size_t begin, std::size_t end, const std::vector<std::uint32_t>& counts) {
    const std::size_t n = end - begin;
    const std::size_t min_leaf = std::max<std::size_t>(params_.min_samples_leaf, 1);
    std::uint64_t total_sq = 0;
    for (auto c : counts) total_sq += std::uint64_t{c} * c;

    Split best;
    // A split must strictly beat the parent: sum_l^2/nl + sum_r^2/nr > sum^2/n.
    best.num = total_sq;
    best.den = n;

    std::vector<std::uint32_t> left(n_classes_);
    for (auto f : candidate_features()) {
      for (std::size_t i = begin; i < end; ++i) buf_[i - begin] = {m_.at(rows_[i], f), m_.y[rows_[i]]};
      std::sort(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(n));
      std::fill(left.begin(), left.end(), 0);
      std::uint64_t left_sq = 0;
      std::uint64_t right_sq = total_sq;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto c = buf_[i].second;
        const std::uint64_t l = left[c];
        const std::uint64_t r = counts[c] - l;
        left_sq += 2 * l + 1;
        right_sq -= 2 * r - 1;
        ++left[c];
        if (buf_[i].first == buf_[i + 1].first) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const u128 num = u128{left_sq} * nr + u128{right_sq} * nl;
        const u128 den = u128{nl} * nr;
        if (num * best.den > best.num * den) {
          best.found = true;
          best.feature = f;
          double mid = buf_[i].first + (buf_[i + 1].first - buf_[i].first) / 2.0;
          if (!(mid < buf_[i + 1].first)) mid = buf_[i].first;
          best.threshold = mid;
          best.num = num;
          best.den = den;
        }
      }
    }
    return best;
  }

  const Matrix& m_;
  TreeParams params_;
  Rng rng_;
  std::size_t n_classes_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::pair<double, std::uint32_t>> buf_;
  std::vector<TreeNode> nodes_;
};

std::size_t argmax_lowest(std::span<const std::uint32_t> counts) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i] > counts[best]) best = i;
  return best;
}

}  // namespace

const TreeNode& DecisionTreeModel::leaf_for(std::span<const double> x) const {
  std::uint32_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& node = nodes[i];
    i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[i];
}

unsigned DecisionTreeModel::depth() const {
  if (nodes.empty()) return 0;
  unsigned deepest = 0;
  std::vector<std::pair<std::uint32_t, unsigned>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(nodes[i].left, d + 1);
      stack.emplace_back(nodes[i].right, d + 1);
    }
  }
  return deepest;
}

Prediction DecisionTreeModel::predict(std::span<const double> x) const {
  const auto& leaf = leaf_for(x);
  const auto best = argmax_lowest(leaf.histogram);
  const auto total = std::accumulate(leaf.histogram.begin(), leaf.histogram.end(), std::uint64_t{0});
  return {classes[best], best, total ? static_cast<double>(leaf.histogram[best]) / static_cast<double>(total) : 0.0};
}

Prediction RandomForestModel::predict(std::span<const double> x) const {
  std::vector<std::uint32_t> votes(classes.size(), 0);
  for (const auto& tree : trees) ++votes[argmax_lowest(tree.leaf_for(x).histogram)];
  const auto best = argmax_lowest(votes);
  return {classes[best], best, trees.empty() ? 0.0 : static_cast<double>(votes[best]) / static_cast<double>(trees.size())};
}

Prediction KnnModel::predict(std::span<const double> x) const {
  const std::size_t n = labels.size();
  std::vector<std::pair<double, std::uint32_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = points.data() + i * n_features;
    double d = 0.0;
    for (std::size_t j = 0; j < n_features; ++j) {
      const double diff = p[j] - x[j];
      d += diff * diff;
    }
    dist[i] = {d, static_cast<std::uint32_t>(i)};
  }
  const std::size_t kk = std::min(k, n);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
  std::vector<std::uint32_t> votes(classes.size(), 0);
  for (std::size_t i = 0; i < kk; ++i) ++votes[labels[dist[i].second]];
  const auto best = argmax_lowest(votes);
  return {classes[best], best, kk ? static_cast<double>(votes[best]) / static_cast<double>(kk) : 0.0};
}

DecisionTreeModel train_tree(const Dataset& train, const TreeParams& params) {
  const auto m = to_matrix(train);
  std::vector<std::uint32_t> rows(m.rows);
  std::iota(rows.begin(), rows.end(), 0);
  return TreeBuilder(m, params).build(std::move(rows));
}

RandomForestModel train_forest(const Dataset& train, const ForestParams& params, std::uint64_t seed) {
  if (params.n_trees == 0) throw TrainError("forest needs at least one tree");
  const auto m = to_matrix(train);
  RandomForestModel forest;
  forest.classes = m.classes;
  forest.n_features = m.cols;
  forest.features_per_split = params.features_per_split
                                  ? std::min(params.features_per_split, m.cols)
                                  : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(m.cols))));
  forest.trees.resize(params.n_trees);
  forest.tree_seeds.resize(params.n_trees);
  for (std::size_t t = 0; t < params.n_trees; ++t) forest.tree_seeds[t] = mix_seed(seed, t);

  auto train_one = [&](std::size_t t) {
    Rng rng(forest.tree_seeds[t]);
    std::vector<std::uint32_t> rows(m.rows);
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<std::uint32_t>(rng.below(m.rows));
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeParams tp = params.tree;
    tp.max_features = forest.features_per_split;
    tp.seed = forest.tree_seeds[t];
    forest.trees[t] = TreeBuilder(m, tp).build(std::move(rows));
  };

  unsigned workers = params.threads ? params.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, params.n_trees));
  if (workers <= 1) {
    for (std::size_t t = 0; t < params.n_trees; ++t) train_one(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (auto t = next++; t < params.n_trees; t = next++) train_one(t);
      });
  }
  return forest;
}

KnnModel train_knn(const Dataset& train, std::size_t k) {
  if (k == 0) throw TrainError("k must be at least 1");
  auto m = to_matrix(train);
  KnnModel model;
  model.k = k;
  model.points = std::move(m.x);
  model.labels = std::move(m.y);
  model.classes = std::move(m.classes);
  model.n_features = m.cols;
  return model;
}

}  // namespace mtd
