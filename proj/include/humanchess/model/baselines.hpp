#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <numeric>
#include <vector>

#include "humanchess/util/rng.hpp"

namespace hc::model {

// Flattened-feature baselines for the blunder task. Features are the
// plane-major blunder inputs (1088 or 1408 values).

struct FeatureStats {
  size_t constant_columns = 0;
};

inline FeatureStats analyze_features(const std::vector<std::vector<float>>& x) {
  FeatureStats st;
  if (x.empty()) return st;
  const size_t d = x[0].size();
  for (size_t j = 0; j < d; ++j) {
    const float v0 = x[0][j];
    bool constant = true;
    for (const auto& row : x)
      if (row[j] != v0) {
        constant = false;
        break;
      }
    if (constant) ++st.constant_columns;
  }
  return st;
}

// --- logistic regression ---------------------------------------------------

struct LogitConfig {
  double lr = 0.5;
  uint64_t max_iters = 500;
  double tol = 1e-7;  // stop when the loss improvement falls below this
  double l2 = 1e-6;
};

struct LinearModel {
  std::vector<double> w;
  double b = 0;

  double score(const std::vector<float>& x) const {
    double z = b;
    for (size_t j = 0; j < w.size(); ++j) z += w[j] * x[j];
    return 1.0 / (1.0 + std::exp(-z));
  }
  bool predict(const std::vector<float>& x) const { return score(x) >= 0.5; }
};

// Full-batch gradient descent on the logistic loss to tolerance.
inline LinearModel train_logit(const std::vector<std::vector<float>>& x,
                               const std::vector<uint8_t>& y, const LogitConfig& cfg = {}) {
  if (x.empty()) throw std::invalid_argument("no training rows");
  const size_t n = x.size(), d = x[0].size();
  LinearModel m;
  m.w.assign(d, 0.0);
  std::vector<double> grad(d);
  double prev_loss = 1e300;
  for (uint64_t iter = 0; iter < cfg.max_iters; ++iter) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double gb = 0, loss = 0;
    for (size_t i = 0; i < n; ++i) {
      const double p = m.score(x[i]);
      const double t = y[i] ? 1.0 : 0.0;
      const double e = p - t;
      loss -= t * std::log(std::max(p, 1e-12)) + (1 - t) * std::log(std::max(1 - p, 1e-12));
      for (size_t j = 0; j < d; ++j) grad[j] += e * x[i][j];
      gb += e;
    }
    loss /= n;
    for (size_t j = 0; j < d; ++j) {
      loss += 0.5 * cfg.l2 * m.w[j] * m.w[j];
      m.w[j] -= cfg.lr * (grad[j] / n + cfg.l2 * m.w[j]);
    }
    m.b -= cfg.lr * gb / n;
    if (std::abs(prev_loss - loss) < cfg.tol) break;
    prev_loss = loss;
  }
  return m;
}

// --- random forest -----------------------------------------------------------

struct ForestConfig {
  int trees = 100;
  int max_depth = 16;  // 0 = unbounded
  int min_samples_split = 2;
  int features_per_split = 0;  // 0 = round(sqrt(d))
  bool bootstrap = true;
  uint64_t seed = 1;
  int threads = 2;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  float threshold = 0;
  int left = -1, right = -1;
  float value = 0;  // leaf: fraction of positives
};

struct Forest {
  std::vector<std::vector<TreeNode>> trees;

  double score(const std::vector<float>& x) const {
    double sum = 0;
    for (const auto& tree : trees) {
      int at = 0;
      while (tree[at].feature >= 0)
        at = x[tree[at].feature] <= tree[at].threshold ? tree[at].left : tree[at].right;
      sum += tree[at].value;
    }
    return sum / static_cast<double>(trees.size());
  }
  bool predict(const std::vector<float>& x) const { return score(x) >= 0.5; }
};

namespace forest_detail {

struct Builder {
  const std::vector<std::vector<float>>& x;
  const std::vector<uint8_t>& y;
  const ForestConfig& cfg;
  int features_per_split;
  Rng rng;
  std::vector<TreeNode> nodes;

  int build(std::vector<uint32_t>& idx, int begin, int end, int depth) {
    const int node_id = static_cast<int>(nodes.size());
    nodes.push_back({});
    int positives = 0;
    for (int i = begin; i < end; ++i) positives += y[idx[i]];
    const int count = end - begin;
    nodes[node_id].value = static_cast<float>(positives) / static_cast<float>(count);

    const bool pure = positives == 0 || positives == count;
    const bool too_deep = cfg.max_depth > 0 && depth >= cfg.max_depth;
    if (pure || too_deep || count < cfg.min_samples_split) return node_id;

    // Gini gain over a seeded feature subsample
    int best_feature = -1;
    float best_threshold = 0;
    double best_impurity = 1e300;
    const size_t d = x[0].size();
    std::vector<std::pair<float, uint8_t>> column(count);
    for (int f = 0; f < features_per_split; ++f) {
      const int feature = static_cast<int>(rng.next_below(d));
      for (int i = 0; i < count; ++i)
        column[i] = {x[idx[begin + i]][feature], y[idx[begin + i]]};
      std::sort(column.begin(), column.end());
      int left_pos = 0;
      for (int i = 0; i < count - 1; ++i) {
        left_pos += column[i].second;
        if (column[i].first == column[i + 1].first) continue;
        const int nl = i + 1, nr = count - nl;
        const double pl = static_cast<double>(left_pos) / nl;
        const double pr = static_cast<double>(positives - left_pos) / nr;
        const double gini = nl * 2.0 * pl * (1 - pl) + nr * 2.0 * pr * (1 - pr);
        if (gini < best_impurity) {
          best_impurity = gini;
          best_feature = feature;
          best_threshold = (column[i].first + column[i + 1].first) / 2.0f;
        }
      }
    }
    if (best_feature < 0) return node_id;  // all sampled features constant here

    auto mid_it = std::stable_partition(idx.begin() + begin, idx.begin() + end,
                                        [&](uint32_t i) { return x[i][best_feature] <= best_threshold; });
    const int mid = static_cast<int>(mid_it - idx.begin());
    if (mid == begin || mid == end) return node_id;

    nodes[node_id].feature = best_feature;
    nodes[node_id].threshold = best_threshold;
    const int left = build(idx, begin, mid, depth + 1);
    nodes[node_id].left = left;
    nodes[node_id].right = build(idx, mid, end, depth + 1);
    return node_id;
  }
};

inline std::vector<TreeNode> build_tree(const std::vector<std::vector<float>>& x,
                                        const std::vector<uint8_t>& y, const ForestConfig& cfg,
                                        int features_per_split, uint64_t tree_seed) {
  Rng rng(tree_seed);
  std::vector<uint32_t> idx;
  const size_t n = x.size();
  idx.reserve(n);
  if (cfg.bootstrap) {
    for (size_t i = 0; i < n; ++i) idx.push_back(static_cast<uint32_t>(rng.next_below(n)));
  } else {
    for (size_t i = 0; i < n; ++i) idx.push_back(static_cast<uint32_t>(i));
  }
  Builder b{x, y, cfg, features_per_split, rng.fork(1), {}};
  b.build(idx, 0, static_cast<int>(idx.size()), 0);
  return std::move(b.nodes);
}

}  // namespace forest_detail

// CART forest: Gini impurity, bootstrap sampling, per-split feature
// subsampling. Trees are seeded independently so parallel and serial builds
// agree exactly.
inline Forest train_forest(const std::vector<std::vector<float>>& x, const std::vector<uint8_t>& y,
                           const ForestConfig& cfg = {}) {
  if (x.empty()) throw std::invalid_argument("no training rows");
  const size_t d = x[0].size();
  const int features_per_split =
      cfg.features_per_split > 0 ? cfg.features_per_split
                                 : std::max(1, static_cast<int>(std::lround(std::sqrt(d))));
  Rng rng(cfg.seed);
  std::vector<uint64_t> seeds;
  for (int t = 0; t < cfg.trees; ++t) seeds.push_back(rng.next_u64());

  Forest forest;
  forest.trees.resize(cfg.trees);
  const int threads = std::max(1, cfg.threads);
  std::vector<std::future<void>> workers;
  std::atomic<int> next{0};
  for (int w = 0; w < threads; ++w) {
    workers.push_back(std::async(std::launch::async, [&] {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= cfg.trees) return;
        forest.trees[t] = forest_detail::build_tree(x, y, cfg, features_per_split, seeds[t]);
      }
    }));
  }
  for (auto& w : workers) w.get();
  return forest;
}

}  // namespace hc::model
