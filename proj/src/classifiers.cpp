/*
 *
 * Copyright 2026 The d2dlink Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "d2d/biometric.hpp"
#include "d2d/error.hpp"

namespace d2d::bio {

namespace {

constexpr double kMinStddev = 1e-12;

std::vector<std::uint32_t> distinct_labels(const Dataset& ds) {
  std::vector<std::uint32_t> labels;
  for (const auto& r : ds.readings) labels.push_back(r.label);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

std::size_t class_index(const std::vector<std::uint32_t>& classes, std::uint32_t label) {
  auto it = std::lower_bound(classes.begin(), classes.end(), label);
  return static_cast<std::size_t>(it - classes.begin());
}

double dot(const FeatureVector& a, const FeatureVector& b) {
  double acc = 0.0;
  for (std::size_t f = 0; f < kNumFeatures; ++f) acc += a[f] * b[f];
  return acc;
}

// Index of the largest score; the first (smallest label) wins ties.
std::size_t argmax(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::vector<FeatureVector> standardized(const Dataset& ds, const Scaler& scaler) {
  std::vector<FeatureVector> out;
  out.reserve(ds.size());
  for (const auto& r : ds.readings) out.push_back(scaler.apply(r.features()));
  return out;
}

KnnParams fit_knn(const Dataset& ds, const Scaler& scaler, const Hyperparameters& hp) {
  KnnParams p;
  p.k = hp.knn_k;
  p.points = standardized(ds, scaler);
  for (const auto& r : ds.readings) p.labels.push_back(r.label);
  return p;
}

std::uint32_t predict_knn(const KnnParams& p, const FeatureVector& q) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(p.points.size());
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    double d = 0.0;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      double diff = p.points[i][f] - q[f];
      d += diff * diff;
    }
    dist.emplace_back(d, i);
  }
  const std::size_t k = std::min(p.k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::map<std::uint32_t, std::size_t> votes;
  for (std::size_t i = 0; i < k; ++i) ++votes[p.labels[dist[i].second]];
  std::uint32_t best = votes.begin()->first;
  std::size_t best_votes = 0;
  for (const auto& [label, n] : votes) {
    if (n > best_votes) {
      best = label;
      best_votes = n;
    }
  }
  return best;
}

// One-vs-rest batch gradient descent. Logistic loss when `hinge` is false,
// L2-regularized hinge loss (subgradient) when true.
LinearParams fit_linear(const Dataset& ds, const Scaler& scaler, const std::vector<std::uint32_t>& classes,
                        bool hinge, const Hyperparameters& hp) {
  const std::vector<FeatureVector> xs = standardized(ds, scaler);
  const double n = static_cast<double>(xs.size());
  const double rate = hinge ? hp.svm_learning_rate : hp.lr_learning_rate;
  const std::size_t epochs = hinge ? hp.svm_epochs : hp.lr_epochs;

  LinearParams p;
  for (std::uint32_t cls : classes) {
    FeatureVector w{};
    double b = 0.0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      FeatureVector gw{};
      double gb = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const bool positive = ds.readings[i].label == cls;
        const double score = dot(w, xs[i]) + b;
        double coeff = 0.0;
        if (hinge) {
          const double y = positive ? 1.0 : -1.0;
          if (y * score < 1.0) coeff = -y;
        } else {
          coeff = 1.0 / (1.0 + std::exp(-score)) - (positive ? 1.0 : 0.0);
        }
        for (std::size_t f = 0; f < kNumFeatures; ++f) gw[f] += coeff * xs[i][f];
        gb += coeff;
      }
      for (std::size_t f = 0; f < kNumFeatures; ++f) {
        double g = gw[f] / n;
        if (hinge) g += hp.svm_lambda * w[f];
        w[f] -= rate * g;
      }
      b -= rate * gb / n;
    }
    p.weights.push_back(w);
    p.bias.push_back(b);
  }
  return p;
}

NaiveBayesParams fit_nb(const Dataset& ds, const Scaler& scaler, const std::vector<std::uint32_t>& classes,
                        const Hyperparameters& hp) {
  const std::vector<FeatureVector> xs = standardized(ds, scaler);
  const std::size_t c = classes.size();
  NaiveBayesParams p;
  p.means.assign(c, FeatureVector{});
  p.variances.assign(c, FeatureVector{});
  std::vector<double> counts(c, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::size_t k = class_index(classes, ds.readings[i].label);
    counts[k] += 1.0;
    for (std::size_t f = 0; f < kNumFeatures; ++f) p.means[k][f] += xs[i][f];
  }
  for (std::size_t k = 0; k < c; ++k) {
    for (double& m : p.means[k]) m /= counts[k];
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::size_t k = class_index(classes, ds.readings[i].label);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      double d = xs[i][f] - p.means[k][f];
      p.variances[k][f] += d * d;
    }
  }
  for (std::size_t k = 0; k < c; ++k) {
    for (double& v : p.variances[k]) v = std::max(v / counts[k], hp.nb_variance_floor);
    p.log_priors.push_back(std::log(counts[k] / static_cast<double>(xs.size())));
  }
  return p;
}

std::vector<double> nb_log_joint(const NaiveBayesParams& p, const FeatureVector& q) {
  std::vector<double> out;
  out.reserve(p.means.size());
  for (std::size_t k = 0; k < p.means.size(); ++k) {
    double acc = p.log_priors[k];
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      double var = p.variances[k][f];
      double d = q[f] - p.means[k][f];
      acc += -0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
    }
    out.push_back(acc);
  }
  return out;
}

double gini(const std::vector<std::size_t>& counts, std::size_t total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (std::size_t n : counts) {
    double frac = static_cast<double>(n) / static_cast<double>(total);
    sum_sq += frac * frac;
  }
  return 1.0 - sum_sq;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& ds, const std::vector<std::uint32_t>& classes, const Hyperparameters& hp)
      : ds_(ds), classes_(classes), hp_(hp) {}

  TreeParams build() {
    std::vector<std::size_t> all(ds_.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    grow(all, 0);
    return std::move(tree_);
  }

 private:
  std::uint32_t grow(const std::vector<std::size_t>& idx, std::size_t depth) {
    const auto node_id = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    std::vector<std::size_t> counts(classes_.size(), 0);
    for (std::size_t i : idx) ++counts[class_index(classes_, ds_.readings[i].label)];
    std::size_t majority = 0;
    for (std::size_t k = 1; k < counts.size(); ++k) {
      if (counts[k] > counts[majority]) majority = k;
    }
    tree_.nodes[node_id].label = classes_[majority];

    const double parent_gini = gini(counts, idx.size());
    if (parent_gini == 0.0 || depth >= hp_.tree_max_depth || idx.size() < 2 * hp_.tree_min_leaf) return node_id;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = parent_gini;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      std::vector<std::size_t> order = idx;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ds_.readings[a].features()[f] < ds_.readings[b].features()[f];
      });
      std::vector<std::size_t> left(classes_.size(), 0);
      std::vector<std::size_t> right = counts;
      for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
        std::size_t k = class_index(classes_, ds_.readings[order[pos]].label);
        ++left[k];
        --right[k];
        const double lo = ds_.readings[order[pos]].features()[f];
        const double hi = ds_.readings[order[pos + 1]].features()[f];
        if (!(lo < hi)) continue;
        const std::size_t n_left = pos + 1;
        const std::size_t n_right = order.size() - n_left;
        if (n_left < hp_.tree_min_leaf || n_right < hp_.tree_min_leaf) continue;
        const double score = (static_cast<double>(n_left) * gini(left, n_left) +
                              static_cast<double>(n_right) * gini(right, n_right)) /
                             static_cast<double>(order.size());
        if (score < best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = lo + (hi - lo) / 2.0;
        }
      }
    }
    if (best_feature < 0) return node_id;

    std::vector<std::size_t> left_idx;
    std::vector<std::size_t> right_idx;
    for (std::size_t i : idx) {
      if (ds_.readings[i].features()[static_cast<std::size_t>(best_feature)] < best_threshold) {
        left_idx.push_back(i);
      } else {
        right_idx.push_back(i);
      }
    }
    tree_.nodes[node_id].feature = best_feature;
    tree_.nodes[node_id].threshold = best_threshold;
    const std::uint32_t l = grow(left_idx, depth + 1);
    const std::uint32_t r = grow(right_idx, depth + 1);
    tree_.nodes[node_id].left = l;
    tree_.nodes[node_id].right = r;
    return node_id;
  }

  const Dataset& ds_;
  const std::vector<std::uint32_t>& classes_;
  const Hyperparameters& hp_;
  TreeParams tree_;
};

std::uint32_t predict_tree(const TreeParams& p, const FeatureVector& q) {
  std::uint32_t node = 0;
  while (p.nodes[node].feature >= 0) {
    const TreeNode& n = p.nodes[node];
    node = q[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  return p.nodes[node].label;
}

std::size_t subtree_depth(const TreeParams& p, std::uint32_t node) {
  const TreeNode& n = p.nodes[node];
  if (n.feature < 0) return 0;
  return 1 + std::max(subtree_depth(p, n.left), subtree_depth(p, n.right));
}

}  // namespace

std::size_t TreeParams::depth() const { return nodes.empty() ? 0 : subtree_depth(*this, 0); }

Scaler Scaler::fit(const Dataset& ds) {
  Scaler s;
  if (ds.readings.empty()) return s;
  const double n = static_cast<double>(ds.size());
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    double sum = 0.0;
    for (const auto& r : ds.readings) sum += r.features()[f];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : ds.readings) {
      double d = r.features()[f] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / n);
    s.mean[f] = mean;
    s.stddev[f] = sd < kMinStddev ? 1.0 : sd;
  }
  return s;
}

FeatureVector Scaler::apply(const FeatureVector& v) const noexcept {
  FeatureVector out;
  for (std::size_t f = 0; f < kNumFeatures; ++f) out[f] = (v[f] - mean[f]) / stddev[f];
  return out;
}

TrainedModel train(ClassifierKind kind, const Dataset& train_set, const Hyperparameters& hp) {
  if (train_set.readings.empty()) throw Error(Errc::DegenerateData, "empty training set");
  for (const auto& r : train_set.readings) r.validate();
  TrainedModel m;
  m.kind = kind;
  m.classes = distinct_labels(train_set);
  if (m.classes.size() < 2) throw Error(Errc::DegenerateData, "training data has a single class");
  m.scaler = kind == ClassifierKind::DecisionTree ? Scaler::identity() : Scaler::fit(train_set);

  switch (kind) {
    case ClassifierKind::Knn:
      m.params = fit_knn(train_set, m.scaler, hp);
      break;
    case ClassifierKind::LinearSvm:
      m.params = fit_linear(train_set, m.scaler, m.classes, true, hp);
      break;
    case ClassifierKind::LogisticRegression:
      m.params = fit_linear(train_set, m.scaler, m.classes, false, hp);
      break;
    case ClassifierKind::GaussianNaiveBayes:
      m.params = fit_nb(train_set, m.scaler, m.classes, hp);
      break;
    case ClassifierKind::DecisionTree:
      m.params = TreeBuilder(train_set, m.classes, hp).build();
      break;
  }
  return m;
}

std::uint32_t predict(const TrainedModel& m, const FeatureReading& r) {
  const FeatureVector q = m.scaler.apply(r.features());
  return std::visit(
      [&](const auto& p) -> std::uint32_t {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, KnnParams>) {
          return predict_knn(p, q);
        } else if constexpr (std::is_same_v<P, TreeParams>) {
          return predict_tree(p, q);
        } else if constexpr (std::is_same_v<P, NaiveBayesParams>) {
          return m.classes[argmax(nb_log_joint(p, q))];
        } else {
          std::vector<double> scores;
          for (std::size_t k = 0; k < p.weights.size(); ++k) scores.push_back(dot(p.weights[k], q) + p.bias[k]);
          return m.classes[argmax(scores)];
        }
      },
      m.params);
}

std::vector<double> nb_posterior(const TrainedModel& m, const FeatureReading& r) {
  const auto* p = std::get_if<NaiveBayesParams>(&m.params);
  if (!p) throw Error(Errc::InvalidParams, "not a naive Bayes model");
  std::vector<double> lj = nb_log_joint(*p, m.scaler.apply(r.features()));
  const double top = *std::max_element(lj.begin(), lj.end());
  double total = 0.0;
  for (double& v : lj) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : lj) v /= total;
  return lj;
}

}  // namespace d2d::bio
