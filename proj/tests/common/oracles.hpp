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

#pragma once

// Reference computations written independently of the library code, used to
// check it. They favour the plainest possible formulation over speed.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace d2d::oracle {

using Point = std::array<double, 4>;

struct Labeled {
  Point p;
  std::uint32_t label;
};

// Population mean / stddev per feature; a zero stddev is replaced by 1.
inline std::pair<Point, Point> standardize_params(const std::vector<Labeled>& data) {
  Point mean{}, sd{};
  for (const auto& d : data)
    for (int f = 0; f < 4; ++f) mean[f] += d.p[f];
  for (int f = 0; f < 4; ++f) mean[f] /= static_cast<double>(data.size());
  for (const auto& d : data)
    for (int f = 0; f < 4; ++f) sd[f] += (d.p[f] - mean[f]) * (d.p[f] - mean[f]);
  for (int f = 0; f < 4; ++f) {
    sd[f] = std::sqrt(sd[f] / static_cast<double>(data.size()));
    if (sd[f] < 1e-12) sd[f] = 1.0;
  }
  return {mean, sd};
}

// Gaussian naive Bayes posterior for the query, evaluated directly from the
// definition P(c | q) = P(c) prod_f N(q_f; mu_cf, var_cf) / sum_c' (...).
// Features are standardized first and variances floored, matching the
// classifier's documented behaviour. Normalization is done in log space with
// an explicit max shift, otherwise the floored variances underflow.
inline std::vector<double> nb_posterior(const std::vector<Labeled>& data, const Point& query,
                                        double var_floor = 1e-9) {
  auto [mean, sd] = standardize_params(data);
  auto z = [&](const Point& p) {
    Point o;
    for (int f = 0; f < 4; ++f) o[f] = (p[f] - mean[f]) / sd[f];
    return o;
  };
  std::vector<std::uint32_t> classes;
  for (const auto& d : data) classes.push_back(d.label);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  const Point q = z(query);
  std::vector<double> log_joint;
  for (std::uint32_t c : classes) {
    std::vector<Point> members;
    for (const auto& d : data)
      if (d.label == c) members.push_back(z(d.p));
    double lj = std::log(static_cast<double>(members.size()) / static_cast<double>(data.size()));
    for (int f = 0; f < 4; ++f) {
      double mu = 0;
      for (const auto& m : members) mu += m[f];
      mu /= static_cast<double>(members.size());
      double var = 0;
      for (const auto& m : members) var += (m[f] - mu) * (m[f] - mu);
      var = std::max(var / static_cast<double>(members.size()), var_floor);
      const double pi = 3.14159265358979323846;
      lj += -0.5 * std::log(2 * pi * var) - (q[f] - mu) * (q[f] - mu) / (2 * var);
    }
    log_joint.push_back(lj);
  }
  const double top = *std::max_element(log_joint.begin(), log_joint.end());
  double total = 0;
  for (double v : log_joint) total += std::exp(v - top);
  std::vector<double> post;
  for (double v : log_joint) post.push_back(std::exp(v - top) / total);
  return post;
}

struct Split {
  int feature = -1;
  double threshold = 0;
  double impurity = std::numeric_limits<double>::infinity();
};

inline double gini(const std::vector<std::uint32_t>& labels) {
  if (labels.empty()) return 0;
  std::vector<std::uint32_t> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  double sum_sq = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double p = static_cast<double>(j - i) / static_cast<double>(sorted.size());
    sum_sq += p * p;
    i = j;
  }
  return 1 - sum_sq;
}

// Every feature, every midpoint between consecutive distinct values; the
// weighted Gini impurity of the two sides. First strict minimum wins.
inline Split best_split(const std::vector<Labeled>& data) {
  Split best;
  for (int f = 0; f < 4; ++f) {
    std::vector<double> values;
    for (const auto& d : data) values.push_back(d.p[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      const double thr = (values[i] + values[i + 1]) / 2;
      std::vector<std::uint32_t> left, right;
      for (const auto& d : data) (d.p[f] < thr ? left : right).push_back(d.label);
      const double n = static_cast<double>(data.size());
      const double imp = static_cast<double>(left.size()) / n * gini(left) +
                         static_cast<double>(right.size()) / n * gini(right);
      if (imp < best.impurity) best = Split{f, thr, imp};
    }
  }
  return best;
}

// (TP*TN - FP*FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN)), 0 on a zero term.
// confusion[true][pred], class 1 positive.
inline double binary_mcc(double tn, double fp, double fn, double tp) {
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0) return 0;
  return (tp * tn - fp * fn) / std::sqrt(den);
}

}  // namespace d2d::oracle
