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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "d2d/bytes.hpp"
#include "d2d/random.hpp"

namespace d2d::bio {

inline constexpr std::size_t kNumFeatures = 4;
using FeatureVector = std::array<double, kNumFeatures>;

// One behavioral sample: device acceleration while typing (m/s^2) plus typing
// speed (chars/s), labelled with the user it came from.
struct FeatureReading {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double s = 1.0;
  std::uint32_t label = 0;
  std::uint64_t ts = 0;

  FeatureVector features() const noexcept { return {x, y, z, s}; }
  // Throws Error(InvalidParams) unless s > 0 and x, y, z are finite.
  void validate() const;

  bool operator==(const FeatureReading&) const = default;
};

struct Dataset {
  std::vector<FeatureReading> readings;
  std::uint32_t num_users = 0;

  std::size_t size() const noexcept { return readings.size(); }
};

// Center and spread of one synthetic user's behavior.
struct UserProfile {
  std::uint32_t label = 0;
  FeatureVector center{};
  FeatureVector stddev{};

  bool operator==(const UserProfile&) const = default;
};

enum class ClassifierKind : std::uint8_t {
  Knn = 0,
  LinearSvm = 1,
  DecisionTree = 2,
  GaussianNaiveBayes = 3,
  LogisticRegression = 4,
};

// In tie-break order.
inline constexpr std::array<ClassifierKind, 5> kAllKinds = {
    ClassifierKind::Knn, ClassifierKind::LinearSvm, ClassifierKind::DecisionTree,
    ClassifierKind::GaussianNaiveBayes, ClassifierKind::LogisticRegression};

std::string_view kind_name(ClassifierKind kind) noexcept;
std::optional<ClassifierKind> parse_kind(std::string_view name) noexcept;

struct Hyperparameters {
  std::size_t knn_k = 5;
  std::size_t tree_max_depth = 8;
  std::size_t tree_min_leaf = 1;
  double nb_variance_floor = 1e-9;
  double lr_learning_rate = 0.1;
  std::size_t lr_epochs = 500;
  double svm_learning_rate = 0.1;
  double svm_lambda = 0.01;
  std::size_t svm_epochs = 500;
};

struct Scaler {
  FeatureVector mean{};
  FeatureVector stddev{1.0, 1.0, 1.0, 1.0};

  static Scaler fit(const Dataset& ds);
  static Scaler identity() { return {}; }
  FeatureVector apply(const FeatureVector& v) const noexcept;

  bool operator==(const Scaler&) const = default;
};

struct KnnParams {
  std::size_t k = 5;
  std::vector<FeatureVector> points;
  std::vector<std::uint32_t> labels;
  bool operator==(const KnnParams&) const = default;
};

// One-vs-rest linear scorer, used by both logistic regression and the SVM.
struct LinearParams {
  std::vector<FeatureVector> weights;
  std::vector<double> bias;
  bool operator==(const LinearParams&) const = default;
};

struct NaiveBayesParams {
  std::vector<FeatureVector> means;
  std::vector<FeatureVector> variances;
  std::vector<double> log_priors;
  bool operator==(const NaiveBayesParams&) const = default;
};

struct TreeNode {
  // -1 marks a leaf.
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t label = 0;
  bool operator==(const TreeNode&) const = default;
};

struct TreeParams {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t depth() const;
  bool operator==(const TreeParams&) const = default;
};

/// A fitted classifier M. `classes` lists the training labels in ascending
/// order; per-class parameter vectors are indexed in the same order.
struct TrainedModel {
  ClassifierKind kind = ClassifierKind::Knn;
  Scaler scaler;
  std::vector<std::uint32_t> classes;
  std::variant<KnnParams, LinearParams, TreeParams, NaiveBayesParams> params;

  bool operator==(const TrainedModel&) const = default;
};

struct EvalReport {
  double accuracy = 0.0;
  double mcc = 0.0;
  // Row = true label, column = predicted label.
  std::vector<std::vector<std::uint64_t>> confusion;
};

struct SelectionResult {
  TrainedModel best;
  std::vector<std::pair<ClassifierKind, EvalReport>> per_kind;
};

std::vector<UserProfile> make_profiles(std::uint32_t num_users, double separation, RandomSource& rng);
FeatureReading sample_reading(const UserProfile& profile, std::uint64_t ts, RandomSource& rng);

// Draws per-user centers, then readings_per_user samples per user in label
// order. stddev per feature = range / (separation * num_users); separation 0
// is rejected, and a non-finite separation yields zero spread.
Dataset generate_synthetic(std::uint32_t num_users, std::uint32_t readings_per_user, double separation,
                           RandomSource& rng, std::vector<UserProfile>* profiles_out = nullptr);

// Stratified per label; each label puts ceil(fraction * count) readings in
// test, clamped so that train keeps at least one.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, RandomSource& rng);

TrainedModel train(ClassifierKind kind, const Dataset& train_set, const Hyperparameters& hp = {});
std::uint32_t predict(const TrainedModel& m, const FeatureReading& r);

// Per-class posterior for a naive Bayes model, aligned with m.classes.
std::vector<double> nb_posterior(const TrainedModel& m, const FeatureReading& r);

EvalReport evaluate(const TrainedModel& m, const Dataset& test);
// Gorodkin's multiclass generalization; 0 when a denominator term is 0.
double mcc_from_confusion(const std::vector<std::vector<std::uint64_t>>& confusion);

SelectionResult select_model(const Dataset& ds, const std::vector<ClassifierKind>& kinds, double test_fraction,
                             RandomSource& rng, const Hyperparameters& hp = {});

bool verify_user(const TrainedModel& m, const FeatureReading& r, std::uint32_t expected_owner);

// Captures a fresh reading of one user's behavior on each call.
class BehaviorSensor {
 public:
  BehaviorSensor(UserProfile profile, RandomSource rng) : profile_(profile), rng_(std::move(rng)) {}

  FeatureReading capture(std::uint64_t ts) { return sample_reading(profile_, ts, rng_); }
  const UserProfile& profile() const noexcept { return profile_; }

 private:
  UserProfile profile_;
  RandomSource rng_;
};

// CSV with header "label,x,y,z,s,ts"; doubles printed with 17 significant
// digits so files round-trip exactly.
std::string write_dataset_csv(const Dataset& ds);
Dataset read_dataset_csv(std::string_view text);

// "label,cx,cy,cz,cs,sx,sy,sz,ss"
std::string write_profiles_csv(const std::vector<UserProfile>& profiles);
std::vector<UserProfile> read_profiles_csv(std::string_view text);

// "BIO1", kind tag byte, then length-prefixed fields.
Bytes save_model(const TrainedModel& m);
TrainedModel load_model(ByteView data);

}  // namespace d2d::bio
