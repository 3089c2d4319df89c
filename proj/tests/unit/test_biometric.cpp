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

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "d2d/biometric.hpp"
#include "d2d/error.hpp"
#include "oracles.hpp"

using namespace d2d;
using namespace d2d::bio;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Ok;
}

FeatureReading reading(double x, double y, double z, double s, std::uint32_t label) {
  FeatureReading r;
  r.x = x;
  r.y = y;
  r.z = z;
  r.s = s;
  r.label = label;
  return r;
}

std::vector<oracle::Labeled> to_oracle(const Dataset& ds) {
  std::vector<oracle::Labeled> out;
  for (const auto& r : ds.readings) out.push_back({{r.x, r.y, r.z, r.s}, r.label});
  return out;
}

Dataset tiny_two_class() {
  Dataset ds;
  ds.num_users = 2;
  for (int i = 0; i < 3; ++i) ds.readings.push_back(reading(0, 0, 0, 1, 0));
  for (int i = 0; i < 3; ++i) ds.readings.push_back(reading(8, 8, 8, 5, 1));
  return ds;
}

}  // namespace

TEST(NaiveBayes, MatchesOracleOnDegenerateClasses) {
  const Dataset ds = tiny_two_class();
  const TrainedModel m = train(ClassifierKind::GaussianNaiveBayes, ds);
  const FeatureReading q = reading(0.1, 0, 0, 1.1, 0);
  const auto got = nb_posterior(m, q);
  const auto want = oracle::nb_posterior(to_oracle(ds), {0.1, 0, 0, 1.1});
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t c = 0; c < got.size(); ++c) EXPECT_NEAR(got[c], want[c], 1e-9);
  EXPECT_EQ(predict(m, q), 0u);
  EXPECT_EQ(predict(m, reading(7.9, 8, 8.1, 5, 0)), 1u);
}

TEST(NaiveBayes, MatchesOracleOnSpreadData) {
  RandomSource rng(21);
  const Dataset ds = generate_synthetic(5, 30, 2.0, rng);
  const TrainedModel m = train(ClassifierKind::GaussianNaiveBayes, ds);
  const auto data = to_oracle(ds);
  RandomSource probe(22);
  for (int i = 0; i < 50; ++i) {
    const FeatureReading q = ds.readings[probe.uniform(ds.size())];
    const FeatureReading jitter = reading(q.x + probe.gaussian(0, 0.5), q.y + probe.gaussian(0, 0.5),
                                          q.z + probe.gaussian(0, 0.5), q.s + 0.1, 0);
    const auto got = nb_posterior(m, jitter);
    const auto want = oracle::nb_posterior(data, {jitter.x, jitter.y, jitter.z, jitter.s});
    double sum = 0;
    for (std::size_t c = 0; c < got.size(); ++c) {
      EXPECT_NEAR(got[c], want[c], 1e-9);
      sum += got[c];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(DecisionTree, RootSplitMatchesExhaustiveSearch) {
  Hyperparameters hp;
  hp.tree_max_depth = 1;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RandomSource rng(seed);
    const Dataset ds = generate_synthetic(3, 15, 1.5, rng);
    const TrainedModel m = train(ClassifierKind::DecisionTree, ds, hp);
    const auto& tree = std::get<TreeParams>(m.params);
    const oracle::Split want = oracle::best_split(to_oracle(ds));
    ASSERT_GE(want.feature, 0);
    ASSERT_EQ(tree.nodes.size(), 3u);
    EXPECT_EQ(tree.nodes[0].feature, want.feature) << "seed " << seed;
    EXPECT_NEAR(tree.nodes[0].threshold, want.threshold, 1e-9 * (1 + std::abs(want.threshold)));
    EXPECT_EQ(tree.depth(), 1u);
  }
}

TEST(DecisionTree, SeparatesTinyDataset) {
  const TrainedModel m = train(ClassifierKind::DecisionTree, tiny_two_class());
  EXPECT_EQ(predict(m, reading(1, 1, 1, 1, 0)), 0u);
  EXPECT_EQ(predict(m, reading(7, 7, 7, 4, 0)), 1u);
}

TEST(Knn, OneNeighbourReturnsNearestLabel) {
  Hyperparameters hp;
  hp.knn_k = 1;
  Dataset ds;
  ds.num_users = 3;
  ds.readings = {reading(0, 0, 0, 1, 0), reading(10, 0, 0, 1, 1), reading(0, 10, 0, 2, 2), reading(1, 1, 1, 1.5, 0)};
  const TrainedModel m = train(ClassifierKind::Knn, ds, hp);
  for (const auto& r : ds.readings) EXPECT_EQ(predict(m, r), r.label);
  EXPECT_EQ(predict(m, reading(9, 1, 0, 1, 0)), 1u);
}

TEST(Mcc, ClosedFormCases) {
  EXPECT_DOUBLE_EQ(mcc_from_confusion({{5, 0}, {0, 5}}), 1.0);
  EXPECT_DOUBLE_EQ(mcc_from_confusion({{2, 2}, {2, 2}}), 0.0);
  EXPECT_DOUBLE_EQ(mcc_from_confusion({{0, 5}, {5, 0}}), -1.0);
  EXPECT_DOUBLE_EQ(mcc_from_confusion({{4, 0}, {4, 0}}), 0.0);
  EXPECT_EQ(code_of([] { mcc_from_confusion({{1, 2}, {3}}); }), Errc::InvalidParams);
}

TEST(Mcc, BinaryAgreesWithTextbookFormula) {
  RandomSource rng(5);
  for (int i = 0; i < 20; ++i) {
    const std::uint64_t tn = rng.uniform(50), fp = rng.uniform(50), fn = rng.uniform(50), tp = rng.uniform(50);
    const double got = mcc_from_confusion({{tn, fp}, {fn, tp}});
    EXPECT_NEAR(got, oracle::binary_mcc(double(tn), double(fp), double(fn), double(tp)), 1e-12);
  }
}

TEST(Mcc, StaysInRange) {
  RandomSource rng(6);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 2 + rng.uniform(5);
    std::vector<std::vector<std::uint64_t>> c(k, std::vector<std::uint64_t>(k));
    for (auto& row : c)
      for (auto& v : row) v = rng.uniform(20);
    const double m = mcc_from_confusion(c);
    ASSERT_GE(m, -1.0);
    ASSERT_LE(m, 1.0);
  }
}

TEST(Evaluate, AccuracyOfNineOutOfTen) {
  Hyperparameters hp;
  hp.knn_k = 1;
  Dataset train_set;
  train_set.num_users = 2;
  train_set.readings = {reading(0, 0, 0, 1, 0), reading(10, 10, 10, 3, 1)};
  const TrainedModel m = train(ClassifierKind::Knn, train_set, hp);
  Dataset test;
  test.num_users = 2;
  for (int i = 0; i < 5; ++i) test.readings.push_back(reading(0.1 * i, 0, 0, 1, 0));
  for (int i = 0; i < 4; ++i) test.readings.push_back(reading(10, 10 - 0.1 * i, 10, 3, 1));
  test.readings.push_back(reading(0, 0, 0, 1, 1));  // the one miss
  const EvalReport rep = evaluate(m, test);
  EXPECT_DOUBLE_EQ(rep.accuracy, 0.9);
  EXPECT_EQ(rep.confusion[1][0], 1u);
  EXPECT_NEAR(rep.mcc, oracle::binary_mcc(5, 0, 1, 4), 1e-12);
}

TEST(Data, GenerateCountsAndDeterminism) {
  RandomSource a(9), b(9);
  std::vector<UserProfile> pa, pb;
  const Dataset da = generate_synthetic(6, 12, 20.0, a, &pa);
  const Dataset db = generate_synthetic(6, 12, 20.0, b, &pb);
  EXPECT_EQ(da.size(), 72u);
  EXPECT_EQ(da.num_users, 6u);
  EXPECT_EQ(da.readings, db.readings);
  EXPECT_EQ(pa, pb);
  std::map<std::uint32_t, int> per;
  for (const auto& r : da.readings) {
    ++per[r.label];
    EXPECT_GT(r.s, 0.0);
  }
  for (std::uint32_t u = 0; u < 6; ++u) EXPECT_EQ(per[u], 12);
  RandomSource c(9);
  EXPECT_EQ(code_of([&] { generate_synthetic(3, 5, 0.0, c); }), Errc::InvalidParams);
}

TEST(Data, SplitIsStratifiedAndClamped) {
  RandomSource rng(10);
  const Dataset ds = generate_synthetic(4, 10, 20.0, rng);
  auto [tr, te] = split(ds, 0.3, rng);
  EXPECT_EQ(te.size(), 12u);
  EXPECT_EQ(tr.size(), 28u);
  auto [tr2, te2] = split(ds, 0.99, rng);
  EXPECT_EQ(tr2.size(), 4u);
  EXPECT_EQ(code_of([&] { split(ds, 0.0, rng); }), Errc::InvalidParams);
  Dataset lonely;
  lonely.readings = {reading(0, 0, 0, 1, 0)};
  EXPECT_EQ(code_of([&] { split(lonely, 0.3, rng); }), Errc::TooFewReadings);
}

TEST(Data, ReadingValidation) {
  EXPECT_NO_THROW(reading(0, 0, 0, 0.5, 0).validate());
  EXPECT_EQ(code_of([] { reading(0, 0, 0, 0, 0).validate(); }), Errc::InvalidParams);
  EXPECT_EQ(code_of([] { reading(NAN, 0, 0, 1, 0).validate(); }), Errc::InvalidParams);
}

TEST(Scaler, PredictionsInvariantToUnitChange) {
  RandomSource rng(12);
  const Dataset ds = generate_synthetic(4, 20, 5.0, rng);
  Dataset scaled = ds;
  for (auto& r : scaled.readings) {
    r.x *= 1000;
    r.y *= 1000;
    r.z *= 1000;
  }
  for (ClassifierKind k : {ClassifierKind::Knn, ClassifierKind::GaussianNaiveBayes}) {
    const TrainedModel m1 = train(k, ds);
    const TrainedModel m2 = train(k, scaled);
    for (std::size_t i = 0; i < ds.size(); ++i)
      EXPECT_EQ(predict(m1, ds.readings[i]), predict(m2, scaled.readings[i])) << kind_name(k);
  }
}

TEST(Selection, PicksArgmaxWithEarliestKindOnTies) {
  RandomSource gen(13);
  const Dataset ds = generate_synthetic(4, 40, 20.0, gen);
  RandomSource sel(14);
  const SelectionResult res = select_model(ds, {kAllKinds.begin(), kAllKinds.end()}, 0.3, sel);
  ASSERT_EQ(res.per_kind.size(), 5u);
  double best = -1;
  ClassifierKind first_best{};
  for (const auto& [k, rep] : res.per_kind) {
    if (rep.accuracy > best) {
      best = rep.accuracy;
      first_best = k;
    }
  }
  EXPECT_EQ(res.best.kind, first_best);
  // Well separated users: every kind is perfect, so the first listed wins.
  EXPECT_EQ(res.best.kind, ClassifierKind::Knn);

  RandomSource sel2(14);
  const SelectionResult again = select_model(ds, {kAllKinds.begin(), kAllKinds.end()}, 0.3, sel2);
  EXPECT_EQ(again.best, res.best);
}

TEST(Selection, AccuracyGrowsWithSeparation) {
  auto acc = [](double sep) {
    double total = 0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      RandomSource rng(100 + s);
      const Dataset ds = generate_synthetic(8, 30, sep, rng);
      total += select_model(ds, {ClassifierKind::GaussianNaiveBayes}, 0.3, rng).per_kind[0].second.accuracy;
    }
    return total / 5;
  };
  const double lo = acc(0.2), mid = acc(1.0), hi = acc(20.0);
  EXPECT_LE(lo, mid + 0.05);
  EXPECT_LE(mid, hi + 1e-12);
  EXPECT_GT(hi, 0.95);
}

TEST(Verify, OwnerAcceptedStrangerRejected) {
  RandomSource rng(15);
  std::vector<UserProfile> profiles;
  const Dataset ds = generate_synthetic(5, 40, 20.0, rng, &profiles);
  const TrainedModel m = select_model(ds, {kAllKinds.begin(), kAllKinds.end()}, 0.3, rng).best;
  BehaviorSensor sensor(profiles[2], RandomSource(16));
  for (int i = 0; i < 20; ++i) {
    const FeatureReading r = sensor.capture(i);
    EXPECT_TRUE(verify_user(m, r, 2));
    EXPECT_FALSE(verify_user(m, r, 3));
  }
}

TEST(Persistence, CsvAndModelRoundTrip) {
  RandomSource rng(17);
  std::vector<UserProfile> profiles;
  const Dataset ds = generate_synthetic(3, 10, 20.0, rng, &profiles);
  const Dataset back = read_dataset_csv(write_dataset_csv(ds));
  EXPECT_EQ(back.readings, ds.readings);
  EXPECT_EQ(read_profiles_csv(write_profiles_csv(profiles)), profiles);
  EXPECT_EQ(write_dataset_csv(ds).substr(0, 17), "label,x,y,z,s,ts\n");

  for (ClassifierKind k : kAllKinds) {
    const TrainedModel m = train(k, ds);
    const Bytes blob = save_model(m);
    EXPECT_EQ(load_model(blob), m) << kind_name(k);
    EXPECT_EQ(blob[0], 'B');
    Bytes cut(blob.begin(), blob.end() - 1);
    EXPECT_EQ(code_of([&] { load_model(cut); }), Errc::MalformedEncoding);
    Bytes longer = blob;
    longer.push_back(0);
    EXPECT_EQ(code_of([&] { load_model(longer); }), Errc::MalformedEncoding);
  }
  EXPECT_EQ(code_of([] { read_dataset_csv("label,x,y,z,s,ts\n0,1,2\n"); }), Errc::MalformedEncoding);
}

TEST(Kinds, NamesRoundTrip) {
  for (ClassifierKind k : kAllKinds) EXPECT_EQ(parse_kind(kind_name(k)), k);
  EXPECT_FALSE(parse_kind("forest").has_value());
}
