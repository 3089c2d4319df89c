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

#include "d2d/biometric.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "d2d/error.hpp"

namespace d2d::bio {

namespace {

constexpr double kAccelMin = -10.0;
constexpr double kAccelMax = 10.0;
constexpr double kSpeedMin = 1.0;
constexpr double kSpeedMax = 10.0;
constexpr double kSpeedFloor = 0.01;

}  // namespace

void FeatureReading::validate() const {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
    throw Error(Errc::InvalidParams, "acceleration must be finite");
  }
  if (!(s > 0.0) || !std::isfinite(s)) throw Error(Errc::InvalidParams, "typing speed must be positive");
}

std::string_view kind_name(ClassifierKind kind) noexcept {
  switch (kind) {
    case ClassifierKind::Knn: return "kNN";
    case ClassifierKind::LinearSvm: return "LinearSVM";
    case ClassifierKind::DecisionTree: return "DecisionTree";
    case ClassifierKind::GaussianNaiveBayes: return "GaussianNaiveBayes";
    case ClassifierKind::LogisticRegression: return "LogisticRegression";
  }
  return "unknown";
}

std::optional<ClassifierKind> parse_kind(std::string_view name) noexcept {
  for (ClassifierKind k : kAllKinds) {
    if (kind_name(k) == name) return k;
  }
  if (name == "knn") return ClassifierKind::Knn;
  if (name == "svm") return ClassifierKind::LinearSvm;
  if (name == "tree") return ClassifierKind::DecisionTree;
  if (name == "nb") return ClassifierKind::GaussianNaiveBayes;
  if (name == "lr") return ClassifierKind::LogisticRegression;
  return std::nullopt;
}

std::vector<UserProfile> make_profiles(std::uint32_t num_users, double separation, RandomSource& rng) {
  if (num_users < 2) throw Error(Errc::InvalidParams, "need at least 2 users");
  if (!(separation > 0.0)) throw Error(Errc::InvalidParams, "separation must be positive");
  const double users = static_cast<double>(num_users);
  const double accel_sd = (kAccelMax - kAccelMin) / (separation * users);
  const double speed_sd = (kSpeedMax - kSpeedMin) / (separation * users);

  std::vector<UserProfile> profiles;
  profiles.reserve(num_users);
  for (std::uint32_t u = 0; u < num_users; ++u) {
    UserProfile p;
    p.label = u;
    p.center[0] = rng.uniform(kAccelMin, kAccelMax);
    p.center[1] = rng.uniform(kAccelMin, kAccelMax);
    p.center[2] = rng.uniform(kAccelMin, kAccelMax);
    p.center[3] = rng.uniform(kSpeedMin, kSpeedMax);
    p.stddev = {accel_sd, accel_sd, accel_sd, speed_sd};
    profiles.push_back(p);
  }
  return profiles;
}

FeatureReading sample_reading(const UserProfile& profile, std::uint64_t ts, RandomSource& rng) {
  FeatureReading r;
  r.x = rng.gaussian(profile.center[0], profile.stddev[0]);
  r.y = rng.gaussian(profile.center[1], profile.stddev[1]);
  r.z = rng.gaussian(profile.center[2], profile.stddev[2]);
  r.s = std::max(rng.gaussian(profile.center[3], profile.stddev[3]), kSpeedFloor);
  r.label = profile.label;
  r.ts = ts;
  return r;
}

Dataset generate_synthetic(std::uint32_t num_users, std::uint32_t readings_per_user, double separation,
                           RandomSource& rng, std::vector<UserProfile>* profiles_out) {
  if (readings_per_user < 4) throw Error(Errc::InvalidParams, "need at least 4 readings per user");
  std::vector<UserProfile> profiles = make_profiles(num_users, separation, rng);
  Dataset ds;
  ds.num_users = num_users;
  ds.readings.reserve(static_cast<std::size_t>(num_users) * readings_per_user);
  std::uint64_t ts = 0;
  for (const UserProfile& p : profiles) {
    for (std::uint32_t i = 0; i < readings_per_user; ++i) ds.readings.push_back(sample_reading(p, ts++, rng));
  }
  if (profiles_out) *profiles_out = std::move(profiles);
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, RandomSource& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error(Errc::InvalidParams, "test_fraction must be in (0,1)");
  std::map<std::uint32_t, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < ds.size(); ++i) by_label[ds.readings[i].label].push_back(i);

  std::vector<bool> in_test(ds.size(), false);
  for (auto& [label, idx] : by_label) {
    if (idx.size() < 2) throw Error(Errc::TooFewReadings, "label " + std::to_string(label));
    for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng.uniform(i + 1)]);
    auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(idx.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    for (std::size_t k = 0; k < n_test; ++k) in_test[idx[k]] = true;
  }

  Dataset train_set;
  Dataset test_set;
  train_set.num_users = test_set.num_users = ds.num_users;
  for (std::size_t i = 0; i < ds.size(); ++i) (in_test[i] ? test_set : train_set).readings.push_back(ds.readings[i]);
  return {std::move(train_set), std::move(test_set)};
}

EvalReport evaluate(const TrainedModel& m, const Dataset& test) {
  if (test.readings.empty()) throw Error(Errc::InvalidParams, "empty test set");
  std::uint32_t dim = test.num_users;
  for (const auto& r : test.readings) dim = std::max(dim, r.label + 1);
  for (std::uint32_t c : m.classes) dim = std::max(dim, c + 1);

  EvalReport rep;
  rep.confusion.assign(dim, std::vector<std::uint64_t>(dim, 0));
  std::uint64_t correct = 0;
  for (const auto& r : test.readings) {
    std::uint32_t pred = predict(m, r);
    ++rep.confusion[r.label][pred];
    if (pred == r.label) ++correct;
  }
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  rep.mcc = mcc_from_confusion(rep.confusion);
  return rep;
}

double mcc_from_confusion(const std::vector<std::vector<std::uint64_t>>& confusion) {
  const std::size_t k = confusion.size();
  long double total = 0;
  long double trace = 0;
  std::vector<long double> true_counts(k, 0);
  std::vector<long double> pred_counts(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    if (confusion[i].size() != k) throw Error(Errc::InvalidParams, "confusion matrix must be square");
    for (std::size_t j = 0; j < k; ++j) {
      const auto v = static_cast<long double>(confusion[i][j]);
      total += v;
      true_counts[i] += v;
      pred_counts[j] += v;
      if (i == j) trace += v;
    }
  }
  long double cross = 0;
  long double pred_sq = 0;
  long double true_sq = 0;
  for (std::size_t i = 0; i < k; ++i) {
    cross += pred_counts[i] * true_counts[i];
    pred_sq += pred_counts[i] * pred_counts[i];
    true_sq += true_counts[i] * true_counts[i];
  }
  const long double den_pred = total * total - pred_sq;
  const long double den_true = total * total - true_sq;
  if (den_pred == 0 || den_true == 0) return 0.0;
  const long double mcc = (trace * total - cross) / std::sqrt(den_pred * den_true);
  return static_cast<double>(std::clamp<long double>(mcc, -1.0L, 1.0L));
}

SelectionResult select_model(const Dataset& ds, const std::vector<ClassifierKind>& kinds, double test_fraction,
                             RandomSource& rng, const Hyperparameters& hp) {
  if (kinds.empty()) throw Error(Errc::InvalidParams, "no classifier kinds given");
  std::vector<ClassifierKind> ordered = kinds;
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

  auto [train_set, test_set] = split(ds, test_fraction, rng);
  SelectionResult result;
  std::optional<double> best_accuracy;
  for (ClassifierKind kind : ordered) {
    TrainedModel m = train(kind, train_set, hp);
    EvalReport rep = evaluate(m, test_set);
    if (!best_accuracy || rep.accuracy > *best_accuracy) {
      best_accuracy = rep.accuracy;
      result.best = std::move(m);
    }
    result.per_kind.emplace_back(kind, std::move(rep));
  }
  return result;
}

bool verify_user(const TrainedModel& m, const FeatureReading& r, std::uint32_t expected_owner) {
  return predict(m, r) == expected_owner;
}

// ---------------------------------------------------------------------------
// Text formats

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string_view> split_csv_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  for (;;) {
    std::size_t end = line.find(',', pos);
    if (end == std::string_view::npos) {
      cells.push_back(line.substr(pos));
      return cells;
    }
    cells.push_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(Errc::MalformedEncoding, "bad number '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(Errc::MalformedEncoding, "bad integer '" + std::string(s) + "'");
  }
  return v;
}

std::uint32_t parse_label(std::string_view s) {
  std::uint64_t v = parse_u64(s);
  if (v > UINT32_MAX) throw Error(Errc::MalformedEncoding, "label out of range");
  return static_cast<std::uint32_t>(v);
}

// Non-empty lines after the header; the header must match exactly.
std::vector<std::string_view> csv_body(std::string_view text, std::string_view header) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    pos = end + 1;
  }
  if (lines.empty() || lines.front() != header) throw Error(Errc::MalformedEncoding, "missing CSV header");
  lines.erase(lines.begin());
  return lines;
}

}  // namespace

std::string write_dataset_csv(const Dataset& ds) {
  std::string out = "label,x,y,z,s,ts\n";
  for (const auto& r : ds.readings) {
    out += std::to_string(r.label) + ',' + fmt_double(r.x) + ',' + fmt_double(r.y) + ',' + fmt_double(r.z) + ',' +
           fmt_double(r.s) + ',' + std::to_string(r.ts) + '\n';
  }
  return out;
}

Dataset read_dataset_csv(std::string_view text) {
  Dataset ds;
  for (std::string_view line : csv_body(text, "label,x,y,z,s,ts")) {
    auto cells = split_csv_row(line);
    if (cells.size() != 6) throw Error(Errc::MalformedEncoding, "dataset row needs 6 columns");
    FeatureReading r;
    r.label = parse_label(cells[0]);
    r.x = parse_double(cells[1]);
    r.y = parse_double(cells[2]);
    r.z = parse_double(cells[3]);
    r.s = parse_double(cells[4]);
    r.ts = parse_u64(cells[5]);
    try {
      r.validate();
    } catch (const Error& e) {
      throw Error(Errc::MalformedEncoding, e.what());
    }
    ds.num_users = std::max(ds.num_users, r.label + 1);
    ds.readings.push_back(r);
  }
  return ds;
}

std::string write_profiles_csv(const std::vector<UserProfile>& profiles) {
  std::string out = "label,cx,cy,cz,cs,sx,sy,sz,ss\n";
  for (const auto& p : profiles) {
    out += std::to_string(p.label);
    for (double v : p.center) out += ',' + fmt_double(v);
    for (double v : p.stddev) out += ',' + fmt_double(v);
    out += '\n';
  }
  return out;
}

std::vector<UserProfile> read_profiles_csv(std::string_view text) {
  std::vector<UserProfile> out;
  for (std::string_view line : csv_body(text, "label,cx,cy,cz,cs,sx,sy,sz,ss")) {
    auto cells = split_csv_row(line);
    if (cells.size() != 9) throw Error(Errc::MalformedEncoding, "profile row needs 9 columns");
    UserProfile p;
    p.label = parse_label(cells[0]);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      p.center[f] = parse_double(cells[1 + f]);
      p.stddev[f] = parse_double(cells[5 + f]);
      if (!(p.stddev[f] >= 0.0)) throw Error(Errc::MalformedEncoding, "negative profile spread");
    }
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model persistence

namespace {

constexpr std::uint8_t kModelMagic[4] = {'B', 'I', 'O', '1'};

void put_f64(Bytes& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(Reader& in) { return std::bit_cast<double>(in.u64()); }

Bytes vectors_field(const std::vector<FeatureVector>& vs) {
  Bytes b;
  for (const auto& v : vs) {
    for (double x : v) put_f64(b, x);
  }
  return b;
}

std::vector<FeatureVector> read_vectors(ByteView field, std::size_t expected) {
  if (field.size() != expected * kNumFeatures * 8) throw Error(Errc::MalformedEncoding, "vector block length");
  Reader in(field);
  std::vector<FeatureVector> out(expected);
  for (auto& v : out) {
    for (double& x : v) x = get_f64(in);
  }
  return out;
}

Bytes doubles_field(const std::vector<double>& vs) {
  Bytes b;
  for (double x : vs) put_f64(b, x);
  return b;
}

std::vector<double> read_doubles(ByteView field, std::size_t expected) {
  if (field.size() != expected * 8) throw Error(Errc::MalformedEncoding, "scalar block length");
  Reader in(field);
  std::vector<double> out(expected);
  for (double& x : out) x = get_f64(in);
  return out;
}

}  // namespace

Bytes save_model(const TrainedModel& m) {
  Bytes out(std::begin(kModelMagic), std::end(kModelMagic));
  put_u8(out, static_cast<std::uint8_t>(m.kind));

  Bytes scaler;
  for (double v : m.scaler.mean) put_f64(scaler, v);
  for (double v : m.scaler.stddev) put_f64(scaler, v);
  put_field(out, scaler);

  Bytes classes;
  for (std::uint32_t c : m.classes) put_u32(classes, c);
  put_field(out, classes);

  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, KnnParams>) {
          put_field(out, u64_to_bytes(p.k));
          put_field(out, vectors_field(p.points));
          Bytes labels;
          for (std::uint32_t l : p.labels) put_u32(labels, l);
          put_field(out, labels);
        } else if constexpr (std::is_same_v<P, LinearParams>) {
          put_field(out, vectors_field(p.weights));
          put_field(out, doubles_field(p.bias));
        } else if constexpr (std::is_same_v<P, NaiveBayesParams>) {
          put_field(out, vectors_field(p.means));
          put_field(out, vectors_field(p.variances));
          put_field(out, doubles_field(p.log_priors));
        } else {
          Bytes nodes;
          for (const TreeNode& n : p.nodes) {
            put_u32(nodes, static_cast<std::uint32_t>(n.feature));
            put_f64(nodes, n.threshold);
            put_u32(nodes, n.left);
            put_u32(nodes, n.right);
            put_u32(nodes, n.label);
          }
          put_field(out, nodes);
        }
      },
      m.params);
  return out;
}

TrainedModel load_model(ByteView data) {
  Reader in(data);
  ByteView magic = in.raw(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kModelMagic))) {
    throw Error(Errc::MalformedEncoding, "bad model magic");
  }
  TrainedModel m;
  const std::uint8_t tag = in.u8();
  if (tag > static_cast<std::uint8_t>(ClassifierKind::LogisticRegression)) {
    throw Error(Errc::MalformedEncoding, "unknown classifier kind tag");
  }
  m.kind = static_cast<ClassifierKind>(tag);

  {
    ByteView f = in.field();
    std::vector<double> vals = read_doubles(f, 2 * kNumFeatures);
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      m.scaler.mean[i] = vals[i];
      m.scaler.stddev[i] = vals[kNumFeatures + i];
      if (!(m.scaler.stddev[i] > 0.0)) throw Error(Errc::MalformedEncoding, "scaler stddev must be positive");
    }
  }
  {
    ByteView f = in.field();
    if (f.size() % 4 != 0) throw Error(Errc::MalformedEncoding, "class list length");
    Reader cr(f);
    while (!cr.done()) m.classes.push_back(cr.u32());
    if (m.classes.size() < 2 || !std::is_sorted(m.classes.begin(), m.classes.end()) ||
        std::adjacent_find(m.classes.begin(), m.classes.end()) != m.classes.end()) {
      throw Error(Errc::MalformedEncoding, "class list must be ascending and distinct");
    }
  }
  const std::size_t c = m.classes.size();

  switch (m.kind) {
    case ClassifierKind::Knn: {
      KnnParams p;
      ByteView kf = in.field();
      if (kf.size() != 8) throw Error(Errc::MalformedEncoding, "k field length");
      p.k = Reader(kf).u64();
      ByteView pts = in.field();
      if (pts.size() % (kNumFeatures * 8) != 0) throw Error(Errc::MalformedEncoding, "point block length");
      const std::size_t n = pts.size() / (kNumFeatures * 8);
      p.points = read_vectors(pts, n);
      ByteView lf = in.field();
      if (lf.size() != n * 4) throw Error(Errc::MalformedEncoding, "label block length");
      Reader lr(lf);
      for (std::size_t i = 0; i < n; ++i) p.labels.push_back(lr.u32());
      if (p.k == 0 || n == 0) throw Error(Errc::MalformedEncoding, "empty kNN model");
      m.params = std::move(p);
      break;
    }
    case ClassifierKind::LinearSvm:
    case ClassifierKind::LogisticRegression: {
      LinearParams p;
      p.weights = read_vectors(in.field(), c);
      p.bias = read_doubles(in.field(), c);
      m.params = std::move(p);
      break;
    }
    case ClassifierKind::GaussianNaiveBayes: {
      NaiveBayesParams p;
      p.means = read_vectors(in.field(), c);
      p.variances = read_vectors(in.field(), c);
      p.log_priors = read_doubles(in.field(), c);
      for (const auto& v : p.variances) {
        for (double x : v) {
          if (!(x > 0.0)) throw Error(Errc::MalformedEncoding, "variance must be positive");
        }
      }
      m.params = std::move(p);
      break;
    }
    case ClassifierKind::DecisionTree: {
      TreeParams p;
      ByteView f = in.field();
      constexpr std::size_t kNodeBytes = 4 + 8 + 4 + 4 + 4;
      if (f.empty() || f.size() % kNodeBytes != 0) throw Error(Errc::MalformedEncoding, "tree block length");
      Reader nr(f);
      const std::size_t n = f.size() / kNodeBytes;
      for (std::size_t i = 0; i < n; ++i) {
        TreeNode node;
        node.feature = static_cast<std::int32_t>(nr.u32());
        node.threshold = get_f64(nr);
        node.left = nr.u32();
        node.right = nr.u32();
        node.label = nr.u32();
        if (node.feature >= static_cast<std::int32_t>(kNumFeatures) || node.feature < -1) {
          throw Error(Errc::MalformedEncoding, "tree feature index");
        }
        // Children always follow their parent, which also rules out cycles.
        if (node.feature >= 0 && (node.left <= i || node.right <= i || node.left >= n || node.right >= n ||
                                  !std::isfinite(node.threshold))) {
          throw Error(Errc::MalformedEncoding, "tree node links");
        }
        p.nodes.push_back(node);
      }
      m.params = std::move(p);
      break;
    }
  }
  in.expect_done();
  return m;
}

}  // namespace d2d::bio
