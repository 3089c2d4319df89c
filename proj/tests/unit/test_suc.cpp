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

#include <algorithm>
#include <vector>

#include "d2d/error.hpp"
#include "d2d/suc.hpp"

using namespace d2d;
using namespace d2d::suc;

namespace {

SucInstance make(std::uint64_t seed, unsigned n, unsigned r = 8) {
  RandomSource rng(seed);
  return genie_create(rng, SucConfig{n, r});
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Ok;
}

}  // namespace

TEST(SucConfig, RejectsUnsupportedParameters) {
  EXPECT_EQ(code_of([] { SucConfig{15, 8}.validate(); }), Errc::InvalidConfig);
  EXPECT_EQ(code_of([] { SucConfig{24, 8}.validate(); }), Errc::InvalidConfig);
  EXPECT_EQ(code_of([] { SucConfig{256, 8}.validate(); }), Errc::InvalidConfig);
  EXPECT_EQ(code_of([] { SucConfig{64, 3}.validate(); }), Errc::InvalidConfig);
  for (unsigned n : {16u, 32u, 64u, 128u}) EXPECT_NO_THROW((SucConfig{n, 4}.validate()));
  RandomSource rng(1);
  EXPECT_EQ(code_of([&] { genie_create(rng, SucConfig{12, 8}); }), Errc::InvalidConfig);
}

TEST(Suc, SameSeedGivesIdenticalInstance) {
  const SucInstance a = make(42, 16);
  const SucInstance b = make(42, 16);
  EXPECT_EQ(a, b);
  EXPECT_EQ(serialize_instance(a), serialize_instance(b));
}

TEST(Suc, DifferentSeedsDisagreeSomewhere) {
  const SucInstance a = make(42, 16);
  const SucInstance b = make(43, 16);
  RandomSource probe(7);
  int differ = 0;
  for (int i = 0; i < 100; ++i) {
    const Block x = probe.next_block(16);
    differ += suc_eval(a, x) != suc_eval(b, x);
  }
  EXPECT_GE(differ, 1);
}

TEST(Suc, InstanceInvariants) {
  const SucInstance inst = make(5, 64, 16);
  EXPECT_NE(inst.constant(), Block{0});
  EXPECT_EQ(inst.round_keys().size(), 16u);
  ASSERT_EQ(inst.sboxes().size(), 16u);
  for (const Sbox& s : inst.sboxes()) {
    Sbox sorted = s;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 256; ++i) EXPECT_EQ(sorted[i], i);
  }
  for (auto k : inst.round_keys()) EXPECT_LT(k, std::uint64_t{1} << 32);
}

TEST(Suc, InvolutionWithoutFixedPointsAtEveryWidth) {
  for (unsigned n : {16u, 32u, 64u, 128u}) {
    const SucInstance inst = make(n, n, 6);
    RandomSource rng(n + 1);
    for (int i = 0; i < 2000; ++i) {
      const Block x = rng.next_block(n);
      const Block y = suc_eval(inst, x);
      EXPECT_EQ(y & block_mask(n), y);
      ASSERT_EQ(suc_eval(inst, y), x) << "n=" << n;
      ASSERT_NE(y, x) << "n=" << n;
    }
  }
}

TEST(Suc, BijectiveAt16Bits) {
  const SucInstance inst = make(2024, 16);
  std::vector<bool> seen(1 << 16, false);
  for (std::uint32_t x = 0; x < (1u << 16); ++x) {
    const auto y = static_cast<std::uint32_t>(suc_eval(inst, x));
    ASSERT_FALSE(seen[y]);
    seen[y] = true;
  }
}

TEST(Suc, FiftyInstancesAreDistinctOnFixedProbes) {
  std::vector<std::vector<Block>> images;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const SucInstance inst = make(1000 + s, 16);
    std::vector<Block> img;
    for (Block x = 0; x < 100; ++x) img.push_back(suc_eval(inst, x * 613));
    images.push_back(img);
  }
  for (std::size_t i = 0; i < images.size(); ++i)
    for (std::size_t j = i + 1; j < images.size(); ++j) EXPECT_NE(images[i], images[j]);
}

TEST(SucSerialization, RoundTripAndCanonical) {
  const SucInstance inst = make(77, 128, 5);
  const Bytes enc = serialize_instance(inst);
  EXPECT_EQ(enc, serialize_instance(inst));
  EXPECT_EQ(to_hex(ByteView(enc).first(8)), "5355433100800005");
  const SucInstance back = deserialize_instance(enc);
  EXPECT_EQ(back, inst);
  EXPECT_EQ(suc_eval(back, 12345), suc_eval(inst, 12345));
}

TEST(SucSerialization, RejectsMalformedInput) {
  const Bytes enc = serialize_instance(make(1, 16));
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{8}, enc.size() - 1}) {
    Bytes truncated(enc.begin(), enc.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_EQ(code_of([&] { deserialize_instance(truncated); }), Errc::MalformedEncoding) << cut;
  }
  Bytes bad_magic = enc;
  bad_magic[0] = 'X';
  EXPECT_EQ(code_of([&] { deserialize_instance(bad_magic); }), Errc::MalformedEncoding);
  Bytes trailing = enc;
  trailing.push_back(0);
  EXPECT_EQ(code_of([&] { deserialize_instance(trailing); }), Errc::MalformedEncoding);
  // Duplicate an sbox entry so the table is no longer a permutation.
  Bytes not_perm = enc;
  const SucInstance inst = deserialize_instance(enc);
  const Sbox& s0 = inst.sboxes()[0];
  const auto pos = std::search(not_perm.begin(), not_perm.end(), s0.begin(), s0.end());
  ASSERT_NE(pos, not_perm.end());
  *(pos + 1) = *pos;
  EXPECT_EQ(code_of([&] { deserialize_instance(not_perm); }), Errc::MalformedEncoding);
}

TEST(SucSerialization, KeepsNothingButParameters) {
  // The encoding is exactly header + r keys + r sboxes + K; no room for the
  // generator seed or stream.
  const unsigned n = 64, r = 8;
  const Bytes enc = serialize_instance(make(9, n, r));
  const std::size_t expected = 4 + 2 + 2 + r * (4 + n / 16) + r * (4 + 256) + (4 + n / 8);
  EXPECT_EQ(enc.size(), expected);
}
