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

#include "d2d/crypto.hpp"
#include "d2d/message.hpp"
#include "d2d/scenario.hpp"
#include "world.hpp"

using namespace d2d;
using namespace d2d::proto;
using namespace d2d::scenario;
using d2d::testing::EditPolicy;
using d2d::testing::flip_byte;

namespace {

const d2d::testing::Fixture& fixture() {
  static const d2d::testing::Fixture f = [] {
    ScenarioConfig cfg;
    cfg.seed = 77;
    cfg.tickets_per_device = 16;
    return d2d::testing::make_fixture(cfg);
  }();
  return f;
}

const crp::SerialNumber kB = serial_for(0);
const crp::SerialNumber kA = serial_for(1);

bool contains(const Bytes& hay, ByteView needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

TEST(Protocol, HappyPathMessageSequence) {
  auto w = fixture().world();
  const SessionResult r = w->run_session(kB, kA);
  ASSERT_TRUE(r.success()) << to_string(r.b.reason) << " / " << to_string(r.a.reason);
  std::vector<int> tags;
  for (const auto& e : r.transcript) tags.push_back(e.bytes[0]);
  EXPECT_EQ(tags, (std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}));
  EXPECT_EQ(r.transcript[0].from, kB.str());
  EXPECT_EQ(r.transcript[0].to, TrustedAuthority::kId);
  EXPECT_EQ(r.transcript[7].from, kA.str());  // A opens the channel
  ASSERT_TRUE(r.ta.has_value());
  EXPECT_TRUE(r.ta->outcome.success());
  EXPECT_FALSE(r.ta->outcome.key.has_value());
}

TEST(Protocol, TicketsSpentAndBitmapsMirrored) {
  auto w = fixture().world();
  for (int i = 0; i < 3; ++i) {
    const SessionResult r = w->run_session(kB, kA);
    ASSERT_TRUE(r.success());
    EXPECT_EQ(r.tickets_b, kTicketsPerDevicePerSession);
    EXPECT_EQ(r.tickets_a, kTicketsPerDevicePerSession);
  }
  for (crp::SerialNumber sn : {kB, kA}) {
    const auto& rec = w->ta().uirs().at(sn);
    EXPECT_EQ(rec.consumed.count(), 6u);
    EXPECT_EQ(w->device(sn).tickets().consumed, rec.consumed);
  }
}

TEST(Protocol, KeysDifferAcrossSessions) {
  auto w = fixture().world();
  const SessionResult r1 = w->run_session(kB, kA);
  const SessionResult r2 = w->run_session(kA, kB);
  ASSERT_TRUE(r1.success());
  ASSERT_TRUE(r2.success());
  EXPECT_NE(*r1.b.key, *r2.b.key);
}

TEST(Protocol, SessionKeyNeverOnTheWire) {
  auto w = fixture().world();
  const SessionResult r = w->run_session(kB, kA);
  ASSERT_TRUE(r.success());
  const Digest z = *r.b.key;
  const Bytes seed_b = block_to_bytes(w->device(kB).tickets().seed, 64);
  const Bytes seed_a = block_to_bytes(w->device(kA).tickets().seed, 64);
  for (const auto& e : r.transcript) {
    EXPECT_FALSE(contains(e.bytes, z));
    EXPECT_FALSE(contains(e.bytes, seed_b));
    EXPECT_FALSE(contains(e.bytes, seed_a));
    const Message m = Message::decode(e.bytes);
    for (const Bytes& f : m.fields) EXPECT_FALSE(digest_equal(f, z));
  }
}

TEST(Protocol, UnknownPeerRejected) {
  auto w = fixture().world();
  const SessionResult r = w->run_session(kB, crp::SerialNumber{9999});
  EXPECT_TRUE(r.b.rejected());
  EXPECT_EQ(r.b.reason, Errc::UnknownSerial);
  EXPECT_EQ(r.tickets_b, 0u);
}

TEST(Protocol, ForgedNonceInBResponse) {
  auto w = fixture().world();
  w->bus().install_adversary(std::make_unique<EditPolicy>(3, flip_byte(0)));
  const SessionResult r = w->run_session(kB, kA);
  EXPECT_FALSE(r.success());
  EXPECT_EQ(r.b.reason, Errc::NonceMismatch);
  ASSERT_TRUE(r.ta.has_value());
  EXPECT_EQ(r.ta->outcome.reason, Errc::NonceMismatch);
  EXPECT_FALSE(r.a.key.has_value());
}

TEST(Protocol, TamperedTaHashDetected) {
  auto w = fixture().world();
  // H_TB is the first field: tag byte, 4 length bytes, then the digest.
  w->bus().install_adversary(std::make_unique<EditPolicy>(2, [](const sim::Envelope& env) {
    Bytes b = env.bytes;
    b[5] ^= 0x80;
    return std::vector<Bytes>{b};
  }));
  const SessionResult r = w->run_session(kB, kA);
  EXPECT_TRUE(r.b.rejected());
  EXPECT_EQ(r.b.reason, Errc::HashMismatch);
  EXPECT_EQ(r.ta->outcome.status, Status::Rejected);
}

TEST(Protocol, OutOfPhaseMessageAborts) {
  auto w = fixture().world();
  // A dispatch arriving before B has answered its challenge.
  w->bus().install_adversary(std::make_unique<EditPolicy>(2, [](const sim::Envelope& env) {
    Message early{Tag::TaDispatchB, {Bytes(40, 7)}};
    return std::vector<Bytes>{early.encode(), env.bytes};
  }));
  const SessionResult r = w->run_session(kB, kA);
  EXPECT_TRUE(r.b.rejected());
  EXPECT_EQ(r.b.reason, Errc::UnexpectedMessage);
  EXPECT_FALSE(r.success());
}

TEST(Protocol, StrayMessageToIdleDevice) {
  auto w = fixture().world();
  const Message stray{Tag::VpnAccept, {Bytes(32, 1)}};
  w->bus().post(sim::Envelope{kA.str(), serial_for(2).str(), stray.encode()});
  const auto t = w->bus().run_until_idle();
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[1].bytes, make_reject(Errc::UnexpectedMessage));
  EXPECT_EQ(w->device(serial_for(2)).outcome().reason, Errc::UnexpectedMessage);
}

TEST(Protocol, ReplayedChallengeDefeated) {
  auto w = fixture().world();
  const ReplayTrial t = run_replay(*w, kB, kA);
  EXPECT_TRUE(t.first.success());
  EXPECT_TRUE(t.defeated()) << to_string(t.victim.reason);
}

TEST(Protocol, ImpersonationDefeated) {
  auto w = fixture().world();
  const ImpersonationTrial t = run_impersonation(*w, crp::SerialNumber{4242}, kA);
  EXPECT_TRUE(t.defeated());
  EXPECT_EQ(t.ta_sessions_opened, 0u);
  ASSERT_FALSE(t.replies.empty());
}

TEST(Protocol, ClonedDeviceRejected) {
  const auto& f = fixture();
  Provisioning prov = f.prov;
  prov.devices[0] = clone_of(prov.devices[0], f.cfg, 555);
  World w(f.cfg, std::move(prov), f.enr.selection.best, f.enr.profiles, "clone");
  const SessionResult as_b = w.run_session(kB, kA);
  EXPECT_FALSE(as_b.success());
  EXPECT_TRUE(as_b.b.rejected());
  const SessionResult as_a = w.run_session(kA, kB);
  EXPECT_FALSE(as_a.success());
  EXPECT_FALSE(as_a.a.key.has_value());
}

TEST(Protocol, ExhaustionTriggersUpdate) {
  auto w = fixture().world();
  for (int i = 0; i < 8; ++i) ASSERT_TRUE(w->run_session(kB, kA).success()) << i;
  EXPECT_TRUE(w->ta().needs_update(kB));
  const SessionResult no_auto = w->run_session(kB, kA, false);
  EXPECT_EQ(no_auto.b.reason, Errc::UpdateRequired);
  const SessionResult r = w->run_session(kB, kA);
  ASSERT_TRUE(r.success());
  EXPECT_EQ(r.updated, (std::vector<crp::SerialNumber>{kB, kA}));
  for (crp::SerialNumber sn : {kB, kA}) {
    const auto& rec = w->ta().uirs().at(sn);
    EXPECT_EQ(rec.consumed.count(), 2u);
    EXPECT_EQ(rec.seed, w->device(sn).tickets().seed);
    EXPECT_EQ(rec.responses, crp::regenerate_list(w->device(sn).cipher(), rec.seed, rec.t()));
  }
}

TEST(Protocol, UpdateNonceMismatchKeepsOldState) {
  auto w = fixture().world();
  for (int i = 0; i < 8; ++i) ASSERT_TRUE(w->run_session(kB, kA).success());
  const Provisioning before = w->snapshot();
  // Last 16 bytes of UPDATE_INIT are the cleartext R_T.
  w->bus().install_adversary(std::make_unique<EditPolicy>(13, flip_byte(3)));
  const UpdateResult u = w->run_update(kB);
  EXPECT_FALSE(u.success());
  EXPECT_EQ(u.device.reason, Errc::NonceMismatch);
  EXPECT_EQ(u.ta.status, Status::Rejected);
  const Provisioning after = w->snapshot();
  EXPECT_EQ(after.uirs, before.uirs);
  EXPECT_EQ(after.devices[0].state, before.devices[0].state);

  w->bus().remove_adversary();
  EXPECT_TRUE(w->run_session(kB, kA).success());
}

TEST(Protocol, TaBlindOverHonestSession) {
  auto w = fixture().world();
  const SessionResult r = w->run_session(kB, kA);
  ASSERT_TRUE(r.success());
  const BlindnessReport rep = check_ta_blindness(*w, r);
  EXPECT_TRUE(rep.passed());
  EXPECT_GT(rep.view_values, 50u);
  EXPECT_EQ(rep.pairs_checked, rep.view_values * rep.view_values);
}

TEST(Protocol, TamperFuzzSample) {
  const auto& f = fixture();
  RandomSource rng(3);
  for (std::uint64_t msg = 0; msg < 11; ++msg) {
    for (TamperClass c : {TamperClass::Tag, TamperClass::LengthPrefix, TamperClass::Payload}) {
      World w(f.cfg, f.prov, f.enr.selection.best, f.enr.profiles, "fuzz");
      const SessionResult clean = w.run_session(kB, kA);
      ASSERT_TRUE(clean.success());
      const std::size_t size = clean.transcript[msg].bytes.size();
      const TamperTrial t = run_tamper(w, kB, kA, msg, pick_tamper_bit(c, size, rng));
      EXPECT_TRUE(t.fired);
      EXPECT_TRUE(t.defeated()) << "message " << msg << " class " << tamper_class_name(c);
    }
  }
}

// Frozen digest of the transcript of the first session under seed 77.
TEST(Protocol, GoldenTranscript) {
  auto run = [] {
    auto w = fixture().world("golden");
    return sim::format_transcript(w->run_session(kB, kA).transcript);
  };
  const std::string text = run();
  EXPECT_EQ(text, run());
  const Bytes raw = string_bytes(text);
  EXPECT_EQ(to_hex(hash_fields({ByteView(raw)})), "e30572ee19cff5923ad7a2549e1204b5bc3791b4e2d36273ea4048d5777c080e");
}
