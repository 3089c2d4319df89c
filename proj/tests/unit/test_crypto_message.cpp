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
#include "d2d/error.hpp"
#include "d2d/message.hpp"

using namespace d2d;
using namespace d2d::proto;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Ok;
}

std::string hex(const Digest& d) { return to_hex(d); }

}  // namespace

// Reference digests computed with a stock SHA-256 over the framed input.
TEST(Hash, GoldenValues) {
  EXPECT_EQ(hex(hash_fields({})), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const Bytes abc = string_bytes("abc");
  EXPECT_EQ(hex(hash_fields({ByteView(abc)})),
            "d04b72a650ce0f8ce4963330a53ee2832733d2baeffff3c1d8e256cca096d120");
  const Bytes a{0x00}, b{0x01};
  EXPECT_EQ(hex(hash_fields({ByteView(a), ByteView(b)})),
            "8f17ef4c44715c53fc79002ad16bd699b35f78c09e7e608f3993c744f9245f2d");
  EXPECT_EQ(to_hex(derive_enc_key(0x0123456789abcdefULL, 64)),
            "e4b8c004b190046e54412e096f7afbb12c987f0067637a610279413c8a4d4d95");
}

TEST(Hash, FramingSeparatesFieldBoundaries) {
  const Bytes ab = string_bytes("ab"), c = string_bytes("c"), a = string_bytes("a"), bc = string_bytes("bc");
  EXPECT_NE(hash_fields({ByteView(ab), ByteView(c)}), hash_fields({ByteView(a), ByteView(bc)}));
}

TEST(Envelope, SealOpenAndTamper) {
  RandomSource rng(1);
  const Key k = derive_enc_key(42, 64);
  const Bytes msg = string_bytes("reading and nonce");
  const CipherEnvelope env = seal(k, msg, rng);
  EXPECT_EQ(open(k, env), msg);
  const Bytes wire = env.encode();
  EXPECT_EQ(wire.size(), msg.size() + 12 + 16);
  EXPECT_EQ(CipherEnvelope::decode(wire), env);
  EXPECT_EQ(open(k, wire), msg);

  for (std::size_t bit = 0; bit < wire.size() * 8; bit += 7) {
    Bytes bad = wire;
    bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    EXPECT_EQ(code_of([&] { open(k, bad); }), Errc::AuthFailure) << bit;
  }
  EXPECT_EQ(code_of([&] { open(derive_enc_key(43, 64), env); }), Errc::AuthFailure);
  EXPECT_EQ(code_of([&] { CipherEnvelope::decode(Bytes(27, 0)); }), Errc::MalformedEncoding);

  const CipherEnvelope again = seal(k, msg, rng);
  EXPECT_NE(again.nonce, env.nonce);
}

TEST(Vpn, BothSidesDeriveTheSameKey) {
  RandomSource ra(2), rb(3);
  VpnHandshake a(ra), b(rb);
  EXPECT_TRUE(a.has_secret());
  const Key ka = a.finish(b.public_value(), true);
  const Key kb = b.finish(a.public_value(), false);
  EXPECT_EQ(ka, kb);
  EXPECT_FALSE(a.has_secret());
  EXPECT_EQ(code_of([&] { a.finish(b.public_value(), true); }), Errc::KeyAgreementFailure);

  RandomSource rc(4);
  VpnHandshake c(rc);
  EXPECT_EQ(code_of([&] { c.finish(Bytes(32, 0), true); }), Errc::KeyAgreementFailure);
  RandomSource rd(5);
  VpnHandshake d(rd);
  EXPECT_EQ(code_of([&] { d.finish(Bytes(31, 9), true); }), Errc::KeyAgreementFailure);
}

TEST(Vpn, RoleOrderMatters) {
  RandomSource ra(2), rb(3);
  VpnHandshake a(ra), b(rb);
  EXPECT_NE(a.finish(b.public_value(), true), b.finish(a.public_value(), true));
}

TEST(Message, RoundTripEveryTag) {
  RandomSource rng(7);
  for (std::uint8_t raw = 1; raw <= 15; ++raw) {
    const auto n = field_count(raw);
    ASSERT_TRUE(n.has_value()) << int(raw);
    for (int trial = 0; trial < 20; ++trial) {
      Message m;
      m.tag = static_cast<Tag>(raw);
      for (std::size_t f = 0; f < *n; ++f) m.fields.push_back(rng.bytes(rng.uniform(40)));
      const Bytes wire = m.encode();
      EXPECT_EQ(wire[0], raw);
      EXPECT_EQ(Message::decode(wire), m);
      if (wire.size() > 1) {
        const Bytes cut(wire.begin(), wire.end() - 1);
        EXPECT_EQ(code_of([&] { Message::decode(cut); }), Errc::MalformedEncoding);
      }
      Bytes extra = wire;
      extra.push_back(0);
      EXPECT_EQ(code_of([&] { Message::decode(extra); }), Errc::MalformedEncoding);
    }
  }
  EXPECT_FALSE(field_count(0).has_value());
  EXPECT_FALSE(field_count(16).has_value());
  EXPECT_EQ(code_of([] { Message::decode(Bytes{16}); }), Errc::MalformedEncoding);
  EXPECT_EQ(code_of([] { Message::decode(Bytes{}); }), Errc::MalformedEncoding);
}

TEST(Message, WrongFieldCountRejected) {
  Message m;
  m.tag = Tag::Reject;
  m.fields = {Bytes{1}, Bytes{2}};
  EXPECT_ANY_THROW(Message::decode(m.encode()));
}

TEST(Message, FieldLists) {
  const std::vector<Bytes> fs = {Bytes{1, 2}, Bytes{}, Bytes{9}};
  const Bytes enc = encode_fields(fs);
  EXPECT_EQ(decode_fields(enc, 3), fs);
  EXPECT_EQ(code_of([&] { decode_fields(enc, 2); }), Errc::MalformedEncoding);
  EXPECT_EQ(code_of([&] { decode_fields(enc, 4); }), Errc::MalformedEncoding);
}

TEST(Message, ReadingEncoding) {
  bio::FeatureReading r;
  r.x = -1.5;
  r.y = 0.25;
  r.z = 9.81;
  r.s = 4.0;
  r.ts = 77;
  r.label = 3;
  const Bytes enc = encode_reading(r);
  ASSERT_EQ(enc.size(), kReadingSize);
  EXPECT_EQ(to_hex(ByteView(enc).subspan(0, 8)), "bff8000000000000");
  bio::FeatureReading back = decode_reading(enc);
  EXPECT_EQ(back.label, 0u);
  back.label = 3;
  EXPECT_EQ(back, r);

  r.s = 0;
  EXPECT_EQ(code_of([&] { encode_reading(r); }), Errc::InvalidParams);
  Bytes zero_speed = enc;
  std::fill(zero_speed.begin() + 24, zero_speed.begin() + 32, 0);
  EXPECT_EQ(code_of([&] { decode_reading(zero_speed); }), Errc::MalformedEncoding);
  EXPECT_EQ(code_of([&] { decode_reading(Bytes(39, 0)); }), Errc::MalformedEncoding);
}

TEST(Message, Names) {
  EXPECT_EQ(step_of(Tag::AuthReq), 1);
  EXPECT_EQ(step_of(Tag::BProof), 9);
  EXPECT_EQ(step_of(Tag::Reject), 0);
  EXPECT_FALSE(tag_name(Tag::VpnHello).empty());
}
