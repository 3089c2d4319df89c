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

#include "d2d/message.hpp"

#include <bit>

#include "d2d/error.hpp"

namespace d2d::proto {

std::string_view tag_name(Tag tag) noexcept {
  switch (tag) {
    case Tag::AuthReq: return "AUTH_REQ";
    case Tag::TaChallengeB: return "TA_CHALLENGE_B";
    case Tag::BResponse: return "B_RESPONSE";
    case Tag::TaChallengeA: return "TA_CHALLENGE_A";
    case Tag::AResponse: return "A_RESPONSE";
    case Tag::TaDispatchB: return "TA_DISPATCH_B";
    case Tag::TaDispatchA: return "TA_DISPATCH_A";
    case Tag::VpnHello: return "VPN_HELLO";
    case Tag::VpnAccept: return "VPN_ACCEPT";
    case Tag::AChallenge: return "A_CHALLENGE";
    case Tag::BProof: return "B_PROOF";
    case Tag::Reject: return "REJECT";
    case Tag::UpdateInit: return "UPDATE_INIT";
    case Tag::UpdateResponse: return "UPDATE_RESPONSE";
    case Tag::UpdateAck: return "UPDATE_ACK";
  }
  return "UNKNOWN";
}

int step_of(Tag tag) noexcept {
  switch (tag) {
    case Tag::AuthReq: return 1;
    case Tag::TaChallengeB: return 2;
    case Tag::BResponse: return 3;
    case Tag::TaChallengeA: return 4;
    case Tag::AResponse: return 5;
    case Tag::TaDispatchB:
    case Tag::TaDispatchA: return 6;
    case Tag::VpnHello:
    case Tag::VpnAccept: return 7;
    case Tag::AChallenge: return 8;
    case Tag::BProof: return 9;
    default: return 0;
  }
}

std::optional<std::size_t> field_count(std::uint8_t raw_tag) noexcept {
  switch (static_cast<Tag>(raw_tag)) {
    case Tag::AuthReq: return 2;
    case Tag::TaChallengeB: return 3;
    case Tag::BResponse: return 2;
    case Tag::TaChallengeA: return 4;
    case Tag::AResponse: return 2;
    case Tag::TaDispatchB: return 1;
    case Tag::TaDispatchA: return 1;
    case Tag::VpnHello: return 1;
    case Tag::VpnAccept: return 1;
    case Tag::AChallenge: return 1;
    case Tag::BProof: return 1;
    case Tag::Reject: return 1;
    case Tag::UpdateInit: return 2;
    case Tag::UpdateResponse: return 2;
    case Tag::UpdateAck: return 1;
  }
  return std::nullopt;
}

Bytes Message::encode() const {
  auto expected = field_count(static_cast<std::uint8_t>(tag));
  if (!expected || *expected != fields.size()) throw Error(Errc::InvalidParams, "field count does not match tag");
  Bytes out;
  put_u8(out, static_cast<std::uint8_t>(tag));
  for (const Bytes& f : fields) put_field(out, f);
  return out;
}

Message Message::decode(ByteView data) {
  Reader in(data);
  const std::uint8_t raw = in.u8();
  auto expected = field_count(raw);
  if (!expected) throw Error(Errc::MalformedEncoding, "unknown message tag");
  Message m;
  m.tag = static_cast<Tag>(raw);
  for (std::size_t i = 0; i < *expected; ++i) {
    ByteView f = in.field();
    m.fields.emplace_back(f.begin(), f.end());
  }
  in.expect_done();
  return m;
}

Bytes encode_fields(const std::vector<Bytes>& fields) {
  Bytes out;
  for (const Bytes& f : fields) put_field(out, f);
  return out;
}

std::vector<Bytes> decode_fields(ByteView data, std::size_t expected) {
  Reader in(data);
  std::vector<Bytes> out;
  for (std::size_t i = 0; i < expected; ++i) {
    ByteView f = in.field();
    out.emplace_back(f.begin(), f.end());
  }
  in.expect_done();
  return out;
}

Bytes encode_reading(const bio::FeatureReading& r) {
  r.validate();
  Bytes out;
  out.reserve(kReadingSize);
  for (double v : {r.x, r.y, r.z, r.s}) put_u64(out, std::bit_cast<std::uint64_t>(v));
  put_u64(out, r.ts);
  return out;
}

bio::FeatureReading decode_reading(ByteView data) {
  if (data.size() != kReadingSize) throw Error(Errc::MalformedEncoding, "reading must be 40 bytes");
  Reader in(data);
  bio::FeatureReading r;
  r.x = std::bit_cast<double>(in.u64());
  r.y = std::bit_cast<double>(in.u64());
  r.z = std::bit_cast<double>(in.u64());
  r.s = std::bit_cast<double>(in.u64());
  r.ts = in.u64();
  try {
    r.validate();
  } catch (const Error& e) {
    throw Error(Errc::MalformedEncoding, e.what());
  }
  return r;
}

}  // namespace d2d::proto
