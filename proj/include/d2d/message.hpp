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

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "d2d/biometric.hpp"
#include "d2d/bytes.hpp"

namespace d2d::proto {

enum class Tag : std::uint8_t {
  AuthReq = 1,         // SN_B, SN_A
  TaChallengeB = 2,    // H_TB, R_T1, Y_Bl
  BResponse = 3,       // E_XBl(reading_B || R_B1), R_B1
  TaChallengeA = 4,    // H_TA, R_T2, Y_Ak, SN_B
  AResponse = 5,       // E_XAk(reading_A || R_A1), R_A1
  TaDispatchB = 6,     // E_XBl(X_Aj || Y_Aj)
  TaDispatchA = 7,     // E_XAk(X_Bi || Y_Bi)
  VpnHello = 8,        // A's ephemeral public value
  VpnAccept = 9,       // B's ephemeral public value
  AChallenge = 10,     // E_vpn(SN_B, R_A2, Y_Bi)
  BProof = 11,         // E_vpn(H_B, Y_Aj, R_B2)
  Reject = 12,         // reason code byte
  UpdateInit = 13,     // E_XL(S' || R_T), R_T
  UpdateResponse = 14, // E_XL(Y'_0 .. Y'_t-1 || R_B), R_B
  UpdateAck = 15,      // E_XL(R_B)
};

std::string_view tag_name(Tag tag) noexcept;
// Protocol step the tag belongs to (1..9); 0 for REJECT and update messages.
int step_of(Tag tag) noexcept;
std::optional<std::size_t> field_count(std::uint8_t raw_tag) noexcept;

/// Wire message: tag byte, then each field as a 4-byte big-endian length
/// followed by its bytes. The field count is fixed per tag.
struct Message {
  Tag tag = Tag::Reject;
  std::vector<Bytes> fields;

  Bytes encode() const;
  // Throws Error(MalformedEncoding) on unknown tag, wrong field count,
  // truncation or trailing bytes.
  static Message decode(ByteView data);

  bool operator==(const Message&) const = default;
};

// Field lists carried inside VPN-sealed payloads use the same framing,
// without the tag byte.
Bytes encode_fields(const std::vector<Bytes>& fields);
std::vector<Bytes> decode_fields(ByteView data, std::size_t expected);

inline constexpr std::size_t kReadingSize = 40;

// x, y, z, s as IEEE-754 binary64 big-endian, then ts as u64 big-endian.
// The label is not transmitted.
Bytes encode_reading(const bio::FeatureReading& r);
bio::FeatureReading decode_reading(ByteView data);

}  // namespace d2d::proto
