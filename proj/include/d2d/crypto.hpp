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
#include <string_view>
#include <vector>

#include "d2d/bytes.hpp"
#include "d2d/random.hpp"

namespace d2d::proto {

inline constexpr std::string_view kSuiteId = "SHA256+CHACHA20POLY1305+X25519";

using Digest = std::array<std::uint8_t, 32>;
using Nonce = std::array<std::uint8_t, 16>;
using Key = std::array<std::uint8_t, 32>;

// SHA-256 over the fields, each preceded by its 4-byte big-endian length.
Digest hash_fields(const std::vector<ByteView>& fields);
Digest hash_fields(std::initializer_list<ByteView> fields);

// key = hash_fields("SUC-ENC-V1", x as bits/8 big-endian bytes)
Key derive_enc_key(Block x, unsigned bits);

Nonce fresh_nonce(RandomSource& rng);

// Authenticated envelope; wire form is nonce || body || tag.
struct CipherEnvelope {
  static constexpr std::size_t kNonceSize = 12;
  static constexpr std::size_t kTagSize = 16;

  std::array<std::uint8_t, kNonceSize> nonce{};
  Bytes body;
  std::array<std::uint8_t, kTagSize> tag{};

  Bytes encode() const;
  static CipherEnvelope decode(ByteView data);  // Error(MalformedEncoding)

  bool operator==(const CipherEnvelope&) const = default;
};

CipherEnvelope seal(const Key& key, ByteView plaintext, RandomSource& rng);
// Throws Error(AuthFailure) on a wrong key or any modification.
Bytes open(const Key& key, const CipherEnvelope& env);
Bytes open(const Key& key, ByteView encoded_envelope);

bool digest_equal(ByteView a, ByteView b) noexcept;

/// Ephemeral Diffie-Hellman half of the device-to-device channel.
/// The secret is wiped as soon as the channel key has been derived.
class VpnHandshake {
 public:
  static constexpr std::size_t kPublicSize = 32;

  explicit VpnHandshake(RandomSource& rng);
  ~VpnHandshake();
  VpnHandshake(const VpnHandshake&) = delete;
  VpnHandshake& operator=(const VpnHandshake&) = delete;
  VpnHandshake(VpnHandshake&&) noexcept;
  VpnHandshake& operator=(VpnHandshake&&) noexcept;

  const std::array<std::uint8_t, kPublicSize>& public_value() const noexcept { return public_; }
  bool has_secret() const noexcept { return has_secret_; }

  // channel key = hash_fields("D2D-VPN-V1", shared, initiator_public,
  // responder_public). Throws KeyAgreementFailure for a malformed or
  // low-order peer value, or if called twice.
  Key finish(ByteView peer_public, bool local_is_initiator);

 private:
  std::array<std::uint8_t, 32> secret_{};
  std::array<std::uint8_t, kPublicSize> public_{};
  bool has_secret_ = false;
};

}  // namespace d2d::proto
