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

#include "d2d/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <mutex>

#include "d2d/error.hpp"

namespace d2d::proto {

namespace {

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw Error(Errc::Io, "libsodium initialisation failed");
  });
}

static_assert(crypto_aead_chacha20poly1305_ietf_KEYBYTES == 32);
static_assert(crypto_aead_chacha20poly1305_ietf_NPUBBYTES == CipherEnvelope::kNonceSize);
static_assert(crypto_aead_chacha20poly1305_ietf_ABYTES == CipherEnvelope::kTagSize);
static_assert(crypto_scalarmult_BYTES == VpnHandshake::kPublicSize);

}  // namespace

Digest hash_fields(const std::vector<ByteView>& fields) {
  ensure_sodium();
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  for (ByteView f : fields) {
    Bytes len;
    put_u32(len, static_cast<std::uint32_t>(f.size()));
    crypto_hash_sha256_update(&st, len.data(), len.size());
    crypto_hash_sha256_update(&st, f.data(), f.size());
  }
  Digest out;
  crypto_hash_sha256_final(&st, out.data());
  return out;
}

Digest hash_fields(std::initializer_list<ByteView> fields) { return hash_fields(std::vector<ByteView>(fields)); }

Key derive_enc_key(Block x, unsigned bits) {
  static const Bytes label = string_bytes("SUC-ENC-V1");
  return hash_fields({label, block_to_bytes(x, bits)});
}

Nonce fresh_nonce(RandomSource& rng) {
  Nonce n;
  rng.fill(n);
  return n;
}

Bytes CipherEnvelope::encode() const {
  Bytes out(nonce.begin(), nonce.end());
  put_raw(out, body);
  put_raw(out, tag);
  return out;
}

CipherEnvelope CipherEnvelope::decode(ByteView data) {
  if (data.size() < kNonceSize + kTagSize) throw Error(Errc::MalformedEncoding, "envelope too short");
  CipherEnvelope env;
  std::copy_n(data.begin(), kNonceSize, env.nonce.begin());
  env.body.assign(data.begin() + kNonceSize, data.end() - kTagSize);
  std::copy(data.end() - kTagSize, data.end(), env.tag.begin());
  return env;
}

CipherEnvelope seal(const Key& key, ByteView plaintext, RandomSource& rng) {
  ensure_sodium();
  CipherEnvelope env;
  rng.fill(env.nonce);
  env.body.resize(plaintext.size());
  crypto_aead_chacha20poly1305_ietf_encrypt_detached(env.body.data(), env.tag.data(), nullptr, plaintext.data(),
                                                     plaintext.size(), nullptr, 0, nullptr, env.nonce.data(),
                                                     key.data());
  return env;
}

Bytes open(const Key& key, const CipherEnvelope& env) {
  ensure_sodium();
  Bytes plain(env.body.size());
  if (crypto_aead_chacha20poly1305_ietf_decrypt_detached(plain.data(), nullptr, env.body.data(), env.body.size(),
                                                         env.tag.data(), nullptr, 0, env.nonce.data(),
                                                         key.data()) != 0) {
    throw Error(Errc::AuthFailure, "envelope failed authentication");
  }
  return plain;
}

Bytes open(const Key& key, ByteView encoded_envelope) {
  CipherEnvelope env;
  try {
    env = CipherEnvelope::decode(encoded_envelope);
  } catch (const Error&) {
    throw Error(Errc::AuthFailure, "envelope too short");
  }
  return open(key, env);
}

bool digest_equal(ByteView a, ByteView b) noexcept {
  ensure_sodium();
  return a.size() == b.size() && sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

VpnHandshake::VpnHandshake(RandomSource& rng) {
  ensure_sodium();
  rng.fill(secret_);
  crypto_scalarmult_base(public_.data(), secret_.data());
  has_secret_ = true;
}

VpnHandshake::~VpnHandshake() { sodium_memzero(secret_.data(), secret_.size()); }

VpnHandshake::VpnHandshake(VpnHandshake&& other) noexcept
    : secret_(other.secret_), public_(other.public_), has_secret_(other.has_secret_) {
  sodium_memzero(other.secret_.data(), other.secret_.size());
  other.has_secret_ = false;
}

VpnHandshake& VpnHandshake::operator=(VpnHandshake&& other) noexcept {
  if (this != &other) {
    secret_ = other.secret_;
    public_ = other.public_;
    has_secret_ = other.has_secret_;
    sodium_memzero(other.secret_.data(), other.secret_.size());
    other.has_secret_ = false;
  }
  return *this;
}

Key VpnHandshake::finish(ByteView peer_public, bool local_is_initiator) {
  if (!has_secret_) throw Error(Errc::KeyAgreementFailure, "ephemeral secret already used");
  if (peer_public.size() != kPublicSize) throw Error(Errc::KeyAgreementFailure, "peer value has wrong length");
  std::array<std::uint8_t, crypto_scalarmult_BYTES> shared{};
  const int rc = crypto_scalarmult(shared.data(), secret_.data(), peer_public.data());
  sodium_memzero(secret_.data(), secret_.size());
  has_secret_ = false;
  if (rc != 0) throw Error(Errc::KeyAgreementFailure, "low-order peer value");

  static const Bytes label = string_bytes("D2D-VPN-V1");
  ByteView mine(public_);
  Key key = local_is_initiator ? hash_fields({label, shared, mine, peer_public})
                               : hash_fields({label, shared, peer_public, mine});
  sodium_memzero(shared.data(), shared.size());
  return key;
}

}  // namespace d2d::proto
