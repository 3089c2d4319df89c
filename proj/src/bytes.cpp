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

#include "d2d/bytes.hpp"

#include "d2d/error.hpp"

namespace d2d {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::Ok: return "Ok";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::MalformedEncoding: return "MalformedEncoding";
    case Errc::DuplicateSerial: return "DuplicateSerial";
    case Errc::Exhausted: return "Exhausted";
    case Errc::AlreadyConsumed: return "AlreadyConsumed";
    case Errc::UnknownTicket: return "UnknownTicket";
    case Errc::ReplayedTicket: return "ReplayedTicket";
    case Errc::TooFewReadings: return "TooFewReadings";
    case Errc::DegenerateData: return "DegenerateData";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::KeyAgreementFailure: return "KeyAgreementFailure";
    case Errc::UnknownSerial: return "UnknownSerial";
    case Errc::NonceMismatch: return "NonceMismatch";
    case Errc::BiometricMismatch: return "BiometricMismatch";
    case Errc::HashMismatch: return "HashMismatch";
    case Errc::UnexpectedMessage: return "UnexpectedMessage";
    case Errc::Timeout: return "Timeout";
    case Errc::UpdateRequired: return "UpdateRequired";
    case Errc::PeerAbort: return "PeerAbort";
    case Errc::DuplicateEndpoint: return "DuplicateEndpoint";
    case Errc::DeliveryFailure: return "DeliveryFailure";
    case Errc::StepBudgetExceeded: return "StepBudgetExceeded";
    case Errc::PolicyConflict: return "PolicyConflict";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string to_hex(ByteView data) {
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0x0f]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(Errc::MalformedEncoding, "odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::MalformedEncoding, "invalid hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

std::string block_to_hex(Block value, unsigned bits) { return to_hex(block_to_bytes(value, bits)); }

Block block_from_hex(std::string_view hex, unsigned bits) {
  if (hex.size() != bits / 4) throw Error(Errc::MalformedEncoding, "block hex has wrong width");
  return block_from_bytes(from_hex(hex));
}

Bytes block_to_bytes(Block value, unsigned bits) {
  const unsigned n = bits / 8;
  Bytes out(n);
  for (unsigned i = 0; i < n; ++i) {
    out[n - 1 - i] = static_cast<std::uint8_t>(value & 0xff);
    value >>= 8;
  }
  return out;
}

Block block_from_bytes(ByteView data) {
  if (data.size() > 16) throw Error(Errc::MalformedEncoding, "block wider than 128 bits");
  Block v = 0;
  for (std::uint8_t b : data) v = (v << 8) | b;
  return v;
}

Bytes u64_to_bytes(std::uint64_t value) {
  Bytes out;
  put_u64(out, value);
  return out;
}

Bytes string_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

void put_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_raw(Bytes& out, ByteView data) { out.insert(out.end(), data.begin(), data.end()); }

void put_field(Bytes& out, ByteView data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  put_raw(out, data);
}

Bytes concat(std::initializer_list<ByteView> parts) {
  Bytes out;
  for (ByteView p : parts) put_raw(out, p);
  return out;
}

std::uint8_t Reader::u8() { return raw(1)[0]; }

std::uint16_t Reader::u16() {
  ByteView b = raw(2);
  return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t Reader::u32() {
  ByteView b = raw(4);
  std::uint32_t v = 0;
  for (std::uint8_t x : b) v = (v << 8) | x;
  return v;
}

std::uint64_t Reader::u64() {
  ByteView b = raw(8);
  std::uint64_t v = 0;
  for (std::uint8_t x : b) v = (v << 8) | x;
  return v;
}

ByteView Reader::raw(std::size_t n) {
  if (n > remaining()) throw Error(Errc::MalformedEncoding, "truncated input");
  ByteView out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

ByteView Reader::field() {
  std::uint32_t len = u32();
  return raw(len);
}

void Reader::expect_done() const {
  if (!done()) throw Error(Errc::MalformedEncoding, "trailing bytes");
}

}  // namespace d2d
