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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace d2d {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// An n-bit cipher block, n <= 128. Values are kept reduced modulo 2^n.
__extension__ typedef unsigned __int128 Block;

inline constexpr Block block_mask(unsigned bits) noexcept {
  return bits >= 128 ? ~Block{0} : ((Block{1} << bits) - 1);
}

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

std::string block_to_hex(Block value, unsigned bits);
Block block_from_hex(std::string_view hex, unsigned bits);

// Big-endian, exactly bits/8 bytes.
Bytes block_to_bytes(Block value, unsigned bits);
Block block_from_bytes(ByteView data);

Bytes u64_to_bytes(std::uint64_t value);
Bytes string_bytes(std::string_view s);

void put_u8(Bytes& out, std::uint8_t v);
void put_u16(Bytes& out, std::uint16_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);
void put_raw(Bytes& out, ByteView data);
// 4-byte big-endian length, then the bytes.
void put_field(Bytes& out, ByteView data);

Bytes concat(std::initializer_list<ByteView> parts);

// Bounds-checked big-endian cursor. Every read past the end throws
// Error(MalformedEncoding).
class Reader {
 public:
  explicit Reader(ByteView data) : data_(data) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  ByteView raw(std::size_t n);
  ByteView field();

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  bool done() const noexcept { return pos_ == data_.size(); }
  void expect_done() const;

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

}  // namespace d2d
