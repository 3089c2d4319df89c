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
#include <vector>

#include "d2d/bytes.hpp"
#include "d2d/random.hpp"

namespace d2d::suc {

struct SucConfig {
  unsigned block_bits = 64;
  unsigned rounds = 16;

  // Throws Error(InvalidConfig) unless block_bits is one of 16/32/64/128 and
  // rounds >= 4.
  void validate() const;

  bool operator==(const SucConfig&) const = default;
};

using Sbox = std::array<std::uint8_t, 256>;

/// A device-private involution cipher.
///
/// SUC(x) = F^-1(F(x) ^ K), where F is a balanced Feistel network over two
/// block_bits/2 halves. Round i computes (L, R) -> (R, L ^ f_i(R)) with
///   f_i(v) = rotl3(sbox_i[bytes of (v ^ round_key_i)]).
/// Because F is a bijection, SUC(SUC(x)) = x, and for K != 0 there are no
/// fixed points. The instance holds only the derived parameters; nothing of
/// the randomness it was generated from is kept.
class SucInstance {
 public:
  const SucConfig& config() const noexcept { return config_; }
  unsigned block_bits() const noexcept { return config_.block_bits; }
  Block constant() const noexcept { return constant_; }
  const std::vector<std::uint64_t>& round_keys() const noexcept { return round_keys_; }
  const std::vector<Sbox>& sboxes() const noexcept { return sboxes_; }

  Block evaluate(Block x) const;

  bool operator==(const SucInstance&) const = default;

 private:
  friend SucInstance genie_create(RandomSource& rng, const SucConfig& cfg);
  friend SucInstance deserialize_instance(ByteView data);

  SucInstance() = default;

  std::uint64_t round_function(std::uint64_t half, std::size_t round) const;
  Block forward(Block x) const;
  Block inverse(Block y) const;

  SucConfig config_;
  std::vector<std::uint64_t> round_keys_;
  std::vector<Sbox> sboxes_;
  Block constant_ = 0;
};

// Draws round keys, then one shuffled byte permutation per round, then a
// nonzero constant K, in that order.
SucInstance genie_create(RandomSource& rng, const SucConfig& cfg);

// x is reduced modulo 2^n.
Block suc_eval(const SucInstance& inst, Block x);

// "SUC1", n (u16 BE), r (u16 BE), then r round keys, r sboxes and K, each as
// a field with a 4-byte big-endian length prefix.
Bytes serialize_instance(const SucInstance& inst);
SucInstance deserialize_instance(ByteView data);

}  // namespace d2d::suc
