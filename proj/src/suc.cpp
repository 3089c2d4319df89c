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

#include "d2d/suc.hpp"

#include <algorithm>
#include <numeric>

#include "d2d/error.hpp"

namespace d2d::suc {

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'U', 'C', '1'};

std::uint64_t half_mask(unsigned half_bits) {
  return half_bits >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << half_bits) - 1);
}

std::uint64_t rotl(std::uint64_t v, unsigned by, unsigned width) {
  by %= width;
  if (by == 0) return v;
  return ((v << by) | (v >> (width - by))) & half_mask(width);
}

bool is_permutation(const Sbox& s) {
  std::array<bool, 256> seen{};
  for (std::uint8_t v : s) {
    if (seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

}  // namespace

void SucConfig::validate() const {
  if (block_bits != 16 && block_bits != 32 && block_bits != 64 && block_bits != 128) {
    throw Error(Errc::InvalidConfig, "block_bits must be one of 16, 32, 64, 128");
  }
  if (rounds < 4) throw Error(Errc::InvalidConfig, "rounds must be at least 4");
}

std::uint64_t SucInstance::round_function(std::uint64_t half, std::size_t round) const {
  const unsigned width = config_.block_bits / 2;
  const Sbox& sbox = sboxes_[round];
  std::uint64_t t = half ^ round_keys_[round];
  std::uint64_t out = 0;
  for (unsigned shift = 0; shift < width; shift += 8) {
    out |= std::uint64_t{sbox[(t >> shift) & 0xff]} << shift;
  }
  return rotl(out, 3, width);
}

Block SucInstance::forward(Block x) const {
  const unsigned width = config_.block_bits / 2;
  const std::uint64_t mask = half_mask(width);
  std::uint64_t left = static_cast<std::uint64_t>(x >> width) & mask;
  std::uint64_t right = static_cast<std::uint64_t>(x) & mask;
  for (std::size_t i = 0; i < round_keys_.size(); ++i) {
    std::uint64_t next_right = left ^ round_function(right, i);
    left = right;
    right = next_right;
  }
  return (Block{left} << width) | right;
}

Block SucInstance::inverse(Block y) const {
  const unsigned width = config_.block_bits / 2;
  const std::uint64_t mask = half_mask(width);
  std::uint64_t left = static_cast<std::uint64_t>(y >> width) & mask;
  std::uint64_t right = static_cast<std::uint64_t>(y) & mask;
  for (std::size_t i = round_keys_.size(); i-- > 0;) {
    std::uint64_t prev_left = right ^ round_function(left, i);
    right = left;
    left = prev_left;
  }
  return (Block{left} << width) | right;
}

Block SucInstance::evaluate(Block x) const {
  x &= block_mask(config_.block_bits);
  return inverse(forward(x) ^ constant_);
}

SucInstance genie_create(RandomSource& rng, const SucConfig& cfg) {
  cfg.validate();
  SucInstance inst;
  inst.config_ = cfg;
  const unsigned half_bits = cfg.block_bits / 2;

  inst.round_keys_.reserve(cfg.rounds);
  for (unsigned i = 0; i < cfg.rounds; ++i) inst.round_keys_.push_back(rng.next_bits(half_bits));

  inst.sboxes_.resize(cfg.rounds);
  for (Sbox& sbox : inst.sboxes_) {
    std::iota(sbox.begin(), sbox.end(), std::uint8_t{0});
    for (std::size_t i = sbox.size() - 1; i > 0; --i) {
      std::size_t j = rng.uniform(i + 1);
      std::swap(sbox[i], sbox[j]);
    }
  }

  do {
    inst.constant_ = rng.next_block(cfg.block_bits);
  } while (inst.constant_ == 0);
  return inst;
}

Block suc_eval(const SucInstance& inst, Block x) { return inst.evaluate(x); }

Bytes serialize_instance(const SucInstance& inst) {
  const SucConfig& cfg = inst.config();
  Bytes out(std::begin(kMagic), std::end(kMagic));
  put_u16(out, static_cast<std::uint16_t>(cfg.block_bits));
  put_u16(out, static_cast<std::uint16_t>(cfg.rounds));
  const unsigned half_bits = cfg.block_bits / 2;
  for (std::uint64_t key : inst.round_keys()) put_field(out, block_to_bytes(key, half_bits));
  for (const Sbox& sbox : inst.sboxes()) put_field(out, sbox);
  put_field(out, block_to_bytes(inst.constant(), cfg.block_bits));
  return out;
}

SucInstance deserialize_instance(ByteView data) {
  Reader in(data);
  ByteView magic = in.raw(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
    throw Error(Errc::MalformedEncoding, "bad SUC magic");
  }
  SucInstance inst;
  inst.config_.block_bits = in.u16();
  inst.config_.rounds = in.u16();
  try {
    inst.config_.validate();
  } catch (const Error& e) {
    throw Error(Errc::MalformedEncoding, e.what());
  }
  const unsigned half_bits = inst.config_.block_bits / 2;

  for (unsigned i = 0; i < inst.config_.rounds; ++i) {
    ByteView key = in.field();
    if (key.size() != half_bits / 8) throw Error(Errc::MalformedEncoding, "round key length");
    inst.round_keys_.push_back(static_cast<std::uint64_t>(block_from_bytes(key)));
  }
  for (unsigned i = 0; i < inst.config_.rounds; ++i) {
    ByteView table = in.field();
    if (table.size() != 256) throw Error(Errc::MalformedEncoding, "sbox length");
    Sbox sbox;
    std::copy(table.begin(), table.end(), sbox.begin());
    if (!is_permutation(sbox)) throw Error(Errc::MalformedEncoding, "sbox is not a permutation");
    inst.sboxes_.push_back(sbox);
  }
  ByteView k = in.field();
  if (k.size() != inst.config_.block_bits / 8) throw Error(Errc::MalformedEncoding, "constant length");
  inst.constant_ = block_from_bytes(k);
  if (inst.constant_ == 0) throw Error(Errc::MalformedEncoding, "involution constant is zero");
  in.expect_done();
  return inst;
}

}  // namespace d2d::suc
