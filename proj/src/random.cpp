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

#include "d2d/random.hpp"

#include <cmath>
#include <numbers>

#include "d2d/error.hpp"

namespace d2d {

std::uint64_t RandomSource::next_u64() {
  ++drawn_;
  return engine_();
}

std::uint64_t RandomSource::next_bits(unsigned k) {
  if (k == 0 || k > 64) throw Error(Errc::InvalidParams, "next_bits expects 1..64 bits");
  std::uint64_t v = next_u64();
  return k == 64 ? v : (v >> (64 - k));
}

Block RandomSource::next_block(unsigned bits) {
  if (bits == 0 || bits > 128) throw Error(Errc::InvalidParams, "block width must be 1..128");
  if (bits <= 64) return next_bits(bits);
  Block hi = next_u64();
  Block lo = next_bits(bits - 64);
  return (hi << (bits - 64)) | lo;
}

std::uint64_t RandomSource::uniform(std::uint64_t bound) {
  if (bound == 0) throw Error(Errc::InvalidParams, "uniform bound must be positive");
  // Largest multiple of bound that fits; draws at or above it are rejected.
  const std::uint64_t limit = bound * (UINT64_MAX / bound);
  for (;;) {
    std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

double RandomSource::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RandomSource::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double RandomSource::gaussian(double mean, double stddev) {
  // Box-Muller; the second variate is discarded so a draw always consumes
  // exactly two words.
  double u1 = uniform01();
  double u2 = uniform01();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

void RandomSource::fill(std::span<std::uint8_t> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t v = next_u64();
    for (int k = 0; k < 8 && i < out.size(); ++k, ++i) {
      out[i] = static_cast<std::uint8_t>(v >> (56 - 8 * k));
    }
  }
}

Bytes RandomSource::bytes(std::size_t n) {
  Bytes out(n);
  fill(out);
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  // FNV-1a over the label, folded into the master seed and finished with a
  // splitmix64 round.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : label) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ull;
  }
  std::uint64_t z = master ^ h;
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace d2d
