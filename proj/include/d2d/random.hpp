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
#include <random>
#include <span>
#include <string_view>

#include "d2d/bytes.hpp"

namespace d2d {

// Seeded stand-in for a device TRNG. Every derived quantity (integers in a
// range, doubles, Gaussians) is computed here from raw 64-bit engine output so
// that streams are reproducible across standard libraries.
//
// A source is single-owner: it is move-only so a stream can never be silently
// duplicated into two consumers.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  RandomSource(const RandomSource&) = delete;
  RandomSource& operator=(const RandomSource&) = delete;
  RandomSource(RandomSource&&) noexcept = default;
  RandomSource& operator=(RandomSource&&) noexcept = default;

  std::uint64_t next_u64();
  // k in [1, 64].
  std::uint64_t next_bits(unsigned k);
  // bits in [1, 128].
  Block next_block(unsigned bits);
  // Uniform in [0, bound), bound > 0. Rejection sampling, no modulo bias.
  std::uint64_t uniform(std::uint64_t bound);
  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01();
  double uniform(double lo, double hi);
  double gaussian(double mean, double stddev);
  void fill(std::span<std::uint8_t> out);
  Bytes bytes(std::size_t n);

  // Number of 64-bit words consumed so far.
  std::uint64_t position() const noexcept { return drawn_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t drawn_ = 0;
};

// Derives an independent child seed from a master seed and a label.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

}  // namespace d2d
