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

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "d2d/bytes.hpp"
#include "d2d/random.hpp"
#include "d2d/suc.hpp"

namespace d2d::crp {

struct SerialNumber {
  std::uint64_t value = 0;

  auto operator<=>(const SerialNumber&) const = default;
  std::string str() const { return std::to_string(value); }
};

// Fixed-size bitmap; bit i lives in byte i/8 at bit position i%8.
class Bitmap {
 public:
  Bitmap() = default;
  explicit Bitmap(std::size_t size) : size_(size), bytes_((size + 7) / 8, 0) {}

  std::size_t size() const noexcept { return size_; }
  bool test(std::size_t i) const;
  void set(std::size_t i);
  std::size_t count() const noexcept;
  bool all() const noexcept { return count() == size_; }

  std::string to_hex() const;
  static Bitmap from_hex(std::string_view hex, std::size_t size);

  bool operator==(const Bitmap&) const = default;

 private:
  std::size_t size_ = 0;
  Bytes bytes_;
};

/// The TA's record for one device: seed S, the response list
/// Y_i = SUC(S + i mod 2^n), and which indices have been spent.
struct UirRecord {
  SerialNumber sn;
  unsigned block_bits = 64;
  Block seed = 0;
  std::vector<Block> responses;
  Bitmap consumed;
  std::uint32_t owner = 0;
  // Index consumed most recently; keys the list-update envelope.
  std::optional<std::size_t> last_consumed;

  std::size_t t() const noexcept { return responses.size(); }
  Block challenge(std::size_t i) const;
  std::size_t available() const noexcept { return t() - consumed.count(); }

  bool operator==(const UirRecord&) const = default;
};

struct Ticket {
  std::size_t index = 0;
  Block challenge = 0;
  Block response = 0;

  bool operator==(const Ticket&) const = default;
};

/// The device's "t-bit memory": seed plus spent-ticket bitmap.
struct DeviceTicketState {
  unsigned block_bits = 64;
  Block seed = 0;
  std::size_t t = 0;
  Bitmap consumed;
  std::optional<std::size_t> last_consumed;

  std::size_t available() const noexcept { return t - consumed.count(); }

  bool operator==(const DeviceTicketState&) const = default;
};

// Draws seed S and records Y_i = SUC(S + i) for i < t. Throws
// Error(InvalidParams) for t == 0.
std::pair<UirRecord, DeviceTicketState> personalize(SerialNumber sn, const suc::SucInstance& device_cipher,
                                                    std::size_t t, std::uint32_t owner, RandomSource& rng);

// Picks an unconsumed index uniformly at random and marks it consumed.
// Throws Error(Exhausted) when none is left.
Ticket issue_ticket(UirRecord& uir, RandomSource& rng);

// Throws Error(AlreadyConsumed) if bit i is already set.
void consume_index(UirRecord& uir, std::size_t i);

// Device side of a challenge: X = SUC(y); i = X - S mod 2^n must be a fresh
// index of this list. Throws UnknownTicket / ReplayedTicket.
Block device_verify_challenge(DeviceTicketState& st, const suc::SucInstance& cipher, Block y);

std::vector<Block> regenerate_list(const suc::SucInstance& cipher, Block new_seed, std::size_t t);

// TA-side collection of records keyed by serial number.
class UirStore {
 public:
  void insert(UirRecord record);  // Error(DuplicateSerial)
  bool contains(SerialNumber sn) const { return records_.count(sn) != 0; }
  UirRecord& at(SerialNumber sn);  // Error(UnknownSerial)
  const UirRecord& at(SerialNumber sn) const;
  void replace(UirRecord record);
  std::size_t size() const noexcept { return records_.size(); }
  const std::map<SerialNumber, UirRecord>& records() const noexcept { return records_; }

  bool operator==(const UirStore&) const = default;

 private:
  std::map<SerialNumber, UirRecord> records_;
};

// One line per record, ascending serial number:
//   SN=<dec> SEED=<hex> T=<dec> BITMAP=<hex> Y=<hex,...> OWNER=<dec> [LAST=<dec>]
std::string save_uir(const UirStore& store);
UirStore load_uir(std::string_view text);

// Device-side counterpart, same key=value style:
//   SN=<dec> SEED=<hex> T=<dec> BITMAP=<hex> [LAST=<dec>]
std::string save_device_state(SerialNumber sn, const DeviceTicketState& st);
std::pair<SerialNumber, DeviceTicketState> load_device_state(std::string_view text);

}  // namespace d2d::crp
