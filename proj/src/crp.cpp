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

#include "d2d/crp.hpp"

#include <charconv>
#include <sstream>

#include "d2d/error.hpp"

namespace d2d::crp {

bool Bitmap::test(std::size_t i) const {
  if (i >= size_) throw Error(Errc::InvalidParams, "bitmap index out of range");
  return (bytes_[i / 8] >> (i % 8)) & 1u;
}

void Bitmap::set(std::size_t i) {
  if (i >= size_) throw Error(Errc::InvalidParams, "bitmap index out of range");
  bytes_[i / 8] = static_cast<std::uint8_t>(bytes_[i / 8] | (1u << (i % 8)));
}

std::size_t Bitmap::count() const noexcept {
  std::size_t n = 0;
  for (std::uint8_t b : bytes_) n += static_cast<std::size_t>(__builtin_popcount(b));
  return n;
}

std::string Bitmap::to_hex() const { return d2d::to_hex(bytes_); }

Bitmap Bitmap::from_hex(std::string_view hex, std::size_t size) {
  Bitmap bm(size);
  Bytes raw = d2d::from_hex(hex);
  if (raw.size() != bm.bytes_.size()) throw Error(Errc::MalformedEncoding, "bitmap length does not match t");
  if (size % 8 != 0 && !raw.empty()) {
    std::uint8_t spare = static_cast<std::uint8_t>(0xff << (size % 8));
    if (raw.back() & spare) throw Error(Errc::MalformedEncoding, "bitmap has bits beyond t");
  }
  bm.bytes_ = std::move(raw);
  return bm;
}

Block UirRecord::challenge(std::size_t i) const { return (seed + i) & block_mask(block_bits); }

std::pair<UirRecord, DeviceTicketState> personalize(SerialNumber sn, const suc::SucInstance& device_cipher,
                                                    std::size_t t, std::uint32_t owner, RandomSource& rng) {
  if (t == 0) throw Error(Errc::InvalidParams, "ticket list size must be positive");
  const unsigned n = device_cipher.block_bits();
  UirRecord rec;
  rec.sn = sn;
  rec.block_bits = n;
  rec.seed = rng.next_block(n);
  rec.responses = regenerate_list(device_cipher, rec.seed, t);
  rec.consumed = Bitmap(t);
  rec.owner = owner;

  DeviceTicketState st;
  st.block_bits = n;
  st.seed = rec.seed;
  st.t = t;
  st.consumed = Bitmap(t);
  return {std::move(rec), std::move(st)};
}

Ticket issue_ticket(UirRecord& uir, RandomSource& rng) {
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < uir.t(); ++i) {
    if (!uir.consumed.test(i)) open.push_back(i);
  }
  if (open.empty()) throw Error(Errc::Exhausted, "SN " + uir.sn.str());
  std::size_t index = open[rng.uniform(open.size())];
  consume_index(uir, index);
  return Ticket{index, uir.challenge(index), uir.responses[index]};
}

void consume_index(UirRecord& uir, std::size_t i) {
  if (i >= uir.t()) throw Error(Errc::InvalidParams, "ticket index out of range");
  if (uir.consumed.test(i)) throw Error(Errc::AlreadyConsumed, "index " + std::to_string(i));
  uir.consumed.set(i);
  uir.last_consumed = i;
}

Block device_verify_challenge(DeviceTicketState& st, const suc::SucInstance& cipher, Block y) {
  const Block mask = block_mask(st.block_bits);
  if ((y & mask) != y) throw Error(Errc::UnknownTicket, "response wider than block");
  Block x = suc::suc_eval(cipher, y);
  Block offset = (x - st.seed) & mask;
  if (offset >= st.t) throw Error(Errc::UnknownTicket, "challenge outside this ticket list");
  auto i = static_cast<std::size_t>(offset);
  if (st.consumed.test(i)) throw Error(Errc::ReplayedTicket, "index " + std::to_string(i));
  st.consumed.set(i);
  st.last_consumed = i;
  return x;
}

std::vector<Block> regenerate_list(const suc::SucInstance& cipher, Block new_seed, std::size_t t) {
  const Block mask = block_mask(cipher.block_bits());
  std::vector<Block> out;
  out.reserve(t);
  for (std::size_t i = 0; i < t; ++i) out.push_back(suc::suc_eval(cipher, (new_seed + i) & mask));
  return out;
}

void UirStore::insert(UirRecord record) {
  SerialNumber sn = record.sn;
  auto [it, inserted] = records_.emplace(sn, std::move(record));
  if (!inserted) throw Error(Errc::DuplicateSerial, "SN " + sn.str());
}

UirRecord& UirStore::at(SerialNumber sn) {
  auto it = records_.find(sn);
  if (it == records_.end()) throw Error(Errc::UnknownSerial, "SN " + sn.str());
  return it->second;
}

const UirRecord& UirStore::at(SerialNumber sn) const {
  auto it = records_.find(sn);
  if (it == records_.end()) throw Error(Errc::UnknownSerial, "SN " + sn.str());
  return it->second;
}

void UirStore::replace(UirRecord record) { at(record.sn) = std::move(record); }

namespace {

std::uint64_t parse_decimal(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(Errc::MalformedEncoding, "bad decimal '" + std::string(s) + "'");
  }
  return v;
}

unsigned block_bits_from_hex_width(std::size_t width) {
  unsigned bits = static_cast<unsigned>(width * 4);
  if (bits != 16 && bits != 32 && bits != 64 && bits != 128) {
    throw Error(Errc::MalformedEncoding, "seed width is not a supported block size");
  }
  return bits;
}

// Splits "K1=v1 K2=v2 ..." and checks the keys appear in the given order;
// keys listed after `required` may be absent.
std::vector<std::string_view> parse_fields(std::string_view line, std::initializer_list<std::string_view> keys,
                                           std::size_t required) {
  std::vector<std::string_view> values;
  std::size_t pos = 0;
  for (std::string_view key : keys) {
    if (pos >= line.size()) {
      if (values.size() < required) throw Error(Errc::MalformedEncoding, "missing " + std::string(key));
      break;
    }
    std::size_t end = line.find(' ', pos);
    if (end == std::string_view::npos) end = line.size();
    std::string_view token = line.substr(pos, end - pos);
    if (token.size() <= key.size() || token.substr(0, key.size()) != key || token[key.size()] != '=') {
      throw Error(Errc::MalformedEncoding, "expected " + std::string(key) + "=");
    }
    values.push_back(token.substr(key.size() + 1));
    pos = end == line.size() ? end : end + 1;
  }
  if (pos < line.size()) throw Error(Errc::MalformedEncoding, "unexpected trailing fields");
  return values;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) throw Error(Errc::MalformedEncoding, "record not newline-terminated");
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return lines;
}

}  // namespace

std::string save_uir(const UirStore& store) {
  std::ostringstream out;
  for (const auto& [sn, rec] : store.records()) {
    out << "SN=" << sn.value << " SEED=" << block_to_hex(rec.seed, rec.block_bits) << " T=" << rec.t()
        << " BITMAP=" << rec.consumed.to_hex() << " Y=";
    for (std::size_t i = 0; i < rec.responses.size(); ++i) {
      if (i) out << ',';
      out << block_to_hex(rec.responses[i], rec.block_bits);
    }
    out << " OWNER=" << rec.owner;
    if (rec.last_consumed) out << " LAST=" << *rec.last_consumed;
    out << '\n';
  }
  return out.str();
}

UirStore load_uir(std::string_view text) {
  UirStore store;
  for (std::string_view line : split_lines(text)) {
    auto f = parse_fields(line, {"SN", "SEED", "T", "BITMAP", "Y", "OWNER", "LAST"}, 6);
    UirRecord rec;
    rec.sn = SerialNumber{parse_decimal(f[0])};
    rec.block_bits = block_bits_from_hex_width(f[1].size());
    rec.seed = block_from_hex(f[1], rec.block_bits);
    std::uint64_t t = parse_decimal(f[2]);
    if (t == 0) throw Error(Errc::MalformedEncoding, "T must be positive");
    rec.consumed = Bitmap::from_hex(f[3], t);
    std::string_view ys = f[4];
    std::size_t pos = 0;
    while (pos <= ys.size()) {
      std::size_t end = ys.find(',', pos);
      if (end == std::string_view::npos) end = ys.size();
      rec.responses.push_back(block_from_hex(ys.substr(pos, end - pos), rec.block_bits));
      pos = end + 1;
    }
    if (rec.responses.size() != t) throw Error(Errc::MalformedEncoding, "Y count does not match T");
    std::uint64_t owner = parse_decimal(f[5]);
    if (owner > UINT32_MAX) throw Error(Errc::MalformedEncoding, "OWNER out of range");
    rec.owner = static_cast<std::uint32_t>(owner);
    if (f.size() > 6) {
      std::uint64_t last = parse_decimal(f[6]);
      if (last >= t || !rec.consumed.test(last)) throw Error(Errc::MalformedEncoding, "LAST is not a consumed index");
      rec.last_consumed = last;
    }
    store.insert(std::move(rec));
  }
  return store;
}

std::string save_device_state(SerialNumber sn, const DeviceTicketState& st) {
  std::ostringstream out;
  out << "SN=" << sn.value << " SEED=" << block_to_hex(st.seed, st.block_bits) << " T=" << st.t
      << " BITMAP=" << st.consumed.to_hex();
  if (st.last_consumed) out << " LAST=" << *st.last_consumed;
  out << '\n';
  return out.str();
}

std::pair<SerialNumber, DeviceTicketState> load_device_state(std::string_view text) {
  auto lines = split_lines(text);
  if (lines.size() != 1) throw Error(Errc::MalformedEncoding, "device state must be one line");
  auto f = parse_fields(lines[0], {"SN", "SEED", "T", "BITMAP", "LAST"}, 4);
  SerialNumber sn{parse_decimal(f[0])};
  DeviceTicketState st;
  st.block_bits = block_bits_from_hex_width(f[1].size());
  st.seed = block_from_hex(f[1], st.block_bits);
  st.t = parse_decimal(f[2]);
  if (st.t == 0) throw Error(Errc::MalformedEncoding, "T must be positive");
  st.consumed = Bitmap::from_hex(f[3], st.t);
  if (f.size() > 4) {
    std::uint64_t last = parse_decimal(f[4]);
    if (last >= st.t || !st.consumed.test(last)) throw Error(Errc::MalformedEncoding, "LAST is not a consumed index");
    st.last_consumed = last;
  }
  return {sn, std::move(st)};
}

}  // namespace d2d::crp
