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

#include <algorithm>

#include "d2d/protocol.hpp"

namespace d2d::proto {

const std::string TrustedAuthority::kId = "TA";

std::string_view status_name(Status s) noexcept {
  switch (s) {
    case Status::Idle: return "Idle";
    case Status::Pending: return "Pending";
    case Status::Success: return "Success";
    case Status::Rejected: return "Rejected";
  }
  return "Unknown";
}

std::string key_fingerprint(const Digest& z) {
  Digest h = hash_fields({ByteView(z)});
  return to_hex(ByteView(h).first(4));
}

Bytes make_reject(Errc reason) {
  return Message{Tag::Reject, {Bytes{static_cast<std::uint8_t>(reason)}}}.encode();
}

namespace {

crp::SerialNumber parse_sn(ByteView field) {
  if (field.size() != 8) throw Error(Errc::MalformedEncoding, "serial number must be 8 bytes");
  return crp::SerialNumber{Reader(field).u64()};
}

template <std::size_t N>
std::array<std::uint8_t, N> fixed(ByteView field) {
  if (field.size() != N) throw Error(Errc::MalformedEncoding, "fixed-size field has wrong length");
  std::array<std::uint8_t, N> out;
  std::copy(field.begin(), field.end(), out.begin());
  return out;
}

}  // namespace

TrustedAuthority::TrustedAuthority(crp::UirStore uirs, bio::TrainedModel model, RandomSource rng,
                                   ProtocolOptions opts)
    : uirs_(std::move(uirs)), model_(std::move(model)), rng_(std::move(rng)), opts_(opts) {}

Nonce TrustedAuthority::new_nonce() {
  Nonce n = fresh_nonce(rng_);
  nonces_.push_back(n);
  return n;
}

TaSession* TrustedAuthority::active_session_for(const std::string& from) {
  for (const auto& [sn, idx] : busy_) {
    if (sn.str() == from) return &sessions_[idx];
  }
  return nullptr;
}

TaUpdate* TrustedAuthority::active_update_for(const std::string& from) {
  for (const auto& [sn, idx] : updating_) {
    if (sn.str() == from) return &updates_[idx];
  }
  return nullptr;
}

bool TrustedAuthority::needs_update(crp::SerialNumber sn) const {
  return uirs_.at(sn).available() < kTicketsPerDevicePerSession;
}

std::vector<sim::Outgoing> TrustedAuthority::on_message(const std::string& from, ByteView bytes, std::uint64_t now) {
  TaSession* session = active_session_for(from);
  TaUpdate* update = active_update_for(from);

  Message m;
  try {
    m = Message::decode(bytes);
  } catch (const Error& e) {
    if (session) return reject_session(*session, e.code(), std::nullopt);
    if (update) return reject_update(*update, e.code(), true);
    return {{from, make_reject(e.code())}};
  }

  if (m.tag == Tag::Reject) {
    if (session) return reject_session(*session, Errc::PeerAbort, crp::SerialNumber{std::stoull(from)});
    if (update) return reject_update(*update, Errc::PeerAbort, false);
    return {};
  }

  try {
    if (m.tag == Tag::AuthReq && !session && !update) return handle_auth_req(from, m, now);
    if (session) {
      const bool from_b = session->sn_b.str() == from;
      if (m.tag == Tag::BResponse && from_b && session->phase == TaPhase::AwaitBResponse) {
        return handle_b_response(*session, m, now);
      }
      if (m.tag == Tag::AResponse && !from_b && session->phase == TaPhase::AwaitAResponse) {
        return handle_a_response(*session, m, now);
      }
      return reject_session(*session, Errc::UnexpectedMessage, std::nullopt);
    }
    if (update) {
      if (m.tag == Tag::UpdateResponse) return handle_update_response(*update, m, now);
      return reject_update(*update, Errc::UnexpectedMessage, true);
    }
    return {{from, make_reject(Errc::UnexpectedMessage)}};
  } catch (const Error& e) {
    const Errc reason = e.code() == Errc::Exhausted ? Errc::UpdateRequired : e.code();
    if (TaSession* s = active_session_for(from)) return reject_session(*s, reason, std::nullopt);
    if (TaUpdate* u = active_update_for(from)) return reject_update(*u, reason, true);
    return {{from, make_reject(reason)}};
  }
}

// AUTH_REQ: both serials must be registered and able to fund a session; issue
// ticket l for B and challenge B with H_TB = H(SN_B, R_T1, X_Bl).
std::vector<sim::Outgoing> TrustedAuthority::handle_auth_req(const std::string& from, const Message& m,
                                                             std::uint64_t now) {
  const crp::SerialNumber sn_b = parse_sn(m.fields[0]);
  const crp::SerialNumber sn_a = parse_sn(m.fields[1]);
  if (!uirs_.contains(sn_b) || !uirs_.contains(sn_a)) return {{from, make_reject(Errc::UnknownSerial)}};
  if (sn_a == sn_b) return {{from, make_reject(Errc::InvalidParams)}};
  if (busy_.count(sn_b) || busy_.count(sn_a) || updating_.count(sn_b) || updating_.count(sn_a)) {
    return {{from, make_reject(Errc::UnexpectedMessage)}};
  }
  if (needs_update(sn_b) || needs_update(sn_a)) return {{from, make_reject(Errc::UpdateRequired)}};

  TaSession s;
  s.id = sessions_.size();
  s.sn_b = sn_b;
  s.sn_a = sn_a;
  s.outcome.status = Status::Pending;
  s.last_activity = now;
  crp::UirRecord& rec_b = uirs_.at(sn_b);
  s.ticket_b_auth = crp::issue_ticket(rec_b, rng_);
  s.r_t1 = new_nonce();
  const Bytes x = block_to_bytes(s.ticket_b_auth.challenge, rec_b.block_bits);
  const Digest h_tb = hash_fields({u64_to_bytes(sn_b.value), s.r_t1, x});

  sessions_.push_back(s);
  busy_[sn_b] = sessions_.size() - 1;
  busy_[sn_a] = sessions_.size() - 1;

  Message out{Tag::TaChallengeB,
              {Bytes(h_tb.begin(), h_tb.end()), Bytes(s.r_t1.begin(), s.r_t1.end()),
               block_to_bytes(s.ticket_b_auth.response, rec_b.block_bits)}};
  return {{sn_b.str(), out.encode()}};
}

// B_RESPONSE: open B's envelope, check R_B1 and the biometric match, then
// challenge A with ticket k.
std::vector<sim::Outgoing> TrustedAuthority::handle_b_response(TaSession& s, const Message& m, std::uint64_t now) {
  s.last_activity = now;
  const crp::UirRecord& rec_b = uirs_.at(s.sn_b);
  const Key key = derive_enc_key(s.ticket_b_auth.challenge, rec_b.block_bits);
  const Bytes plain = open(key, m.fields[0]);
  const Nonce cleartext_r = fixed<16>(m.fields[1]);
  if (plain.size() != kReadingSize + cleartext_r.size()) throw Error(Errc::MalformedEncoding, "B response body");
  const Nonce sealed_r = fixed<16>(ByteView(plain).subspan(kReadingSize));
  if (sealed_r != cleartext_r) return reject_session(s, Errc::NonceMismatch, std::nullopt);
  const bio::FeatureReading reading = decode_reading(ByteView(plain).first(kReadingSize));
  if (!bio::verify_user(model_, reading, rec_b.owner)) return reject_session(s, Errc::BiometricMismatch, std::nullopt);

  crp::UirRecord& rec_a = uirs_.at(s.sn_a);
  s.ticket_a_auth = crp::issue_ticket(rec_a, rng_);
  s.r_t2 = new_nonce();
  const Bytes x = block_to_bytes(s.ticket_a_auth.challenge, rec_a.block_bits);
  const Digest h_ta = hash_fields({u64_to_bytes(s.sn_a.value), s.r_t2, x});
  s.phase = TaPhase::AwaitAResponse;

  Message out{Tag::TaChallengeA,
              {Bytes(h_ta.begin(), h_ta.end()), Bytes(s.r_t2.begin(), s.r_t2.end()),
               block_to_bytes(s.ticket_a_auth.response, rec_a.block_bits), u64_to_bytes(s.sn_b.value)}};
  return {{s.sn_a.str(), out.encode()}};
}

// A_RESPONSE: verify A the same way, then hand each device the other's cross
// ticket under that device's TA key. All four tickets stay consumed.
std::vector<sim::Outgoing> TrustedAuthority::handle_a_response(TaSession& s, const Message& m, std::uint64_t now) {
  s.last_activity = now;
  const crp::UirRecord& rec_a_view = uirs_.at(s.sn_a);
  const Key key_a = derive_enc_key(s.ticket_a_auth.challenge, rec_a_view.block_bits);
  const Bytes plain = open(key_a, m.fields[0]);
  const Nonce cleartext_r = fixed<16>(m.fields[1]);
  if (plain.size() != kReadingSize + cleartext_r.size()) throw Error(Errc::MalformedEncoding, "A response body");
  const Nonce sealed_r = fixed<16>(ByteView(plain).subspan(kReadingSize));
  if (sealed_r != cleartext_r) return reject_session(s, Errc::NonceMismatch, std::nullopt);
  const bio::FeatureReading reading = decode_reading(ByteView(plain).first(kReadingSize));
  if (!bio::verify_user(model_, reading, rec_a_view.owner)) {
    return reject_session(s, Errc::BiometricMismatch, std::nullopt);
  }

  crp::UirRecord& rec_b = uirs_.at(s.sn_b);
  crp::UirRecord& rec_a = uirs_.at(s.sn_a);
  s.ticket_b_cross = crp::issue_ticket(rec_b, rng_);
  s.ticket_a_cross = crp::issue_ticket(rec_a, rng_);
  const Key key_b = derive_enc_key(s.ticket_b_auth.challenge, rec_b.block_bits);

  const Bytes for_b = concat({block_to_bytes(s.ticket_a_cross.challenge, rec_a.block_bits),
                              block_to_bytes(s.ticket_a_cross.response, rec_a.block_bits)});
  const Bytes for_a = concat({block_to_bytes(s.ticket_b_cross.challenge, rec_b.block_bits),
                              block_to_bytes(s.ticket_b_cross.response, rec_b.block_bits)});
  Message to_b{Tag::TaDispatchB, {seal(key_b, for_b, rng_).encode()}};
  Message to_a{Tag::TaDispatchA, {seal(key_a, for_a, rng_).encode()}};

  s.phase = TaPhase::Done;
  s.outcome.status = Status::Success;
  busy_.erase(s.sn_b);
  busy_.erase(s.sn_a);
  return {{s.sn_b.str(), to_b.encode()}, {s.sn_a.str(), to_a.encode()}};
}

std::vector<sim::Outgoing> TrustedAuthority::reject_session(TaSession& s, Errc reason,
                                                            std::optional<crp::SerialNumber> already_aborted) {
  Out out;
  const bool a_engaged = s.phase == TaPhase::AwaitAResponse;
  s.phase = TaPhase::Done;
  s.outcome.status = Status::Rejected;
  s.outcome.reason = reason;
  busy_.erase(s.sn_b);
  busy_.erase(s.sn_a);
  if (already_aborted != s.sn_b) out.push_back({s.sn_b.str(), make_reject(reason)});
  if (a_engaged && already_aborted != s.sn_a) out.push_back({s.sn_a.str(), make_reject(reason)});
  return out;
}

std::vector<sim::Outgoing> TrustedAuthority::begin_update(crp::SerialNumber sn, std::uint64_t now) {
  crp::UirRecord& rec = uirs_.at(sn);
  if (!needs_update(sn)) throw Error(Errc::InvalidParams, "ticket list can still fund a session");
  if (!rec.last_consumed) throw Error(Errc::InvalidParams, "no consumed ticket to key the update");
  if (busy_.count(sn) || updating_.count(sn)) throw Error(Errc::InvalidParams, "device is busy");

  TaUpdate u;
  u.sn = sn;
  u.key_index = *rec.last_consumed;
  u.key = derive_enc_key(rec.challenge(u.key_index), rec.block_bits);
  u.new_seed = rng_.next_block(rec.block_bits);
  u.r_t = new_nonce();
  u.outcome.status = Status::Pending;
  u.last_activity = now;
  const Bytes plain = concat({block_to_bytes(u.new_seed, rec.block_bits), u.r_t});
  Message out{Tag::UpdateInit, {seal(u.key, plain, rng_).encode(), Bytes(u.r_t.begin(), u.r_t.end())}};
  updates_.push_back(u);
  updating_[sn] = updates_.size() - 1;
  return {{sn.str(), out.encode()}};
}

// Device returned Y'_0..Y'_{t-1} || R_B under X_L; install the new list.
std::vector<sim::Outgoing> TrustedAuthority::handle_update_response(TaUpdate& u, const Message& m,
                                                                    std::uint64_t now) {
  u.last_activity = now;
  crp::UirRecord& rec = uirs_.at(u.sn);
  const std::size_t width = rec.block_bits / 8;
  const Bytes plain = open(u.key, m.fields[0]);
  const Nonce cleartext_r = fixed<16>(m.fields[1]);
  if (plain.size() != rec.t() * width + cleartext_r.size()) throw Error(Errc::MalformedEncoding, "update body");
  const Nonce sealed_r = fixed<16>(ByteView(plain).subspan(rec.t() * width));
  if (sealed_r != cleartext_r) return reject_update(u, Errc::NonceMismatch, true);

  crp::UirRecord fresh;
  fresh.sn = rec.sn;
  fresh.block_bits = rec.block_bits;
  fresh.seed = u.new_seed;
  fresh.owner = rec.owner;
  fresh.consumed = crp::Bitmap(rec.t());
  for (std::size_t i = 0; i < rec.t(); ++i) {
    fresh.responses.push_back(block_from_bytes(ByteView(plain).subspan(i * width, width)));
  }
  uirs_.replace(std::move(fresh));

  u.phase = UpdatePhase::Done;
  u.outcome.status = Status::Success;
  updating_.erase(u.sn);
  Message ack{Tag::UpdateAck, {seal(u.key, sealed_r, rng_).encode()}};
  return {{u.sn.str(), ack.encode()}};
}

std::vector<sim::Outgoing> TrustedAuthority::reject_update(TaUpdate& u, Errc reason, bool notify) {
  u.phase = UpdatePhase::Done;
  u.outcome.status = Status::Rejected;
  u.outcome.reason = reason;
  updating_.erase(u.sn);
  if (!notify) return {};
  return {{u.sn.str(), make_reject(reason)}};
}

std::optional<std::uint64_t> TrustedAuthority::next_deadline() const {
  std::optional<std::uint64_t> earliest;
  auto consider = [&](std::uint64_t t) { earliest = earliest ? std::min(*earliest, t) : t; };
  for (const auto& [sn, idx] : busy_) consider(sessions_[idx].last_activity + opts_.timeout_steps);
  for (const auto& [sn, idx] : updating_) consider(updates_[idx].last_activity + opts_.timeout_steps);
  return earliest;
}

std::vector<sim::Outgoing> TrustedAuthority::on_tick(std::uint64_t now) {
  Out out;
  std::vector<std::size_t> expired_sessions;
  for (const auto& [sn, idx] : busy_) {
    if (sessions_[idx].last_activity + opts_.timeout_steps <= now) expired_sessions.push_back(idx);
  }
  std::sort(expired_sessions.begin(), expired_sessions.end());
  expired_sessions.erase(std::unique(expired_sessions.begin(), expired_sessions.end()), expired_sessions.end());
  for (std::size_t idx : expired_sessions) {
    Out o = reject_session(sessions_[idx], Errc::Timeout, std::nullopt);
    out.insert(out.end(), o.begin(), o.end());
  }
  std::vector<std::size_t> expired_updates;
  for (const auto& [sn, idx] : updating_) {
    if (updates_[idx].last_activity + opts_.timeout_steps <= now) expired_updates.push_back(idx);
  }
  for (std::size_t idx : expired_updates) {
    Out o = reject_update(updates_[idx], Errc::Timeout, true);
    out.insert(out.end(), o.begin(), o.end());
  }
  return out;
}

}  // namespace d2d::proto
