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

namespace {

Nonce as_nonce(ByteView field) {
  if (field.size() != Nonce{}.size()) throw Error(Errc::MalformedEncoding, "nonce must be 16 bytes");
  Nonce n;
  std::copy(field.begin(), field.end(), n.begin());
  return n;
}

Digest as_digest(ByteView field) {
  if (field.size() != Digest{}.size()) throw Error(Errc::MalformedEncoding, "digest must be 32 bytes");
  Digest d;
  std::copy(field.begin(), field.end(), d.begin());
  return d;
}

Bytes to_bytes(const auto& arr) { return Bytes(arr.begin(), arr.end()); }

// Reason carried by a REJECT, or PeerAbort when the body is unusable.
Errc reject_reason(const Message& m) {
  if (m.fields[0].size() != 1) return Errc::PeerAbort;
  const auto raw = m.fields[0][0];
  if (raw == 0 || raw > static_cast<std::uint8_t>(Errc::Io)) return Errc::PeerAbort;
  return static_cast<Errc>(raw);
}

}  // namespace

Device::Device(crp::SerialNumber sn, suc::SucInstance cipher, crp::DeviceTicketState tickets,
               bio::BehaviorSensor sensor, RandomSource rng, ProtocolOptions opts)
    : sn_(sn),
      id_(sn.str()),
      cipher_(std::move(cipher)),
      tickets_(std::move(tickets)),
      sensor_(std::move(sensor)),
      rng_(std::move(rng)),
      opts_(opts) {}

bool Device::session_active() const noexcept {
  return session_.phase != DevicePhase::Idle && session_.phase != DevicePhase::Done;
}

Bytes Device::block_bytes(Block v) const { return block_to_bytes(v, tickets_.block_bits); }

Block Device::parse_block(ByteView field) const {
  if (field.size() != tickets_.block_bits / 8) throw Error(Errc::MalformedEncoding, "block has wrong width");
  return block_from_bytes(field);
}

Block Device::verify_ticket(ByteView y_field) {
  return crp::device_verify_challenge(tickets_, cipher_, parse_block(y_field));
}

std::vector<sim::Outgoing> Device::start_session(crp::SerialNumber peer, std::uint64_t now) {
  if (session_active() || update_.pending) throw Error(Errc::InvalidParams, "device is busy");
  if (peer == sn_) throw Error(Errc::InvalidParams, "cannot open a session with itself");
  session_ = DeviceSession{};
  ++session_count_;
  session_.role = Role::Responder;
  session_.phase = DevicePhase::AwaitTaChallenge;
  session_.peer = peer;
  session_.outcome.status = Status::Pending;
  session_.last_activity = now;
  Message req{Tag::AuthReq, {u64_to_bytes(sn_.value), u64_to_bytes(peer.value)}};
  return {{TrustedAuthority::kId, req.encode()}};
}

std::vector<sim::Outgoing> Device::on_message(const std::string& from, ByteView bytes, std::uint64_t now) {
  Message m;
  try {
    m = Message::decode(bytes);
  } catch (const Error& e) {
    if (session_active() && (from == TrustedAuthority::kId || from == session_.peer.str())) return fail(e.code());
    if (update_.pending && from == TrustedAuthority::kId) return fail_update(e.code());
    return {};
  }

  if (m.tag == Tag::Reject) return handle_reject(from, m);

  const bool update_msg = m.tag == Tag::UpdateInit || m.tag == Tag::UpdateAck || m.tag == Tag::UpdateResponse;
  try {
    if (update_msg) {
      if (from != TrustedAuthority::kId) return {};
      if (m.tag == Tag::UpdateInit && !update_.pending && !session_active()) return on_update_init(m, now);
      if (m.tag == Tag::UpdateAck && update_.pending) return on_update_ack(m);
      if (update_.pending) return fail_update(Errc::UnexpectedMessage);
      return {};
    }
    return dispatch_session(from, m, now);
  } catch (const Error& e) {
    if (update_msg) return update_.pending ? fail_update(e.code()) : Out{};
    if (session_active()) return fail(e.code());
    return {};
  }
}

std::vector<sim::Outgoing> Device::dispatch_session(const std::string& from, const Message& m, std::uint64_t now) {
  const bool from_ta = from == TrustedAuthority::kId;
  if (!session_active()) {
    // The only session message an idle device accepts is the TA opening a
    // session for it as A.
    if (m.tag == Tag::TaChallengeA && from_ta && !update_.pending) return on_ta_challenge_a(m, now);
    // A device that never ran a session records the stray message; a
    // finished one keeps its outcome and drops it.
    if (session_.phase != DevicePhase::Idle) return {};
    session_.phase = DevicePhase::Done;
    session_.outcome = Outcome{Status::Rejected, Errc::UnexpectedMessage, std::nullopt};
    return {{from, make_reject(Errc::UnexpectedMessage)}};
  }
  const bool from_peer = from == session_.peer.str();
  if (!from_ta && !from_peer) return {};  // not part of this session

  const bool b = session_.role == Role::Responder;
  bool expected = false;
  switch (session_.phase) {
    case DevicePhase::AwaitTaChallenge: expected = from_ta && m.tag == Tag::TaChallengeB; break;
    case DevicePhase::AwaitDispatch: expected = from_ta && m.tag == (b ? Tag::TaDispatchB : Tag::TaDispatchA); break;
    case DevicePhase::AwaitVpnHello: expected = from_peer && m.tag == Tag::VpnHello; break;
    case DevicePhase::AwaitVpnAccept: expected = from_peer && m.tag == Tag::VpnAccept; break;
    case DevicePhase::AwaitAChallenge: expected = from_peer && m.tag == Tag::AChallenge; break;
    case DevicePhase::AwaitBProof: expected = from_peer && m.tag == Tag::BProof; break;
    default: break;
  }
  if (!expected) return fail(Errc::UnexpectedMessage);
  session_.last_activity = now;

  switch (m.tag) {
    case Tag::TaChallengeB: return on_ta_challenge_b(m, now);
    case Tag::TaDispatchA:
    case Tag::TaDispatchB: return on_dispatch(m);
    case Tag::VpnHello: return on_vpn_hello(m);
    case Tag::VpnAccept: return on_vpn_accept(m);
    case Tag::AChallenge: return on_a_challenge(m);
    case Tag::BProof: return on_b_proof(m);
    default: return fail(Errc::UnexpectedMessage);
  }
}

// The two TA challenges share everything but the tag: recover X from Y, check the
// TA's hash over (own SN, R_T, X), answer with a sealed reading.
namespace {

struct TaChallenge {
  Digest h;
  Nonce r_t;
};

}  // namespace

std::vector<sim::Outgoing> Device::on_ta_challenge_b(const Message& m, std::uint64_t now) {
  const TaChallenge c{as_digest(m.fields[0]), as_nonce(m.fields[1])};
  const Block x = verify_ticket(m.fields[2]);
  const Digest expect = hash_fields({u64_to_bytes(sn_.value), c.r_t, block_bytes(x)});
  if (!digest_equal(expect, c.h)) return fail(Errc::HashMismatch);

  session_.x_ta_ticket = x;
  session_.ta_key = derive_enc_key(x, tickets_.block_bits);
  session_.r_response = fresh_nonce(rng_);
  const Bytes plain = concat({encode_reading(sensor_.capture(now)), session_.r_response});
  session_.phase = DevicePhase::AwaitDispatch;
  Message out{Tag::BResponse, {seal(session_.ta_key, plain, rng_).encode(), to_bytes(session_.r_response)}};
  return {{TrustedAuthority::kId, out.encode()}};
}

std::vector<sim::Outgoing> Device::on_ta_challenge_a(const Message& m, std::uint64_t now) {
  session_ = DeviceSession{};
  ++session_count_;
  session_.role = Role::Initiator;
  session_.phase = DevicePhase::AwaitDispatch;
  session_.outcome.status = Status::Pending;
  session_.last_activity = now;
  try {
    if (m.fields[3].size() != 8) throw Error(Errc::MalformedEncoding, "serial number must be 8 bytes");
    session_.peer = crp::SerialNumber{Reader(m.fields[3]).u64()};
    if (session_.peer == sn_) throw Error(Errc::InvalidParams, "peer is this device");
    const TaChallenge c{as_digest(m.fields[0]), as_nonce(m.fields[1])};
    const Block x = verify_ticket(m.fields[2]);
    const Digest expect = hash_fields({u64_to_bytes(sn_.value), c.r_t, block_bytes(x)});
    if (!digest_equal(expect, c.h)) return fail(Errc::HashMismatch);

    session_.x_ta_ticket = x;
    session_.ta_key = derive_enc_key(x, tickets_.block_bits);
    session_.r_response = fresh_nonce(rng_);
    const Bytes plain = concat({encode_reading(sensor_.capture(now)), session_.r_response});
    Message out{Tag::AResponse, {seal(session_.ta_key, plain, rng_).encode(), to_bytes(session_.r_response)}};
    return {{TrustedAuthority::kId, out.encode()}};
  } catch (const Error& e) {
    return fail(e.code());
  }
}

// TA dispatch: the peer's cross pair (X, Y) under our TA key.
std::vector<sim::Outgoing> Device::on_dispatch(const Message& m) {
  const Bytes plain = open(session_.ta_key, m.fields[0]);
  const std::size_t w = tickets_.block_bits / 8;
  if (plain.size() != 2 * w) throw Error(Errc::MalformedEncoding, "dispatch body");
  session_.x_peer = block_from_bytes(ByteView(plain).first(w));
  session_.y_peer = block_from_bytes(ByteView(plain).subspan(w));
  session_.dispatch_received = true;

  if (session_.role == Role::Responder) {
    session_.phase = DevicePhase::AwaitVpnHello;
    return {};
  }
  session_.vpn.emplace(rng_);
  session_.phase = DevicePhase::AwaitVpnAccept;
  Message hello{Tag::VpnHello, {to_bytes(session_.vpn->public_value())}};
  return {{session_.peer.str(), hello.encode()}};
}

std::vector<sim::Outgoing> Device::on_vpn_hello(const Message& m) {
  session_.vpn.emplace(rng_);
  session_.channel_key = session_.vpn->finish(m.fields[0], false);
  session_.phase = DevicePhase::AwaitAChallenge;
  Message accept{Tag::VpnAccept, {to_bytes(session_.vpn->public_value())}};
  return {{session_.peer.str(), accept.encode()}};
}

// A_CHALLENGE, A -> B over the channel: SN_B, R_A2, Y_Bi.
std::vector<sim::Outgoing> Device::on_vpn_accept(const Message& m) {
  session_.channel_key = session_.vpn->finish(m.fields[0], true);
  session_.r_a2 = fresh_nonce(rng_);
  const Bytes payload =
      encode_fields({u64_to_bytes(session_.peer.value), to_bytes(session_.r_a2), block_bytes(session_.y_peer)});
  session_.phase = DevicePhase::AwaitBProof;
  Message out{Tag::AChallenge, {seal(*session_.channel_key, payload, rng_).encode()}};
  return {{session_.peer.str(), out.encode()}};
}

// B recovers X_Bi from Y_Bi and commits to Z = H(X_Bi, X_Aj, R_B2, R_A2).
std::vector<sim::Outgoing> Device::on_a_challenge(const Message& m) {
  const std::vector<Bytes> f = decode_fields(open(*session_.channel_key, m.fields[0]), 3);
  if (f[0] != u64_to_bytes(sn_.value)) return fail(Errc::UnexpectedMessage);
  session_.r_a2 = as_nonce(f[1]);
  session_.x_own_cross = verify_ticket(f[2]);
  session_.r_b2 = fresh_nonce(rng_);
  const Digest h_b = hash_fields(
      {block_bytes(session_.x_own_cross), block_bytes(session_.x_peer), session_.r_b2, session_.r_a2});

  const Bytes payload = encode_fields({to_bytes(h_b), block_bytes(session_.y_peer), to_bytes(session_.r_b2)});
  Message out{Tag::BProof, {seal(*session_.channel_key, payload, rng_).encode()}};
  session_.phase = DevicePhase::Done;
  session_.outcome = Outcome{Status::Success, Errc::Ok, h_b};
  return {{session_.peer.str(), out.encode()}};
}

// B_PROOF: A recomputes the same hash from its side.
std::vector<sim::Outgoing> Device::on_b_proof(const Message& m) {
  const std::vector<Bytes> f = decode_fields(open(*session_.channel_key, m.fields[0]), 3);
  const Digest h_b = as_digest(f[0]);
  session_.x_own_cross = verify_ticket(f[1]);
  session_.r_b2 = as_nonce(f[2]);
  const Digest h_a = hash_fields(
      {block_bytes(session_.x_peer), block_bytes(session_.x_own_cross), session_.r_b2, session_.r_a2});
  if (!digest_equal(h_a, h_b)) return fail(Errc::HashMismatch);
  session_.phase = DevicePhase::Done;
  session_.outcome = Outcome{Status::Success, Errc::Ok, h_a};
  return {};
}

std::vector<sim::Outgoing> Device::handle_reject(const std::string& from, const Message& m) {
  const bool from_ta = from == TrustedAuthority::kId;
  if (update_.pending && from_ta) {
    update_ = DeviceUpdate{false, {}, 0, {}, Outcome{Status::Rejected, reject_reason(m), std::nullopt}, 0};
    return {};
  }
  const bool from_peer = from == session_.peer.str();
  if (session_active()) {
    if (from_ta && !session_.dispatch_received) {
      session_.outcome = Outcome{Status::Rejected, reject_reason(m), std::nullopt};
    } else if (from_peer) {
      session_.outcome = Outcome{Status::Rejected, Errc::PeerAbort, std::nullopt};
    } else {
      return {};
    }
    session_.phase = DevicePhase::Done;
    session_.vpn.reset();
    return {};
  }
  // B already holds Z when A rejects the proof; the key is torn down.
  if (session_.phase == DevicePhase::Done && session_.outcome.success() && from_peer) {
    session_.outcome = Outcome{Status::Rejected, Errc::PeerAbort, std::nullopt};
  }
  return {};
}

std::vector<sim::Outgoing> Device::fail(Errc reason) {
  const std::string notify = session_.dispatch_received ? session_.peer.str() : TrustedAuthority::kId;
  session_.phase = DevicePhase::Done;
  session_.outcome = Outcome{Status::Rejected, reason, std::nullopt};
  session_.vpn.reset();
  return {{notify, make_reject(reason)}};
}

// UPDATE_INIT is sealed under the key of the most recently consumed pair.
// After an aborted session the two sides may disagree on which pair that
// was, so every index of the current list is tried, most recent first; the
// authenticated envelope picks out the right one.
std::vector<sim::Outgoing> Device::on_update_init(const Message& m, std::uint64_t now) {
  update_ = DeviceUpdate{};
  update_.pending = true;
  update_.outcome.status = Status::Pending;
  update_.last_activity = now;

  const Block mask = block_mask(tickets_.block_bits);
  std::vector<std::size_t> order;
  if (tickets_.last_consumed) order.push_back(*tickets_.last_consumed);
  for (std::size_t i = 0; i < tickets_.t; ++i) {
    if (i != tickets_.last_consumed) order.push_back(i);
  }
  const CipherEnvelope env = CipherEnvelope::decode(m.fields[0]);
  std::optional<Bytes> plain;
  for (std::size_t i : order) {
    const Key key = derive_enc_key((tickets_.seed + i) & mask, tickets_.block_bits);
    try {
      plain = open(key, env);
      update_.key = key;
      break;
    } catch (const Error&) {
    }
  }
  if (!plain) return fail_update(Errc::AuthFailure);

  const std::size_t w = tickets_.block_bits / 8;
  const Nonce r_t = as_nonce(m.fields[1]);
  if (plain->size() != w + r_t.size()) return fail_update(Errc::MalformedEncoding);
  if (!std::equal(r_t.begin(), r_t.end(), plain->begin() + static_cast<std::ptrdiff_t>(w))) {
    return fail_update(Errc::NonceMismatch);
  }
  update_.new_seed = block_from_bytes(ByteView(*plain).first(w));

  Bytes body;
  for (Block y : crp::regenerate_list(cipher_, update_.new_seed, tickets_.t)) put_raw(body, block_bytes(y));
  update_.r_b = fresh_nonce(rng_);
  put_raw(body, update_.r_b);
  Message out{Tag::UpdateResponse, {seal(update_.key, body, rng_).encode(), to_bytes(update_.r_b)}};
  return {{TrustedAuthority::kId, out.encode()}};
}

// The new seed is committed only once the TA confirms it stored the list.
std::vector<sim::Outgoing> Device::on_update_ack(const Message& m) {
  const Bytes plain = open(update_.key, m.fields[0]);
  if (plain.size() != update_.r_b.size() || !std::equal(plain.begin(), plain.end(), update_.r_b.begin())) {
    return fail_update(Errc::NonceMismatch);
  }
  tickets_.seed = update_.new_seed;
  tickets_.consumed = crp::Bitmap(tickets_.t);
  tickets_.last_consumed.reset();
  update_.pending = false;
  update_.outcome = Outcome{Status::Success, Errc::Ok, std::nullopt};
  return {};
}

std::vector<sim::Outgoing> Device::fail_update(Errc reason) {
  update_.pending = false;
  update_.outcome = Outcome{Status::Rejected, reason, std::nullopt};
  return {{TrustedAuthority::kId, make_reject(reason)}};
}

std::optional<std::uint64_t> Device::next_deadline() const {
  std::optional<std::uint64_t> d;
  if (session_active()) d = session_.last_activity + opts_.timeout_steps;
  if (update_.pending) {
    const std::uint64_t u = update_.last_activity + opts_.timeout_steps;
    d = d ? std::min(*d, u) : u;
  }
  return d;
}

std::vector<sim::Outgoing> Device::on_tick(std::uint64_t now) {
  Out out;
  if (session_active() && session_.last_activity + opts_.timeout_steps <= now) out = fail(Errc::Timeout);
  if (update_.pending && update_.last_activity + opts_.timeout_steps <= now) {
    Out u = fail_update(Errc::Timeout);
    out.insert(out.end(), u.begin(), u.end());
  }
  return out;
}

std::vector<sim::Outgoing> Device::on_delivery_failure(const std::string& to, std::uint64_t /*now*/) {
  if (session_active() && (to == TrustedAuthority::kId || to == session_.peer.str())) {
    return fail(Errc::DeliveryFailure);
  }
  return {};
}

}  // namespace d2d::proto
