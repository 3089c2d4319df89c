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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "d2d/biometric.hpp"
#include "d2d/crp.hpp"
#include "d2d/crypto.hpp"
#include "d2d/error.hpp"
#include "d2d/message.hpp"
#include "d2d/simnet.hpp"
#include "d2d/suc.hpp"

namespace d2d::proto {

inline constexpr std::size_t kTicketsPerDevicePerSession = 2;

struct ProtocolOptions {
  // A session with no activity for this many bus steps is rejected.
  std::uint64_t timeout_steps = 64;
};

enum class Status { Idle, Pending, Success, Rejected };

std::string_view status_name(Status s) noexcept;

struct Outcome {
  Status status = Status::Idle;
  Errc reason = Errc::Ok;
  std::optional<Digest> key;  // set only on a device that reached Success

  bool success() const noexcept { return status == Status::Success; }
  bool rejected() const noexcept { return status == Status::Rejected; }
};

// 4-byte fingerprint of a session key: first 8 hex chars of H(Z).
std::string key_fingerprint(const Digest& z);

Bytes make_reject(Errc reason);

// ---------------------------------------------------------------------------
// Trusted authority

enum class TaPhase { AwaitBResponse, AwaitAResponse, Done };

/// TA-side state of one mediated session.
struct TaSession {
  std::uint64_t id = 0;
  crp::SerialNumber sn_b;
  crp::SerialNumber sn_a;
  TaPhase phase = TaPhase::AwaitBResponse;
  crp::Ticket ticket_b_auth;   // l
  crp::Ticket ticket_a_auth;   // k
  crp::Ticket ticket_b_cross;  // i
  crp::Ticket ticket_a_cross;  // j
  Nonce r_t1{};
  Nonce r_t2{};
  Outcome outcome;
  std::uint64_t last_activity = 0;
};

enum class UpdatePhase { AwaitResponse, Done };

/// TA-side state of a CRP list replacement.
struct TaUpdate {
  crp::SerialNumber sn;
  std::size_t key_index = 0;  // X_L = S + key_index
  Key key{};
  Block new_seed = 0;
  Nonce r_t{};
  UpdatePhase phase = UpdatePhase::AwaitResponse;
  Outcome outcome;
  std::uint64_t last_activity = 0;
};

class TrustedAuthority final : public sim::Endpoint {
 public:
  TrustedAuthority(crp::UirStore uirs, bio::TrainedModel model, RandomSource rng, ProtocolOptions opts = {});

  const std::string& id() const override { return id_; }
  std::vector<sim::Outgoing> on_message(const std::string& from, ByteView bytes, std::uint64_t now) override;
  std::vector<sim::Outgoing> on_tick(std::uint64_t now) override;
  std::optional<std::uint64_t> next_deadline() const override;

  // Starts the list-replacement exchange for a device that can no longer fund
  // a session. Throws InvalidParams if the list still has room or the device
  // is busy, UnknownSerial for an unregistered device.
  std::vector<sim::Outgoing> begin_update(crp::SerialNumber sn, std::uint64_t now);
  bool needs_update(crp::SerialNumber sn) const;

  const crp::UirStore& uirs() const noexcept { return uirs_; }
  crp::UirStore& uirs() noexcept { return uirs_; }
  const bio::TrainedModel& model() const noexcept { return model_; }

  const std::vector<TaSession>& sessions() const noexcept { return sessions_; }
  const std::vector<TaUpdate>& updates() const noexcept { return updates_; }
  // Protocol nonces the TA generated (R_T1, R_T2, R_T), in order.
  const std::vector<Nonce>& generated_nonces() const noexcept { return nonces_; }

  static const std::string kId;

 private:
  using Out = std::vector<sim::Outgoing>;

  Out handle_auth_req(const std::string& from, const Message& m, std::uint64_t now);
  Out handle_b_response(TaSession& s, const Message& m, std::uint64_t now);
  Out handle_a_response(TaSession& s, const Message& m, std::uint64_t now);
  Out handle_update_response(TaUpdate& u, const Message& m, std::uint64_t now);
  Out reject_session(TaSession& s, Errc reason, std::optional<crp::SerialNumber> already_aborted);
  Out reject_update(TaUpdate& u, Errc reason, bool notify);
  Nonce new_nonce();

  TaSession* active_session_for(const std::string& from);
  TaUpdate* active_update_for(const std::string& from);

  std::string id_ = kId;
  crp::UirStore uirs_;
  bio::TrainedModel model_;
  RandomSource rng_;
  ProtocolOptions opts_;
  std::vector<TaSession> sessions_;
  std::vector<TaUpdate> updates_;
  std::map<crp::SerialNumber, std::size_t> busy_;         // device -> index into sessions_
  std::map<crp::SerialNumber, std::size_t> updating_;     // device -> index into updates_
  std::vector<Nonce> nonces_;
};

// ---------------------------------------------------------------------------
// Device

// Roles on the device-to-device channel: A opens it, B answers.
enum class Role { Initiator, Responder };

enum class DevicePhase {
  Idle,
  AwaitTaChallenge,  // B, after AUTH_REQ
  AwaitDispatch,     // after B_RESPONSE / A_RESPONSE
  AwaitVpnHello,     // B
  AwaitVpnAccept,    // A
  AwaitAChallenge,   // B
  AwaitBProof,       // A
  Done,
};

/// Device-side state of one session. The values held here are the ones the
/// device knows; the acceptance harness reads them to check key agreement and
/// TA blindness.
struct DeviceSession {
  Role role = Role::Initiator;
  DevicePhase phase = DevicePhase::Idle;
  crp::SerialNumber peer;
  Block x_ta_ticket = 0;  // X_Bl (B) or X_Ak (A)
  Key ta_key{};
  Nonce r_response{};     // R_B1 or R_A1
  Block x_peer = 0;       // from dispatch: X_Aj (B) or X_Bi (A)
  Block y_peer = 0;       // from dispatch: Y_Aj (B) or Y_Bi (A)
  Block x_own_cross = 0;  // recomputed by this device: X_Bi (B) or X_Aj (A)
  std::optional<VpnHandshake> vpn;
  std::optional<Key> channel_key;
  Nonce r_a2{};
  Nonce r_b2{};
  bool dispatch_received = false;
  Outcome outcome;
  std::uint64_t last_activity = 0;
};

struct DeviceUpdate {
  bool pending = false;
  Key key{};
  Block new_seed = 0;
  Nonce r_b{};
  Outcome outcome;
  std::uint64_t last_activity = 0;
};

class Device final : public sim::Endpoint {
 public:
  Device(crp::SerialNumber sn, suc::SucInstance cipher, crp::DeviceTicketState tickets, bio::BehaviorSensor sensor,
         RandomSource rng, ProtocolOptions opts = {});

  const std::string& id() const override { return id_; }
  std::vector<sim::Outgoing> on_message(const std::string& from, ByteView bytes, std::uint64_t now) override;
  std::vector<sim::Outgoing> on_tick(std::uint64_t now) override;
  std::optional<std::uint64_t> next_deadline() const override;
  std::vector<sim::Outgoing> on_delivery_failure(const std::string& to, std::uint64_t now) override;

  // Sends AUTH_REQ: asks the TA for a session with `peer`.
  std::vector<sim::Outgoing> start_session(crp::SerialNumber peer, std::uint64_t now);

  crp::SerialNumber sn() const noexcept { return sn_; }
  const DeviceSession& session() const noexcept { return session_; }
  const Outcome& outcome() const noexcept { return session_.outcome; }
  // Sessions this device has entered, as B or as A.
  std::uint64_t session_count() const noexcept { return session_count_; }
  const DeviceUpdate& update() const noexcept { return update_; }
  const crp::DeviceTicketState& tickets() const noexcept { return tickets_; }
  // Simulation-only access; the real cipher never leaves the device.
  const suc::SucInstance& cipher() const noexcept { return cipher_; }
  bio::BehaviorSensor& sensor() noexcept { return sensor_; }

 private:
  using Out = std::vector<sim::Outgoing>;

  Out step(const std::string& from, const Message& m, std::uint64_t now);
  Out on_ta_challenge_b(const Message& m, std::uint64_t now);
  Out on_ta_challenge_a(const Message& m, std::uint64_t now);
  Out on_dispatch(const Message& m);
  Out on_vpn_hello(const Message& m);
  Out on_vpn_accept(const Message& m);
  Out on_a_challenge(const Message& m);
  Out on_b_proof(const Message& m);
  Out on_update_init(const Message& m, std::uint64_t now);
  Out on_update_ack(const Message& m);
  Out dispatch_session(const std::string& from, const Message& m, std::uint64_t now);
  Out handle_reject(const std::string& from, const Message& m);
  Out fail(Errc reason);
  Out fail_update(Errc reason);
  bool session_active() const noexcept;
  Block verify_ticket(ByteView y_field);
  Bytes block_bytes(Block v) const;
  Block parse_block(ByteView field) const;

  crp::SerialNumber sn_;
  std::string id_;
  suc::SucInstance cipher_;
  crp::DeviceTicketState tickets_;
  bio::BehaviorSensor sensor_;
  RandomSource rng_;
  ProtocolOptions opts_;
  DeviceSession session_;
  DeviceUpdate update_;
  std::uint64_t session_count_ = 0;
};

}  // namespace d2d::proto
