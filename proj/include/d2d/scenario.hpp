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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "d2d/biometric.hpp"
#include "d2d/crp.hpp"
#include "d2d/protocol.hpp"
#include "d2d/simnet.hpp"
#include "d2d/suc.hpp"

namespace d2d::scenario {

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::uint32_t num_devices = 4;
  std::size_t tickets_per_device = 64;
  std::uint32_t num_users = 4;  // one owner per device
  std::uint32_t readings_per_user = 40;
  double separation = 20.0;
  unsigned block_bits = 64;
  unsigned rounds = 16;
  std::vector<bio::ClassifierKind> kinds{bio::kAllKinds.begin(), bio::kAllKinds.end()};
  double test_fraction = 0.3;
  std::uint64_t timeout_steps = 64;

  // Error(InvalidConfig) on an inconsistent configuration, InvalidParams for
  // t == 0 to match personalize().
  void validate() const;
};

// Serial numbers are assigned 1001, 1002, ... in device order.
crp::SerialNumber serial_for(std::size_t device_index);

struct DeviceKit {
  crp::SerialNumber sn;
  std::uint32_t owner = 0;
  suc::SucInstance cipher;
  crp::DeviceTicketState state;
};

struct Provisioning {
  crp::UirStore uirs;
  std::vector<DeviceKit> devices;
};

// GENIE + personalization for every device.
Provisioning provision(const ScenarioConfig& cfg);

struct Enrollment {
  bio::Dataset dataset;
  std::vector<bio::UserProfile> profiles;
  bio::SelectionResult selection;
};

// Synthetic behavior data for every user, then model selection over cfg.kinds.
Enrollment enroll(const ScenarioConfig& cfg);

struct SessionResult {
  crp::SerialNumber sn_b;  // sends AUTH_REQ
  crp::SerialNumber sn_a;  // the requested peer
  proto::Outcome b;
  proto::Outcome a;
  std::optional<proto::TaSession> ta;  // TA record of the final attempt
  std::size_t tickets_b = 0;           // TA-side indices spent in the final attempt
  std::size_t tickets_a = 0;
  std::vector<crp::SerialNumber> updated;  // lists replaced before the retry
  sim::Transcript transcript;

  bool success() const noexcept;
};

struct UpdateResult {
  crp::SerialNumber sn;
  proto::Outcome ta;
  proto::Outcome device;
  sim::Transcript transcript;

  bool success() const noexcept { return ta.success() && device.success(); }
};

/// One bus, one TA and the provisioned devices, wired together.
class World {
 public:
  // `salt` separates runs that start from the same seed but different state.
  World(const ScenarioConfig& cfg, Provisioning prov, bio::TrainedModel model,
        const std::vector<bio::UserProfile>& profiles, std::string_view salt = {});

  World(const World&) = delete;
  World& operator=(const World&) = delete;

  sim::Bus& bus() noexcept { return *bus_; }
  proto::TrustedAuthority& ta() noexcept { return *ta_; }
  const proto::TrustedAuthority& ta() const noexcept { return *ta_; }
  proto::Device* find_device(crp::SerialNumber sn);
  proto::Device& device(crp::SerialNumber sn);  // Error(UnknownSerial)
  const std::vector<crp::SerialNumber>& serials() const noexcept { return serials_; }

  // Runs one session. With auto_update, an UpdateRequired rejection
  // triggers the list update for whichever side is exhausted and one retry.
  SessionResult run_session(crp::SerialNumber sn_b, crp::SerialNumber sn_a, bool auto_update = true);
  UpdateResult run_update(crp::SerialNumber sn);

  // Current TA records and device ticket states.
  Provisioning snapshot() const;

 private:
  SessionResult attempt(crp::SerialNumber sn_b, crp::SerialNumber sn_a);

  std::unique_ptr<sim::Bus> bus_;
  std::unique_ptr<proto::TrustedAuthority> ta_;
  std::vector<std::unique_ptr<proto::Device>> devices_;
  std::vector<crp::SerialNumber> serials_;
  std::vector<std::uint32_t> owners_;
};

// ---------------------------------------------------------------------------
// TA blindness

struct BlindnessReport {
  std::size_t view_values = 0;
  std::size_t pairs_checked = 0;
  bool nonces_hidden = false;  // R_A2 and R_B2 absent from every TA-visible cleartext value
  bool no_preimage = false;    // no pair (r, r') of view values gives H(X_Bi, X_Aj, r, r') = Z

  bool passed() const noexcept { return nonces_hidden && no_preimage; }
};

// Builds the TA's view of a finished honest session (every message on the
// wire, every UIR value, every TA nonce, and the plaintext of every envelope
// sealed under a key the TA holds) and checks it against the devices'
// secrets. The session must have succeeded.
BlindnessReport check_ta_blindness(World& world, const SessionResult& session);

// ---------------------------------------------------------------------------
// Attacks

struct ReplayTrial {
  bool replayed = false;
  proto::Outcome victim;  // device B in the second session
  SessionResult first;
  SessionResult second;

  bool defeated() const noexcept {
    return replayed && victim.rejected() && victim.reason == Errc::ReplayedTicket && !second.success();
  }
};

// Records the first TA_CHALLENGE_B of one session and replays it at the same
// device during the next.
ReplayTrial run_replay(World& world, crp::SerialNumber sn_b, crp::SerialNumber sn_a);

struct ImpersonationTrial {
  crp::SerialNumber fake;
  std::vector<Bytes> replies;  // what came back to the forged identity
  std::size_t ta_sessions_opened = 0;
  sim::Transcript transcript;

  bool defeated() const;
};

// An unregistered serial number asks the TA for a session with `peer`.
ImpersonationTrial run_impersonation(World& world, crp::SerialNumber fake, crp::SerialNumber peer);

// Where a flipped bit lands inside a wire message.
enum class TamperClass { Tag, LengthPrefix, Payload };
std::string_view tamper_class_name(TamperClass c) noexcept;

struct TamperTrial {
  std::uint64_t message_index = 0;
  std::uint64_t bit = 0;
  bool fired = false;
  SessionResult session;

  // Nobody holds a key and at least one honest device rejected.
  bool defeated() const noexcept;
};

TamperTrial run_tamper(World& world, crp::SerialNumber sn_b, crp::SerialNumber sn_a, std::uint64_t message_index,
                       std::uint64_t bit);

// Picks a bit inside the requested class of a message of `size` bytes.
std::uint64_t pick_tamper_bit(TamperClass c, std::size_t size, RandomSource& rng);

// Cloned device: same serial number and ticket state as `genuine`, cipher
// from a fresh GENIE run.
DeviceKit clone_of(const DeviceKit& genuine, const ScenarioConfig& cfg, std::uint64_t seed);

}  // namespace d2d::scenario
