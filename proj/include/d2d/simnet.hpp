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
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "d2d/bytes.hpp"
#include "d2d/random.hpp"

namespace d2d::sim {

struct Outgoing {
  std::string to;
  Bytes bytes;
};

struct Envelope {
  std::string from;
  std::string to;
  Bytes bytes;
};

/// Something attached to the bus. Handlers return the messages they want sent;
/// the bus stamps them with the endpoint's id as sender.
class Endpoint {
 public:
  virtual ~Endpoint() = default;

  virtual const std::string& id() const = 0;
  virtual std::vector<Outgoing> on_message(const std::string& from, ByteView bytes, std::uint64_t now) = 0;
  // Called when the bus clock reaches next_deadline().
  virtual std::vector<Outgoing> on_tick(std::uint64_t /*now*/) { return {}; }
  virtual std::optional<std::uint64_t> next_deadline() const { return std::nullopt; }
  // A message this endpoint sent could not be routed.
  virtual std::vector<Outgoing> on_delivery_failure(const std::string& /*to*/, std::uint64_t /*now*/) { return {}; }
};

struct TranscriptEntry {
  std::uint64_t seq = 0;
  std::string from;
  std::string to;
  Bytes bytes;

  bool operator==(const TranscriptEntry&) const = default;
};

using Transcript = std::vector<TranscriptEntry>;

// One line per entry: "<seq> <from> <to> <hex-bytes>\n".
std::string format_transcript(const Transcript& t);

/// Sits on every link. intercept() sees each message before delivery and
/// returns what is actually delivered, in order: nothing (drop), the message
/// itself, a modified copy, or extra copies.
class AdversaryPolicy {
 public:
  virtual ~AdversaryPolicy() = default;

  virtual std::string_view mode() const = 0;
  virtual std::vector<Bytes> intercept(const Envelope& env) = 0;
  // Messages the adversary originates when installed.
  virtual std::vector<Envelope> initial_injections() { return {}; }
  // Endpoint the adversary answers on (a forged identity), if any.
  virtual Endpoint* endpoint() { return nullptr; }

  const std::vector<Envelope>& log() const noexcept { return log_; }

 protected:
  void record(const Envelope& env) { log_.push_back(env); }

 private:
  std::vector<Envelope> log_;
};

// Records everything and changes nothing.
class EavesdropPolicy final : public AdversaryPolicy {
 public:
  std::string_view mode() const override { return "eavesdrop"; }
  std::vector<Bytes> intercept(const Envelope& env) override;
};

// Captures the first message whose tag byte equals target_tag. The next
// message with that tag to the same receiver is preceded by one verbatim copy
// of the captured bytes.
class ReplayPolicy final : public AdversaryPolicy {
 public:
  explicit ReplayPolicy(std::uint8_t target_tag) : target_tag_(target_tag) {}

  std::string_view mode() const override { return "replay"; }
  std::vector<Bytes> intercept(const Envelope& env) override;
  bool replayed() const noexcept { return replayed_; }

 private:
  std::uint8_t target_tag_;
  std::optional<Envelope> captured_;
  bool replayed_ = false;
};

// Flips bit (bit_index mod message bits) of the message_index-th message
// (0-based) that crosses the bus after installation.
class TamperPolicy final : public AdversaryPolicy {
 public:
  TamperPolicy(std::uint64_t message_index, std::uint64_t bit_index)
      : message_index_(message_index), bit_index_(bit_index) {}

  std::string_view mode() const override { return "tamper"; }
  std::vector<Bytes> intercept(const Envelope& env) override;
  bool fired() const noexcept { return fired_; }

 private:
  std::uint64_t message_index_;
  std::uint64_t bit_index_;
  std::uint64_t seen_ = 0;
  bool fired_ = false;
};

// Sends a caller-built request under a forged identity and collects whatever
// comes back to that identity.
class ImpersonatePolicy final : public AdversaryPolicy, private Endpoint {
 public:
  ImpersonatePolicy(std::string fake_id, std::string target_id, Bytes forged_request)
      : fake_id_(std::move(fake_id)), target_id_(std::move(target_id)), request_(std::move(forged_request)) {}

  std::string_view mode() const override { return "impersonate"; }
  std::vector<Bytes> intercept(const Envelope& env) override;
  std::vector<Envelope> initial_injections() override;
  Endpoint* endpoint() override { return this; }

  const std::vector<Bytes>& received() const noexcept { return received_; }

 private:
  const std::string& id() const override { return fake_id_; }
  std::vector<Outgoing> on_message(const std::string& from, ByteView bytes, std::uint64_t now) override;

  std::string fake_id_;
  std::string target_id_;
  Bytes request_;
  std::vector<Bytes> received_;
};

struct BusStats {
  std::uint64_t posted = 0;          // handed to the bus by endpoints or callers
  std::uint64_t delivered = 0;       // reached a receiver
  std::uint64_t dropped = 0;         // removed by the adversary
  std::uint64_t injected = 0;        // extra copies or forged messages from the adversary
  std::uint64_t undeliverable = 0;   // no such receiver
};

/// Deterministic single-threaded message bus. Messages are delivered one per
/// step in global FIFO order; when the queue runs dry the clock jumps to the
/// earliest endpoint deadline. Endpoints are not owned.
class Bus {
 public:
  explicit Bus(std::uint64_t seed = 0) : rng_(seed) {}

  void register_endpoint(Endpoint& ep);  // Error(DuplicateEndpoint)
  bool has_endpoint(const std::string& id) const { return endpoints_.count(id) != 0; }
  void install_adversary(std::unique_ptr<AdversaryPolicy> policy);  // Error(PolicyConflict)
  AdversaryPolicy* adversary() noexcept { return adversary_.get(); }
  std::unique_ptr<AdversaryPolicy> remove_adversary();

  void post(const std::string& from, std::vector<Outgoing> out);
  void post(Envelope env);

  // Runs until nothing is queued and no deadline is pending. Returns the
  // entries delivered during this call. Throws StepBudgetExceeded.
  Transcript run_until_idle(std::uint64_t max_steps = 100000);

  const Transcript& transcript() const noexcept { return transcript_; }
  std::size_t pending() const noexcept { return queue_.size(); }
  std::uint64_t now() const noexcept { return now_; }
  const BusStats& stats() const noexcept { return stats_; }
  RandomSource& rng() noexcept { return rng_; }

 private:
  void deliver(Envelope env);

  RandomSource rng_;
  std::map<std::string, Endpoint*> endpoints_;
  std::unique_ptr<AdversaryPolicy> adversary_;
  std::deque<Envelope> queue_;
  Transcript transcript_;
  std::uint64_t now_ = 0;
  std::uint64_t seq_ = 0;
  BusStats stats_;
};

}  // namespace d2d::sim
