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

#include "d2d/simnet.hpp"

#include <algorithm>
#include <sstream>

#include "d2d/error.hpp"

namespace d2d::sim {

std::string format_transcript(const Transcript& t) {
  std::ostringstream out;
  for (const TranscriptEntry& e : t) out << e.seq << ' ' << e.from << ' ' << e.to << ' ' << to_hex(e.bytes) << '\n';
  return out.str();
}

std::vector<Bytes> EavesdropPolicy::intercept(const Envelope& env) {
  record(env);
  return {env.bytes};
}

std::vector<Bytes> ReplayPolicy::intercept(const Envelope& env) {
  if (env.bytes.empty() || env.bytes[0] != target_tag_) return {env.bytes};
  if (!captured_) {
    captured_ = env;
    record(env);
    return {env.bytes};
  }
  if (!replayed_ && captured_->to == env.to) {
    replayed_ = true;
    record(*captured_);
    return {captured_->bytes, env.bytes};
  }
  return {env.bytes};
}

std::vector<Bytes> TamperPolicy::intercept(const Envelope& env) {
  const std::uint64_t index = seen_++;
  if (index != message_index_ || env.bytes.empty()) return {env.bytes};
  Bytes modified = env.bytes;
  const std::uint64_t bit = bit_index_ % (modified.size() * 8);
  modified[bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
  fired_ = true;
  record(Envelope{env.from, env.to, modified});
  return {std::move(modified)};
}

std::vector<Bytes> ImpersonatePolicy::intercept(const Envelope& env) { return {env.bytes}; }

std::vector<Envelope> ImpersonatePolicy::initial_injections() {
  Envelope forged{fake_id_, target_id_, request_};
  record(forged);
  return {std::move(forged)};
}

std::vector<Outgoing> ImpersonatePolicy::on_message(const std::string& from, ByteView bytes, std::uint64_t) {
  received_.emplace_back(bytes.begin(), bytes.end());
  record(Envelope{from, fake_id_, received_.back()});
  return {};
}

void Bus::register_endpoint(Endpoint& ep) {
  auto [it, inserted] = endpoints_.emplace(ep.id(), &ep);
  if (!inserted) throw Error(Errc::DuplicateEndpoint, ep.id());
}

void Bus::install_adversary(std::unique_ptr<AdversaryPolicy> policy) {
  if (adversary_) throw Error(Errc::PolicyConflict, "an adversary policy is already installed");
  if (!policy) throw Error(Errc::InvalidParams, "null policy");
  if (Endpoint* ep = policy->endpoint()) register_endpoint(*ep);
  adversary_ = std::move(policy);
  for (Envelope& env : adversary_->initial_injections()) {
    ++stats_.injected;
    queue_.push_back(std::move(env));
  }
}

std::unique_ptr<AdversaryPolicy> Bus::remove_adversary() {
  if (adversary_) {
    if (Endpoint* ep = adversary_->endpoint()) endpoints_.erase(ep->id());
  }
  return std::move(adversary_);
}

void Bus::post(const std::string& from, std::vector<Outgoing> out) {
  for (Outgoing& o : out) post(Envelope{from, std::move(o.to), std::move(o.bytes)});
}

void Bus::post(Envelope env) {
  ++stats_.posted;
  queue_.push_back(std::move(env));
}

void Bus::deliver(Envelope env) {
  ++now_;
  auto it = endpoints_.find(env.to);
  if (it == endpoints_.end()) {
    ++stats_.undeliverable;
    auto sender = endpoints_.find(env.from);
    if (sender != endpoints_.end()) post(env.from, sender->second->on_delivery_failure(env.to, now_));
    return;
  }
  ++stats_.delivered;
  transcript_.push_back(TranscriptEntry{seq_++, env.from, env.to, env.bytes});
  post(env.to, it->second->on_message(env.from, env.bytes, now_));
}

Transcript Bus::run_until_idle(std::uint64_t max_steps) {
  const std::size_t start = transcript_.size();
  std::uint64_t steps = 0;
  for (;;) {
    if (!queue_.empty()) {
      if (steps++ >= max_steps) throw Error(Errc::StepBudgetExceeded, std::to_string(max_steps) + " steps");
      Envelope env = std::move(queue_.front());
      queue_.pop_front();
      if (!adversary_) {
        deliver(std::move(env));
        continue;
      }
      std::vector<Bytes> out = adversary_->intercept(env);
      if (out.empty()) {
        ++stats_.dropped;
        continue;
      }
      stats_.injected += out.size() - 1;
      for (Bytes& b : out) deliver(Envelope{env.from, env.to, std::move(b)});
      continue;
    }

    std::optional<std::uint64_t> earliest;
    for (const auto& [id, ep] : endpoints_) {
      if (auto d = ep->next_deadline()) earliest = earliest ? std::min(*earliest, *d) : *d;
    }
    if (!earliest) break;
    if (steps++ >= max_steps) throw Error(Errc::StepBudgetExceeded, std::to_string(max_steps) + " steps");
    now_ = std::max(now_, *earliest);
    for (const auto& [id, ep] : endpoints_) {
      auto d = ep->next_deadline();
      if (d && *d <= now_) post(id, ep->on_tick(now_));
    }
  }
  return Transcript(transcript_.begin() + static_cast<std::ptrdiff_t>(start), transcript_.end());
}

}  // namespace d2d::sim
