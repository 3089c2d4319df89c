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

#include "d2d/scenario.hpp"

#include <algorithm>
#include <set>

#include "d2d/error.hpp"

namespace d2d::scenario {

void ScenarioConfig::validate() const {
  if (tickets_per_device == 0) throw Error(Errc::InvalidParams, "tickets_per_device must be positive");
  if (num_devices < 2) throw Error(Errc::InvalidConfig, "need at least two devices");
  if (num_users != num_devices) throw Error(Errc::InvalidConfig, "num_users must equal num_devices");
  if (readings_per_user < 2) throw Error(Errc::InvalidConfig, "readings_per_user must be at least 2");
  if (!(separation > 0)) throw Error(Errc::InvalidConfig, "separation must be positive");
  if (!(test_fraction > 0 && test_fraction < 1)) throw Error(Errc::InvalidConfig, "test_fraction must be in (0, 1)");
  if (kinds.empty()) throw Error(Errc::InvalidConfig, "no classifier kinds");
  if (timeout_steps == 0) throw Error(Errc::InvalidConfig, "timeout_steps must be positive");
  try {
    suc::SucConfig{block_bits, rounds}.validate();
  } catch (const Error& e) {
    throw Error(Errc::InvalidConfig, e.what());
  }
}

crp::SerialNumber serial_for(std::size_t device_index) { return crp::SerialNumber{1001 + device_index}; }

Provisioning provision(const ScenarioConfig& cfg) {
  cfg.validate();
  Provisioning out;
  const suc::SucConfig suc_cfg{cfg.block_bits, cfg.rounds};
  for (std::uint32_t i = 0; i < cfg.num_devices; ++i) {
    const crp::SerialNumber sn = serial_for(i);
    RandomSource trng(derive_seed(cfg.seed, "genie/" + sn.str()));
    suc::SucInstance cipher = suc::genie_create(trng, suc_cfg);
    RandomSource ta_rng(derive_seed(cfg.seed, "personalize/" + sn.str()));
    auto [record, state] = crp::personalize(sn, cipher, cfg.tickets_per_device, i, ta_rng);
    out.uirs.insert(std::move(record));
    out.devices.push_back(DeviceKit{sn, i, std::move(cipher), std::move(state)});
  }
  return out;
}

Enrollment enroll(const ScenarioConfig& cfg) {
  cfg.validate();
  Enrollment out;
  RandomSource data_rng(derive_seed(cfg.seed, "enroll/data"));
  out.dataset = bio::generate_synthetic(cfg.num_users, cfg.readings_per_user, cfg.separation, data_rng, &out.profiles);
  RandomSource split_rng(derive_seed(cfg.seed, "enroll/split"));
  out.selection = bio::select_model(out.dataset, cfg.kinds, cfg.test_fraction, split_rng);
  return out;
}

bool SessionResult::success() const noexcept {
  return b.success() && a.success() && b.key && a.key && *b.key == *a.key;
}

World::World(const ScenarioConfig& cfg, Provisioning prov, bio::TrainedModel model,
             const std::vector<bio::UserProfile>& profiles, std::string_view salt) {
  const proto::ProtocolOptions opts{cfg.timeout_steps};
  const std::string tail = "/" + std::string(salt);
  bus_ = std::make_unique<sim::Bus>(derive_seed(cfg.seed, "bus" + tail));
  ta_ = std::make_unique<proto::TrustedAuthority>(std::move(prov.uirs), std::move(model),
                                                  RandomSource(derive_seed(cfg.seed, "ta" + tail)), opts);
  bus_->register_endpoint(*ta_);
  for (DeviceKit& kit : prov.devices) {
    if (kit.owner >= profiles.size()) throw Error(Errc::InvalidConfig, "no behavior profile for owner of " + kit.sn.str());
    const std::string who = kit.sn.str() + tail;
    bio::BehaviorSensor sensor(profiles[kit.owner], RandomSource(derive_seed(cfg.seed, "sensor/" + who)));
    auto dev = std::make_unique<proto::Device>(kit.sn, std::move(kit.cipher), std::move(kit.state), std::move(sensor),
                                               RandomSource(derive_seed(cfg.seed, "device/" + who)), opts);
    bus_->register_endpoint(*dev);
    serials_.push_back(kit.sn);
    owners_.push_back(kit.owner);
    devices_.push_back(std::move(dev));
  }
}

proto::Device* World::find_device(crp::SerialNumber sn) {
  for (auto& d : devices_) {
    if (d->sn() == sn) return d.get();
  }
  return nullptr;
}

proto::Device& World::device(crp::SerialNumber sn) {
  if (proto::Device* d = find_device(sn)) return *d;
  throw Error(Errc::UnknownSerial, "no device " + sn.str());
}

Provisioning World::snapshot() const {
  Provisioning out;
  out.uirs = ta_->uirs();
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    out.devices.push_back(DeviceKit{serials_[i], owners_[i], devices_[i]->cipher(), devices_[i]->tickets()});
  }
  return out;
}

SessionResult World::attempt(crp::SerialNumber sn_b, crp::SerialNumber sn_a) {
  proto::Device& b = device(sn_b);
  proto::Device* a = find_device(sn_a);
  const auto spent = [this](crp::SerialNumber sn) -> std::size_t {
    return ta_->uirs().contains(sn) ? ta_->uirs().at(sn).consumed.count() : 0;
  };
  const std::size_t before_b = spent(sn_b);
  const std::size_t before_a = spent(sn_a);
  const std::size_t sessions_before = ta_->sessions().size();
  const std::uint64_t a_count = a ? a->session_count() : 0;

  SessionResult r;
  r.sn_b = sn_b;
  r.sn_a = sn_a;
  bus_->post(b.id(), b.start_session(sn_a, bus_->now()));
  r.transcript = bus_->run_until_idle();
  r.b = b.outcome();
  if (a && a->session_count() != a_count) r.a = a->outcome();
  if (ta_->sessions().size() > sessions_before) r.ta = ta_->sessions().back();
  r.tickets_b = spent(sn_b) - before_b;
  r.tickets_a = spent(sn_a) - before_a;
  return r;
}

SessionResult World::run_session(crp::SerialNumber sn_b, crp::SerialNumber sn_a, bool auto_update) {
  SessionResult first = attempt(sn_b, sn_a);
  if (!auto_update || !first.b.rejected() || first.b.reason != Errc::UpdateRequired) return first;

  sim::Transcript log = std::move(first.transcript);
  std::vector<crp::SerialNumber> updated;
  for (crp::SerialNumber sn : {sn_b, sn_a}) {
    if (!ta_->uirs().contains(sn) || !ta_->needs_update(sn)) continue;
    UpdateResult u = run_update(sn);
    log.insert(log.end(), u.transcript.begin(), u.transcript.end());
    if (!u.success()) {
      first.transcript = std::move(log);
      first.updated = std::move(updated);
      return first;
    }
    updated.push_back(sn);
  }
  SessionResult second = attempt(sn_b, sn_a);
  log.insert(log.end(), second.transcript.begin(), second.transcript.end());
  second.transcript = std::move(log);
  second.updated = std::move(updated);
  return second;
}

UpdateResult World::run_update(crp::SerialNumber sn) {
  proto::Device& d = device(sn);
  UpdateResult r;
  r.sn = sn;
  bus_->post(proto::TrustedAuthority::kId, ta_->begin_update(sn, bus_->now()));
  r.transcript = bus_->run_until_idle();
  r.ta = ta_->updates().back().outcome;
  r.device = d.update().outcome;
  return r;
}

// ---------------------------------------------------------------------------

namespace {

bool contains_run(const Bytes& hay, ByteView needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

BlindnessReport check_ta_blindness(World& world, const SessionResult& session) {
  if (!session.success() || !session.ta) throw Error(Errc::InvalidParams, "blindness check needs a successful session");
  const proto::TrustedAuthority& ta = world.ta();
  const proto::DeviceSession& b = world.device(session.sn_b).session();
  const unsigned bits_b = world.device(session.sn_b).tickets().block_bits;
  const unsigned bits_a = world.device(session.sn_a).tickets().block_bits;

  std::set<Bytes> view;
  const std::vector<proto::Key> ta_keys = {
      proto::derive_enc_key(session.ta->ticket_b_auth.challenge, bits_b),
      proto::derive_enc_key(session.ta->ticket_a_auth.challenge, bits_a),
  };
  auto add_plaintext = [&](const Bytes& plain) {
    view.insert(plain);
    if (plain.size() == proto::kReadingSize + 16) {
      view.emplace(plain.begin(), plain.begin() + proto::kReadingSize);
      view.emplace(plain.begin() + proto::kReadingSize, plain.end());
    }
    if (plain.size() % 2 == 0 && plain.size() <= 32) {
      view.emplace(plain.begin(), plain.begin() + static_cast<std::ptrdiff_t>(plain.size() / 2));
      view.emplace(plain.begin() + static_cast<std::ptrdiff_t>(plain.size() / 2), plain.end());
    }
  };
  for (const sim::TranscriptEntry& e : session.transcript) {
    view.insert(e.bytes);
    proto::Message m;
    try {
      m = proto::Message::decode(e.bytes);
    } catch (const Error&) {
      continue;
    }
    for (const Bytes& f : m.fields) {
      view.insert(f);
      for (const proto::Key& k : ta_keys) {
        try {
          add_plaintext(proto::open(k, f));
        } catch (const Error&) {
        }
      }
    }
  }
  for (const auto& [sn, rec] : ta.uirs().records()) {
    view.insert(u64_to_bytes(sn.value));
    view.insert(block_to_bytes(rec.seed, rec.block_bits));
    for (std::size_t i = 0; i < rec.t(); ++i) {
      view.insert(block_to_bytes(rec.challenge(i), rec.block_bits));
      view.insert(block_to_bytes(rec.responses[i], rec.block_bits));
    }
  }
  for (const proto::Nonce& n : ta.generated_nonces()) view.emplace(n.begin(), n.end());

  BlindnessReport report;
  report.view_values = view.size();
  report.nonces_hidden = std::none_of(view.begin(), view.end(), [&](const Bytes& v) {
    return contains_run(v, b.r_a2) || contains_run(v, b.r_b2);
  });

  // B's own values: X_Bi it recovered, X_Aj from its dispatch.
  const Bytes x_bi = block_to_bytes(b.x_own_cross, bits_b);
  const Bytes x_aj = block_to_bytes(b.x_peer, bits_a);
  const proto::Digest& z = *session.b.key;
  report.no_preimage = true;
  for (const Bytes& r : view) {
    for (const Bytes& r2 : view) {
      ++report.pairs_checked;
      if (proto::hash_fields({x_bi, x_aj, r, r2}) == z) report.no_preimage = false;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

ReplayTrial run_replay(World& world, crp::SerialNumber sn_b, crp::SerialNumber sn_a) {
  auto owned = std::make_unique<sim::ReplayPolicy>(static_cast<std::uint8_t>(proto::Tag::TaChallengeB));
  sim::ReplayPolicy* policy = owned.get();
  world.bus().install_adversary(std::move(owned));
  ReplayTrial trial;
  try {
    trial.first = world.run_session(sn_b, sn_a, false);
    trial.second = world.run_session(sn_b, sn_a, false);
  } catch (...) {
    world.bus().remove_adversary();
    throw;
  }
  trial.replayed = policy->replayed();
  trial.victim = trial.second.b;
  world.bus().remove_adversary();
  return trial;
}

bool ImpersonationTrial::defeated() const {
  const Bytes expected = proto::make_reject(Errc::UnknownSerial);
  return ta_sessions_opened == 0 && !replies.empty() &&
         std::all_of(replies.begin(), replies.end(), [&](const Bytes& r) { return r == expected; });
}

ImpersonationTrial run_impersonation(World& world, crp::SerialNumber fake, crp::SerialNumber peer) {
  if (world.ta().uirs().contains(fake)) throw Error(Errc::InvalidParams, "serial " + fake.str() + " is registered");
  const proto::Message req{proto::Tag::AuthReq, {u64_to_bytes(fake.value), u64_to_bytes(peer.value)}};
  auto owned = std::make_unique<sim::ImpersonatePolicy>(fake.str(), proto::TrustedAuthority::kId, req.encode());
  sim::ImpersonatePolicy* policy = owned.get();

  ImpersonationTrial trial;
  trial.fake = fake;
  const std::size_t before = world.ta().sessions().size();
  world.bus().install_adversary(std::move(owned));
  try {
    trial.transcript = world.bus().run_until_idle();
  } catch (...) {
    world.bus().remove_adversary();
    throw;
  }
  trial.replies = policy->received();
  trial.ta_sessions_opened = world.ta().sessions().size() - before;
  world.bus().remove_adversary();
  return trial;
}

std::string_view tamper_class_name(TamperClass c) noexcept {
  switch (c) {
    case TamperClass::Tag: return "tag";
    case TamperClass::LengthPrefix: return "length";
    case TamperClass::Payload: return "payload";
  }
  return "unknown";
}

bool TamperTrial::defeated() const noexcept {
  const bool keyless = !session.b.success() && !session.a.success();
  return fired && keyless && (session.b.rejected() || session.a.rejected());
}

TamperTrial run_tamper(World& world, crp::SerialNumber sn_b, crp::SerialNumber sn_a, std::uint64_t message_index,
                       std::uint64_t bit) {
  auto owned = std::make_unique<sim::TamperPolicy>(message_index, bit);
  sim::TamperPolicy* policy = owned.get();
  world.bus().install_adversary(std::move(owned));
  TamperTrial trial;
  trial.message_index = message_index;
  trial.bit = bit;
  try {
    trial.session = world.run_session(sn_b, sn_a, false);
  } catch (...) {
    world.bus().remove_adversary();
    throw;
  }
  trial.fired = policy->fired();
  world.bus().remove_adversary();
  return trial;
}

std::uint64_t pick_tamper_bit(TamperClass c, std::size_t size, RandomSource& rng) {
  // tag byte, then the first field's 4-byte length, then everything else
  const std::uint64_t total = size * 8;
  if (total <= 40) throw Error(Errc::InvalidParams, "message too short to tamper by class");
  switch (c) {
    case TamperClass::Tag: return rng.uniform(8);
    case TamperClass::LengthPrefix: return 8 + rng.uniform(32);
    case TamperClass::Payload: return 40 + rng.uniform(total - 40);
  }
  return 0;
}

DeviceKit clone_of(const DeviceKit& genuine, const ScenarioConfig& cfg, std::uint64_t seed) {
  RandomSource trng(seed);
  return DeviceKit{genuine.sn, genuine.owner, suc::genie_create(trng, suc::SucConfig{cfg.block_bits, cfg.rounds}),
                   genuine.state};
}

}  // namespace d2d::scenario
