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

#include "d2d/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "d2d/crypto.hpp"
#include "d2d/error.hpp"

namespace d2d::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// files

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Bytes read_bytes(const fs::path& p) {
  const std::string s = read_text(p);
  return Bytes(s.begin(), s.end());
}

void write_text(const fs::path& p, std::string_view data) {
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + p.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(Errc::Io, "short write to " + p.string());
}

void write_bytes(const fs::path& p, ByteView data) {
  write_text(p, std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

// ---------------------------------------------------------------------------
// configuration

std::vector<bio::ClassifierKind> parse_kinds(std::string_view list) {
  std::vector<bio::ClassifierKind> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    const std::string_view name = list.substr(start, comma - start);
    auto kind = bio::parse_kind(name);
    if (!kind) throw Error(Errc::InvalidConfig, "unknown classifier kind '" + std::string(name) + "'");
    out.push_back(*kind);
    start = comma + 1;
  }
  return out;
}

ordered_json config_to_json(const scenario::ScenarioConfig& c) {
  ordered_json kinds = ordered_json::array();
  for (auto k : c.kinds) kinds.push_back(std::string(bio::kind_name(k)));
  return ordered_json{{"seed", c.seed},
                      {"num_devices", c.num_devices},
                      {"tickets_per_device", c.tickets_per_device},
                      {"num_users", c.num_users},
                      {"readings_per_user", c.readings_per_user},
                      {"separation", c.separation},
                      {"block_bits", c.block_bits},
                      {"rounds", c.rounds},
                      {"kinds", kinds},
                      {"test_fraction", c.test_fraction},
                      {"timeout_steps", c.timeout_steps}};
}

void apply_json(const ordered_json& j, scenario::ScenarioConfig& c, const std::string& source) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, source + ": expected a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "num_devices") c.num_devices = v.get<std::uint32_t>();
      else if (key == "tickets_per_device") c.tickets_per_device = v.get<std::size_t>();
      else if (key == "num_users") c.num_users = v.get<std::uint32_t>();
      else if (key == "readings_per_user") c.readings_per_user = v.get<std::uint32_t>();
      else if (key == "separation") c.separation = v.get<double>();
      else if (key == "block_bits") c.block_bits = v.get<unsigned>();
      else if (key == "rounds") c.rounds = v.get<unsigned>();
      else if (key == "test_fraction") c.test_fraction = v.get<double>();
      else if (key == "timeout_steps") c.timeout_steps = v.get<std::uint64_t>();
      else if (key == "kinds") {
        c.kinds.clear();
        for (const auto& k : v) {
          auto kind = bio::parse_kind(k.get<std::string>());
          if (!kind) throw Error(Errc::InvalidConfig, source + ": unknown classifier kind " + k.dump());
          c.kinds.push_back(*kind);
        }
      } else {
        throw Error(Errc::InvalidConfig, source + ": unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, source + ": " + e.what());
  }
}

ordered_json parse_json_file(const fs::path& p) {
  try {
    return ordered_json::parse(read_text(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, p.string() + ": " + e.what());
  }
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// stored state

struct Stored {
  scenario::Provisioning prov;
  bio::TrainedModel model;
  std::vector<bio::UserProfile> profiles;
};

fs::path device_path(const fs::path& out, crp::SerialNumber sn, std::string_view ext) {
  return out / "devices" / (sn.str() + std::string(ext));
}

void save_provisioning(const fs::path& out, const scenario::Provisioning& prov) {
  write_text(out / "uir.txt", crp::save_uir(prov.uirs));
  for (const scenario::DeviceKit& d : prov.devices) {
    write_bytes(device_path(out, d.sn, ".suc"), suc::serialize_instance(d.cipher));
    write_text(device_path(out, d.sn, ".state"), crp::save_device_state(d.sn, d.state));
  }
}

scenario::Provisioning load_provisioning(const fs::path& out) {
  scenario::Provisioning prov;
  prov.uirs = crp::load_uir(read_text(out / "uir.txt"));
  for (const auto& [sn, rec] : prov.uirs.records()) {
    auto [state_sn, state] = crp::load_device_state(read_text(device_path(out, sn, ".state")));
    if (state_sn != sn) throw Error(Errc::InvalidConfig, "device state file names serial " + state_sn.str());
    prov.devices.push_back(
        scenario::DeviceKit{sn, rec.owner, suc::deserialize_instance(read_bytes(device_path(out, sn, ".suc"))), state});
  }
  return prov;
}

Stored load_stored(const fs::path& out) {
  Stored s{load_provisioning(out), bio::load_model(read_bytes(out / "model.bin")),
           bio::read_profiles_csv(read_text(out / "profiles.csv"))};
  return s;
}

// ---------------------------------------------------------------------------
// report pieces

ordered_json outcome_json(const proto::Outcome& o) {
  ordered_json j{{"status", std::string(proto::status_name(o.status))}, {"reason", std::string(to_string(o.reason))}};
  j["key_fingerprint"] = o.key ? ordered_json(proto::key_fingerprint(*o.key)) : ordered_json(nullptr);
  return j;
}

std::string outcome_text(const proto::Outcome& o) {
  std::string s(proto::status_name(o.status));
  if (o.rejected()) s += "(" + std::string(to_string(o.reason)) + ")";
  if (o.key) s += " Z=" + proto::key_fingerprint(*o.key);
  return s;
}

CommandResult finish(const CliOptions& opts, std::string_view name, int code, std::string text, ordered_json j) {
  CommandResult r;
  r.exit_code = code;
  r.text = std::move(text);
  r.json = dump(j);
  write_text(opts.out_dir / (std::string(name) + ".json"), r.json);
  return r;
}

std::pair<crp::SerialNumber, crp::SerialNumber> default_pair(const scenario::Provisioning& prov) {
  if (prov.devices.size() < 2) throw Error(Errc::InvalidConfig, "need at least two provisioned devices");
  return {prov.devices[0].sn, prov.devices[1].sn};
}

}  // namespace

// ---------------------------------------------------------------------------

scenario::ScenarioConfig resolve_config(const fs::path& out_dir, const std::optional<fs::path>& config_file,
                                        const ConfigOverrides& f) {
  scenario::ScenarioConfig c;
  const fs::path stored = out_dir / "config.json";
  if (fs::exists(stored)) apply_json(parse_json_file(stored), c, stored.string());
  if (config_file) {
    if (!fs::exists(*config_file)) throw Error(Errc::Io, "config file " + config_file->string() + " not found");
    apply_json(parse_json_file(*config_file), c, config_file->string());
  }
  if (f.seed) c.seed = *f.seed;
  if (f.devices) c.num_devices = c.num_users = *f.devices;
  if (f.tickets) c.tickets_per_device = *f.tickets;
  if (f.readings) c.readings_per_user = *f.readings;
  if (f.separation) c.separation = *f.separation;
  if (f.block_bits) c.block_bits = *f.block_bits;
  if (f.rounds) c.rounds = *f.rounds;
  if (f.kinds) c.kinds = parse_kinds(*f.kinds);
  if (f.timeout) c.timeout_steps = *f.timeout;
  return c;
}

CommandResult cmd_provision(const CliOptions& opts) {
  const scenario::Provisioning prov = scenario::provision(opts.cfg);
  write_text(opts.out_dir / "config.json", dump(config_to_json(opts.cfg)));
  save_provisioning(opts.out_dir, prov);

  ordered_json devices = ordered_json::array();
  std::ostringstream text;
  text << "provisioned " << prov.devices.size() << " devices (n=" << opts.cfg.block_bits << ", r=" << opts.cfg.rounds
       << ")\n";
  for (const scenario::DeviceKit& d : prov.devices) {
    const crp::UirRecord& rec = prov.uirs.at(d.sn);
    devices.push_back({{"sn", d.sn.value}, {"owner", d.owner}, {"tickets", rec.t()}});
    text << "  SN " << d.sn.str() << "  owner " << d.owner << "  tickets " << rec.t() << "\n";
  }
  ordered_json j{{"command", "provision"},
                 {"seed", opts.cfg.seed},
                 {"block_bits", opts.cfg.block_bits},
                 {"rounds", opts.cfg.rounds},
                 {"devices", devices}};
  return finish(opts, "provision", kExitOk, text.str(), j);
}

CommandResult cmd_enroll(const CliOptions& opts) {
  const scenario::Enrollment en = scenario::enroll(opts.cfg);
  write_text(opts.out_dir / "config.json", dump(config_to_json(opts.cfg)));
  write_text(opts.out_dir / "dataset.csv", bio::write_dataset_csv(en.dataset));
  write_text(opts.out_dir / "profiles.csv", bio::write_profiles_csv(en.profiles));
  write_bytes(opts.out_dir / "model.bin", bio::save_model(en.selection.best));

  ordered_json rows = ordered_json::array();
  std::ostringstream text;
  text << "enrolled " << opts.cfg.num_users << " users, " << opts.cfg.readings_per_user
       << " readings each, separation " << opts.cfg.separation << "\n";
  text << "  kind                  accuracy  mcc\n";
  const bio::EvalReport* best = nullptr;
  for (const auto& [kind, rep] : en.selection.per_kind) {
    rows.push_back({{"kind", std::string(bio::kind_name(kind))}, {"accuracy", rep.accuracy}, {"mcc", rep.mcc}});
    std::string name(bio::kind_name(kind));
    name.resize(20, ' ');
    text << "  " << name << "  " << fixed4(rep.accuracy) << "    " << fixed4(rep.mcc) << "\n";
    if (kind == en.selection.best.kind) best = &rep;
  }
  text << "best: " << bio::kind_name(en.selection.best.kind) << "\n";
  ordered_json j{{"command", "enroll"},
                 {"seed", opts.cfg.seed},
                 {"num_users", opts.cfg.num_users},
                 {"readings_per_user", opts.cfg.readings_per_user},
                 {"separation", opts.cfg.separation},
                 {"per_kind", rows},
                 {"best", {{"kind", std::string(bio::kind_name(en.selection.best.kind))},
                           {"accuracy", best ? best->accuracy : 0.0},
                           {"mcc", best ? best->mcc : 0.0}}}};
  return finish(opts, "enroll", kExitOk, text.str(), j);
}

CommandResult cmd_session(const CliOptions& opts, const SessionArgs& args) {
  Stored st = load_stored(opts.out_dir);
  auto [def_b, def_a] = default_pair(st.prov);
  const crp::SerialNumber sn_b = args.initiator ? crp::SerialNumber{*args.initiator} : def_b;
  const crp::SerialNumber sn_a = args.peer ? crp::SerialNumber{*args.peer} : def_a;
  if (args.count == 0) throw Error(Errc::InvalidConfig, "count must be positive");

  const std::string salt = "session/" + crp::save_uir(st.prov.uirs);
  scenario::World world(opts.cfg, std::move(st.prov), std::move(st.model), st.profiles, salt);
  world.device(sn_b);  // the initiator must be one of ours

  ordered_json sessions = ordered_json::array();
  std::ostringstream text;
  sim::Transcript all;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < args.count; ++i) {
    scenario::SessionResult r = world.run_session(sn_b, sn_a, args.auto_update);
    all.insert(all.end(), r.transcript.begin(), r.transcript.end());
    if (r.success()) ++ok;
    ordered_json updated = ordered_json::array();
    for (auto sn : r.updated) updated.push_back(sn.value);
    sessions.push_back({{"index", i},
                        {"sn_b", sn_b.value},
                        {"sn_a", sn_a.value},
                        {"success", r.success()},
                        {"b", outcome_json(r.b)},
                        {"a", outcome_json(r.a)},
                        {"tickets_b", r.tickets_b},
                        {"tickets_a", r.tickets_a},
                        {"updated", updated}});
    text << "session " << i + 1 << ": " << sn_b.str() << " -> " << sn_a.str() << "  "
         << (r.success() ? "Success" : "Rejected") << "\n"
         << "  " << sn_b.str() << ": " << outcome_text(r.b) << "\n"
         << "  " << sn_a.str() << ": " << outcome_text(r.a) << "\n"
         << "  tickets consumed: " << r.tickets_b << " + " << r.tickets_a << "\n";
    for (auto sn : r.updated) text << "  ticket list of " << sn.str() << " replaced before this session\n";
  }

  save_provisioning(opts.out_dir, world.snapshot());
  write_text(opts.out_dir / "transcript.txt", sim::format_transcript(all));
  ordered_json j{{"command", "session"},
                 {"seed", opts.cfg.seed},
                 {"suite", std::string(proto::kSuiteId)},
                 {"sessions", sessions},
                 {"succeeded", ok},
                 {"transcript", "transcript.txt"}};
  return finish(opts, "session", ok == args.count ? kExitOk : kExitRejected, text.str(), j);
}

CommandResult cmd_attack(const CliOptions& opts, const AttackArgs& args) {
  const Stored st = load_stored(opts.out_dir);
  auto [sn_b, sn_a] = default_pair(st.prov);
  const std::string base_salt = "attack/" + args.kind + "/" + crp::save_uir(st.prov.uirs);
  auto make_world = [&](std::size_t trial) {
    return std::make_unique<scenario::World>(opts.cfg, st.prov, st.model, st.profiles,
                                             base_salt + "/" + std::to_string(trial));
  };

  ordered_json details = ordered_json::array();
  sim::Transcript log;
  std::size_t trials = 0;
  std::size_t defeated = 0;
  std::string summary;

  if (args.kind == "eavesdrop") {
    trials = args.trials ? args.trials : 1;
    for (std::size_t t = 0; t < trials; ++t) {
      auto clean = make_world(t);
      const scenario::SessionResult reference = clean->run_session(sn_b, sn_a, false);
      auto world = make_world(t);
      auto policy = std::make_unique<sim::EavesdropPolicy>();
      const sim::EavesdropPolicy* spy = policy.get();
      world->bus().install_adversary(std::move(policy));
      const scenario::SessionResult r = world->run_session(sn_b, sn_a, false);
      const bool passive = r.transcript == reference.transcript;
      const bool captured = !spy->log().empty();
      const scenario::BlindnessReport blind =
          r.success() ? scenario::check_ta_blindness(*world, r) : scenario::BlindnessReport{};
      const bool ok = r.success() && passive && captured && blind.passed();
      defeated += ok;
      log.insert(log.end(), r.transcript.begin(), r.transcript.end());
      details.push_back({{"trial", t},
                         {"session_success", r.success()},
                         {"transcript_unchanged", passive},
                         {"captured", spy->log().size()},
                         {"ta_blind", blind.passed()},
                         {"view_values", blind.view_values},
                         {"pairs_checked", blind.pairs_checked}});
    }
    summary = "honest session succeeds under a passive recorder and the TA view cannot produce Z";
  } else if (args.kind == "replay") {
    trials = args.trials ? args.trials : 10;
    for (std::size_t t = 0; t < trials; ++t) {
      auto world = make_world(t);
      const scenario::ReplayTrial r = scenario::run_replay(*world, sn_b, sn_a);
      defeated += r.defeated();
      log.insert(log.end(), r.second.transcript.begin(), r.second.transcript.end());
      details.push_back({{"trial", t}, {"replayed", r.replayed}, {"victim", outcome_json(r.victim)}});
    }
    summary = "a replayed TA_CHALLENGE_B is refused as a spent ticket";
  } else if (args.kind == "impersonate") {
    trials = args.trials ? args.trials : 10;
    RandomSource rng(derive_seed(opts.cfg.seed, base_salt + "/fake"));
    for (std::size_t t = 0; t < trials; ++t) {
      auto world = make_world(t);
      crp::SerialNumber fake{rng.next_u64()};
      while (world->ta().uirs().contains(fake) || fake.str() == proto::TrustedAuthority::kId) fake.value = rng.next_u64();
      const scenario::ImpersonationTrial r = scenario::run_impersonation(*world, fake, sn_a);
      defeated += r.defeated();
      log.insert(log.end(), r.transcript.begin(), r.transcript.end());
      ordered_json replies = ordered_json::array();
      for (const Bytes& b : r.replies) replies.push_back(to_hex(b));
      details.push_back({{"trial", t}, {"fake_sn", fake.value}, {"replies", replies},
                         {"ta_sessions_opened", r.ta_sessions_opened}});
    }
    summary = "an unregistered serial number is refused with UnknownSerial";
  } else if (args.kind == "tamper") {
    std::vector<std::size_t> sizes;
    {
      auto world = make_world(0);
      for (const auto& e : world->run_session(sn_b, sn_a, false).transcript) sizes.push_back(e.bytes.size());
    }
    trials = args.trials ? args.trials : sizes.size() * 3;
    RandomSource rng(derive_seed(opts.cfg.seed, base_salt + "/bits"));
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t msg = t % sizes.size();
      const auto cls = static_cast<scenario::TamperClass>((t / sizes.size()) % 3);
      const std::uint64_t bit = scenario::pick_tamper_bit(cls, sizes[msg], rng);
      auto world = make_world(t + 1);
      const scenario::TamperTrial r = scenario::run_tamper(*world, sn_b, sn_a, msg, bit);
      defeated += r.defeated();
      log.insert(log.end(), r.session.transcript.begin(), r.session.transcript.end());
      details.push_back({{"trial", t},
                         {"message_index", msg},
                         {"class", std::string(scenario::tamper_class_name(cls))},
                         {"bit", bit},
                         {"b", outcome_json(r.session.b)},
                         {"a", outcome_json(r.session.a)}});
    }
    summary = "no single-bit modification lets a session end with a key";
  } else {
    throw Error(Errc::InvalidConfig, "unknown attack kind '" + args.kind + "'");
  }

  const bool pass = defeated == trials;
  write_text(opts.out_dir / ("attack-" + args.kind + ".txt"), sim::format_transcript(log));
  std::ostringstream text;
  text << "attack " << args.kind << ": " << (pass ? "PASS" : "FAIL") << " (" << defeated << "/" << trials
       << " defeated)\n  " << summary << "\n";
  ordered_json j{{"command", "attack"},
                 {"seed", opts.cfg.seed},
                 {"kind", args.kind},
                 {"trials", trials},
                 {"defeated", defeated},
                 {"verdict", pass ? "PASS" : "FAIL"},
                 {"details", details}};
  return finish(opts, "attack-" + args.kind, pass ? kExitOk : kExitNotDefeated, text.str(), j);
}

CommandResult cmd_report(const CliOptions& opts) {
  ordered_json all = ordered_json::object();
  std::ostringstream text;
  text << "report for " << opts.out_dir.string() << "\n";
  bool any = false;
  for (const char* name : {"provision", "enroll", "session"}) {
    const fs::path p = opts.out_dir / (std::string(name) + ".json");
    if (fs::exists(p)) {
      all[name] = parse_json_file(p);
      any = true;
    }
  }
  ordered_json attacks = ordered_json::object();
  for (const char* kind : {"eavesdrop", "replay", "tamper", "impersonate"}) {
    const fs::path p = opts.out_dir / ("attack-" + std::string(kind) + ".json");
    if (fs::exists(p)) attacks[kind] = parse_json_file(p);
  }
  if (!attacks.empty()) {
    all["attacks"] = attacks;
    any = true;
  }
  if (!any) throw Error(Errc::Io, "nothing to report in " + opts.out_dir.string());

  int code = kExitOk;
  if (all.contains("provision")) {
    const auto& p = all["provision"];
    text << "  provision: " << p["devices"].size() << " devices, n=" << p["block_bits"].get<unsigned>() << "\n";
  }
  if (all.contains("enroll")) {
    const auto& e = all["enroll"]["best"];
    text << "  enroll: best " << e["kind"].get<std::string>() << ", accuracy " << fixed4(e["accuracy"].get<double>())
         << ", mcc " << fixed4(e["mcc"].get<double>()) << "\n";
  }
  if (all.contains("session")) {
    const auto& s = all["session"];
    const std::size_t n = s["sessions"].size();
    const std::size_t ok = s["succeeded"].get<std::size_t>();
    text << "  session: " << ok << "/" << n << " succeeded\n";
    if (ok != n) code = kExitRejected;
  }
  for (const auto& [kind, a] : attacks.items()) {
    text << "  attack " << kind << ": " << a["verdict"].get<std::string>() << " (" << a["defeated"].get<std::size_t>()
         << "/" << a["trials"].get<std::size_t>() << ")\n";
    if (a["verdict"] != "PASS") code = kExitNotDefeated;
  }
  CommandResult r;
  r.exit_code = code;
  r.text = text.str();
  r.json = dump(all);
  write_text(opts.out_dir / "report.json", r.json);
  write_text(opts.out_dir / "report.txt", r.text);
  return r;
}

CommandResult error_result(const std::exception& e) {
  CommandResult r;
  r.exit_code = kExitError;
  std::string code = "Error";
  if (const auto* de = dynamic_cast<const Error*>(&e)) code = std::string(to_string(de->code()));
  r.text = std::string("error: ") + e.what() + "\n";
  r.json = dump(ordered_json{{"error", code}, {"message", e.what()}});
  return r;
}

}  // namespace d2d::cli
