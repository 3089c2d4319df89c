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

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "d2d/cli.hpp"

namespace {

struct Shared {
  d2d::cli::ConfigOverrides flags;
  std::optional<std::string> config;
  std::string out_dir = "d2d-out";
  std::string format = "text";
};

void add_shared(CLI::App* cmd, Shared& s) {
  cmd->add_option("--seed", s.flags.seed, "master seed");
  cmd->add_option("--config", s.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--out-dir", s.out_dir, "directory for generated files")->capture_default_str();
  cmd->add_option("--format", s.format, "report format")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  cmd->add_option("--devices", s.flags.devices, "number of devices (and users)");
  cmd->add_option("--tickets", s.flags.tickets, "CRP tickets per device");
  cmd->add_option("--block-bits", s.flags.block_bits, "cipher block size: 16, 32, 64 or 128");
  cmd->add_option("--rounds", s.flags.rounds, "cipher rounds");
  cmd->add_option("--readings", s.flags.readings, "enrollment readings per user");
  cmd->add_option("--separation", s.flags.separation, "synthetic class separation");
  cmd->add_option("--kinds", s.flags.kinds, "classifiers, comma separated (knn,svm,tree,nb,lr)");
  cmd->add_option("--timeout", s.flags.timeout, "session timeout in bus steps");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"d2dlink: SUC-based device-to-device link simulator"};
  app.require_subcommand(1);
  Shared shared;

  auto* provision = app.add_subcommand("provision", "create device ciphers and the TA ticket records");
  auto* enroll = app.add_subcommand("enroll", "generate behavior data and train the TA model");
  auto* session = app.add_subcommand("session", "run mediated sessions between two devices");
  auto* attack = app.add_subcommand("attack", "run an attack scenario and report whether it was defeated");
  auto* report = app.add_subcommand("report", "summarize the reports in the output directory");
  for (auto* cmd : {provision, enroll, session, attack, report}) add_shared(cmd, shared);

  d2d::cli::SessionArgs sargs;
  bool no_update = false;
  session->add_option("--initiator", sargs.initiator, "serial number that sends the request");
  session->add_option("--peer", sargs.peer, "serial number of the requested peer");
  session->add_option("--count", sargs.count, "number of sessions")->capture_default_str();
  session->add_flag("--no-auto-update", no_update, "do not replace exhausted ticket lists");

  d2d::cli::AttackArgs aargs;
  attack->add_option("--kind", aargs.kind, "attack kind")
      ->required()
      ->check(CLI::IsMember({"eavesdrop", "replay", "tamper", "impersonate"}));
  attack->add_option("--trials", aargs.trials, "number of trials (default depends on kind)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : d2d::cli::kExitError;
  }
  sargs.auto_update = !no_update;

  d2d::cli::CliOptions opts;
  opts.out_dir = shared.out_dir;
  opts.format = shared.format == "json" ? d2d::cli::Format::Json : d2d::cli::Format::Text;

  d2d::cli::CommandResult result;
  try {
    std::optional<std::filesystem::path> config;
    if (shared.config) config = *shared.config;
    opts.cfg = d2d::cli::resolve_config(opts.out_dir, config, shared.flags);
    if (*provision) result = d2d::cli::cmd_provision(opts);
    else if (*enroll) result = d2d::cli::cmd_enroll(opts);
    else if (*session) result = d2d::cli::cmd_session(opts, sargs);
    else if (*attack) result = d2d::cli::cmd_attack(opts, aargs);
    else result = d2d::cli::cmd_report(opts);
  } catch (const std::exception& e) {
    result = d2d::cli::error_result(e);
    std::cerr << (opts.format == d2d::cli::Format::Json ? result.json : result.text);
    return result.exit_code;
  }
  std::cout << (opts.format == d2d::cli::Format::Json ? result.json : result.text);
  return result.exit_code;
}
