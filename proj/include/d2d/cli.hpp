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
#include <filesystem>
#include <optional>
#include <string>

#include "d2d/scenario.hpp"

namespace d2d::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRejected = 2;
inline constexpr int kExitNotDefeated = 3;
inline constexpr int kExitError = 4;

enum class Format { Text, Json };

struct CliOptions {
  scenario::ScenarioConfig cfg;
  std::filesystem::path out_dir = "d2d-out";
  Format format = Format::Text;
};

// Flag values as given on the command line; unset means "not given".
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> devices;
  std::optional<std::size_t> tickets;
  std::optional<std::uint32_t> readings;
  std::optional<double> separation;
  std::optional<unsigned> block_bits;
  std::optional<unsigned> rounds;
  std::optional<std::string> kinds;  // comma separated
  std::optional<std::uint64_t> timeout;
};

// Effective configuration: defaults, then <out_dir>/config.json from an
// earlier command, then the --config file, then flags.
scenario::ScenarioConfig resolve_config(const std::filesystem::path& out_dir,
                                        const std::optional<std::filesystem::path>& config_file,
                                        const ConfigOverrides& flags);

struct CommandResult {
  int exit_code = kExitOk;
  std::string text;  // human-readable report
  std::string json;  // same report as a JSON document
};

CommandResult cmd_provision(const CliOptions& opts);
CommandResult cmd_enroll(const CliOptions& opts);

struct SessionArgs {
  std::optional<std::uint64_t> initiator;  // sends AUTH_REQ; default: first device
  std::optional<std::uint64_t> peer;       // default: second device
  std::size_t count = 1;
  bool auto_update = true;
};
CommandResult cmd_session(const CliOptions& opts, const SessionArgs& args);

struct AttackArgs {
  std::string kind;        // eavesdrop | replay | tamper | impersonate
  std::size_t trials = 0;  // 0 picks the per-kind default
};
CommandResult cmd_attack(const CliOptions& opts, const AttackArgs& args);

CommandResult cmd_report(const CliOptions& opts);

// Maps an exception escaping a command to an exit code and message.
CommandResult error_result(const std::exception& e);

}  // namespace d2d::cli
