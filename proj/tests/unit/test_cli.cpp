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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "d2d/cli.hpp"

using namespace d2d;
using namespace d2d::cli;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("d2dlink-test-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
             std::to_string(counter++));
    fs::remove_all(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CliOptions small(const fs::path& dir, std::uint64_t seed = 5) {
  ConfigOverrides o;
  o.seed = seed;
  o.devices = 3;
  o.tickets = 8;
  CliOptions opts;
  opts.cfg = resolve_config(dir, std::nullopt, o);
  opts.out_dir = dir;
  return opts;
}

}  // namespace

TEST(Cli, ProvisionEnrollSession) {
  TempDir dir;
  const CliOptions opts = small(dir.path());
  EXPECT_EQ(cmd_provision(opts).exit_code, kExitOk);
  EXPECT_TRUE(fs::exists(dir.path() / "uir.txt"));
  EXPECT_TRUE(fs::exists(dir.path() / "devices" / "1001.suc"));
  EXPECT_TRUE(fs::exists(dir.path() / "devices" / "1003.state"));
  EXPECT_EQ(cmd_enroll(opts).exit_code, kExitOk);
  EXPECT_TRUE(fs::exists(dir.path() / "model.bin"));
  const CommandResult s = cmd_session(opts, SessionArgs{});
  EXPECT_EQ(s.exit_code, kExitOk) << s.text;
  EXPECT_NE(s.json.find("\"success\": true"), std::string::npos);
  EXPECT_FALSE(slurp(dir.path() / "transcript.txt").empty());
}

TEST(Cli, StoredConfigIsReused) {
  TempDir dir;
  ASSERT_EQ(cmd_provision(small(dir.path())).exit_code, kExitOk);
  const auto cfg = resolve_config(dir.path(), std::nullopt, {});
  EXPECT_EQ(cfg.num_devices, 3u);
  EXPECT_EQ(cfg.tickets_per_device, 8u);
  EXPECT_EQ(cfg.seed, 5u);
}

TEST(Cli, SameSeedSameArtifacts) {
  TempDir d1, d2;
  for (const TempDir* d : {&d1, &d2}) {
    const CliOptions opts = small(d->path(), 9);
    ASSERT_EQ(cmd_provision(opts).exit_code, kExitOk);
    ASSERT_EQ(cmd_enroll(opts).exit_code, kExitOk);
    ASSERT_EQ(cmd_session(opts, SessionArgs{std::nullopt, std::nullopt, 2, true}).exit_code, kExitOk);
  }
  for (const char* f : {"uir.txt", "model.bin", "transcript.txt", "dataset.csv", "devices/1002.suc"})
    EXPECT_EQ(slurp(d1.path() / f), slurp(d2.path() / f)) << f;
}

TEST(Cli, ZeroTicketsIsAConfigError) {
  TempDir dir;
  ConfigOverrides o;
  o.tickets = 0;
  try {
    CliOptions opts;
    opts.cfg = resolve_config(dir.path(), std::nullopt, o);
    opts.out_dir = dir.path();
    const CommandResult r = cmd_provision(opts);
    EXPECT_EQ(r.exit_code, kExitError);
  } catch (const std::exception& e) {
    EXPECT_EQ(error_result(e).exit_code, kExitError);
  }
}

TEST(Cli, MissingStateIsAnIoError) {
  TempDir dir;
  try {
    cmd_session(small(dir.path()), SessionArgs{});
    FAIL() << "expected an exception";
  } catch (const std::exception& e) {
    EXPECT_EQ(error_result(e).exit_code, kExitError);
  }
}

TEST(Cli, UnknownPeerExitsTwo) {
  TempDir dir;
  const CliOptions opts = small(dir.path());
  cmd_provision(opts);
  cmd_enroll(opts);
  const CommandResult r = cmd_session(opts, SessionArgs{std::nullopt, 4040, 1, true});
  EXPECT_EQ(r.exit_code, kExitRejected);
  EXPECT_NE(r.text.find("UnknownSerial"), std::string::npos);
}

TEST(Cli, ListUpdateAfterExhaustion) {
  TempDir dir;
  const CliOptions opts = small(dir.path());
  cmd_provision(opts);
  cmd_enroll(opts);
  // t = 8 funds four sessions; the fifth needs fresh lists.
  const CommandResult r = cmd_session(opts, SessionArgs{std::nullopt, std::nullopt, 5, true});
  EXPECT_EQ(r.exit_code, kExitOk) << r.text;
  EXPECT_NE(r.text.find("replaced before this session"), std::string::npos);
  // State persisted: the next run continues from the fresh lists.
  EXPECT_EQ(cmd_session(opts, SessionArgs{}).exit_code, kExitOk);
}

TEST(Cli, AttacksAndReport) {
  TempDir dir;
  const CliOptions opts = small(dir.path());
  cmd_provision(opts);
  cmd_enroll(opts);
  for (const char* kind : {"eavesdrop", "replay", "impersonate", "tamper"}) {
    const CommandResult r = cmd_attack(opts, AttackArgs{kind, kind == std::string("tamper") ? 11u : 2u});
    EXPECT_EQ(r.exit_code, kExitOk) << kind << "\n" << r.text;
    EXPECT_TRUE(fs::exists(dir.path() / ("attack-" + std::string(kind) + ".json")));
  }
  EXPECT_ANY_THROW(cmd_attack(opts, AttackArgs{"ddos", 0}));
  const CommandResult rep = cmd_report(opts);
  EXPECT_EQ(rep.exit_code, kExitOk);
  EXPECT_TRUE(fs::exists(dir.path() / "report.json"));
}
