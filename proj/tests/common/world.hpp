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

// Small helpers shared by the protocol-level tests.

#include <functional>
#include <memory>
#include <string>

#include "d2d/scenario.hpp"

namespace d2d::testing {

struct Fixture {
  scenario::ScenarioConfig cfg;
  scenario::Provisioning prov;
  scenario::Enrollment enr;

  std::unique_ptr<scenario::World> world(std::string_view salt = "test") const {
    return std::make_unique<scenario::World>(cfg, prov, enr.selection.best, enr.profiles, salt);
  }
};

inline Fixture make_fixture(scenario::ScenarioConfig cfg) {
  Fixture f{cfg, scenario::provision(cfg), scenario::enroll(cfg)};
  return f;
}

// Rewrites every message with a given tag through `edit`; everything else
// passes untouched.
class EditPolicy final : public sim::AdversaryPolicy {
 public:
  using Fn = std::function<std::vector<Bytes>(const sim::Envelope&)>;
  EditPolicy(std::uint8_t tag, Fn edit) : tag_(tag), edit_(std::move(edit)) {}
  std::string_view mode() const override { return "edit"; }
  std::vector<Bytes> intercept(const sim::Envelope& env) override {
    if (env.bytes.empty() || env.bytes[0] != tag_) return {env.bytes};
    record(env);
    ++hits;
    return edit_(env);
  }
  int hits = 0;

 private:
  std::uint8_t tag_;
  Fn edit_;
};

inline EditPolicy::Fn flip_byte(std::size_t offset_from_end) {
  return [offset_from_end](const sim::Envelope& env) {
    Bytes b = env.bytes;
    b[b.size() - 1 - offset_from_end] ^= 0x01;
    return std::vector<Bytes>{b};
  };
}

}  // namespace d2d::testing
