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
#include <stdexcept>
#include <string>
#include <string_view>

namespace d2d {

// Error and rejection codes. The numeric values are carried on the wire as the
// REJECT reason byte, so they must not be renumbered.
enum class Errc : std::uint8_t {
  Ok = 0,
  InvalidConfig = 1,
  InvalidParams = 2,
  MalformedEncoding = 3,
  DuplicateSerial = 4,
  Exhausted = 5,
  AlreadyConsumed = 6,
  UnknownTicket = 7,
  ReplayedTicket = 8,
  TooFewReadings = 9,
  DegenerateData = 10,
  AuthFailure = 11,
  KeyAgreementFailure = 12,
  UnknownSerial = 13,
  NonceMismatch = 14,
  BiometricMismatch = 15,
  HashMismatch = 16,
  UnexpectedMessage = 17,
  Timeout = 18,
  UpdateRequired = 19,
  PeerAbort = 20,
  DuplicateEndpoint = 21,
  DeliveryFailure = 22,
  StepBudgetExceeded = 23,
  PolicyConflict = 24,
  Io = 25,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  explicit Error(Errc code) : std::runtime_error(std::string(to_string(code))), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace d2d
