/**
 * Copyright 2026 The skey Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace skey {

// Numeric values are mirrored by skey_status in skey.h.
enum class ErrorCode : int {
  kOk = 0,
  kUnreadableFile = 1,
  kUnsupportedCodec = 2,
  kEmptyAudio = 3,
  kTooShort = 4,
  kInvalidTransposition = 5,
  kShapeMismatch = 6,
  kNonFiniteActivation = 7,
  kNonFiniteLoss = 8,
  kEmptyBatch = 9,
  kEmptyCorpus = 10,
  kDegenerateCalibration = 11,
  kUnparsableLabel = 12,
  kMissingPrediction = 13,
  kMissingReference = 14,
  kIoError = 15,
  kInvalidArgument = 16,
  kInternal = 17,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace skey
