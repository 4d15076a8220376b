/* Copyright 2026 The osmgen Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace osmgen {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kChannelCount,
  kLevelOverflow,
  kInvalidDigit,
  kEmptyInput,
  kNonFinite,
  kDivergence,
  kIo,
  kParse,
  kUnpaired,
  kTestSplitGuard,
  kOutOfBounds,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kChannelCount: return "channel_count";
    case ErrorCode::kLevelOverflow: return "level_overflow";
    case ErrorCode::kInvalidDigit: return "invalid_digit";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kUnpaired: return "unpaired";
    case ErrorCode::kTestSplitGuard: return "test_split_guard";
    case ErrorCode::kOutOfBounds: return "out_of_bounds";
  }
  return "unknown";
}

// All library failures are reported as Error; code() is stable and machine
// readable, what() carries the human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace osmgen
