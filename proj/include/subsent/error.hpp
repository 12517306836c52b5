// Copyright 2026 The subsent Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace subsent {

// Every failure surfaced by the library carries one of these codes. The CLI
// maps each code to its own process exit status.
enum class ErrorCode {
  kIo,
  kMissingColumn,
  kMalformedRow,
  kSpanUnrecoverable,
  kEmptyInput,
  kTooFewSamples,
  kBadArgument,
  kVocabTooSmall,
  kUnknownId,
  kTooLong,
  kOutOfRegion,
  kShapeMismatch,
  kBadAlpha,
  kDisconnectedGraph,
  kUninitializedState,
  kBadConfig,
  kVocabOverflow,
  kNoValidPosition,
  kBadLengths,
  kBadSpan,
  kModelMissing,
  kLengthMismatch,
  kDegenerateLabels,
  kCheckpointFormat,
};

std::string_view error_code_name(ErrorCode code);

// Distinct nonzero exit status per error class (10 + ordinal).
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace subsent
