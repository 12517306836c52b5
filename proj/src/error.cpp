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

#include "subsent/error.hpp"

#include <string>

namespace subsent {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kMalformedRow: return "MalformedRow";
    case ErrorCode::kSpanUnrecoverable: return "SpanUnrecoverable";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kBadArgument: return "BadArgument";
    case ErrorCode::kVocabTooSmall: return "VocabTooSmall";
    case ErrorCode::kUnknownId: return "UnknownId";
    case ErrorCode::kTooLong: return "TooLong";
    case ErrorCode::kOutOfRegion: return "OutOfRegion";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kBadAlpha: return "BadAlpha";
    case ErrorCode::kDisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::kUninitializedState: return "UninitializedState";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kVocabOverflow: return "VocabOverflow";
    case ErrorCode::kNoValidPosition: return "NoValidPosition";
    case ErrorCode::kBadLengths: return "BadLengths";
    case ErrorCode::kBadSpan: return "BadSpan";
    case ErrorCode::kModelMissing: return "ModelMissing";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kCheckpointFormat: return "CheckpointFormat";
  }
  return "Unknown";
}

int exit_status(ErrorCode code) { return 10 + static_cast<int>(code); }

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

}  // namespace subsent
