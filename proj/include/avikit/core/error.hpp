// Copyright (c) 2026, The avikit Authors. All rights reserved.
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

namespace avikit {

/// Every failure the toolkit reports carries one of these codes so callers
/// (and the CLI exit-code mapping) can branch without parsing messages.
enum class ErrorCode {
  // dataset / core
  MissingFile,
  MalformedRecord,
  UndecodableImage,
  DuplicateId,
  IoError,
  // corruption
  UnsupportedSeverity,
  ImageTooSmall,
  // oracle
  BudgetExhausted,
  Timeout,
  TransportError,
  ProtocolViolation,
  BadParameters,
  // decision attacks
  PreAttackZero,
  // text attacks
  NoSharedSegment,
  VariantFileMissing,
  VariantCountMismatch,
  UnknownSegmentKey,
  ProviderMissing,
  // bias
  MissingTemplate,
  ImageNotFound,
  ParaphraseCountMismatch,
  EmptyQuestion,
  EmptyResults,
  // metrics
  GroundTruthShapeMismatch,
  EmptyReference,
  AllZeroBaseline,
  EmptyOutcomes,
  ShapeMismatch,
  EmptyPairs,
  MissingFamily,
  // cli
  NoResults,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace avikit
