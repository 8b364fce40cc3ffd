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

#include "avikit/core/error.hpp"

namespace avikit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::UndecodableImage: return "UndecodableImage";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnsupportedSeverity: return "UnsupportedSeverity";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::BadParameters: return "BadParameters";
    case ErrorCode::PreAttackZero: return "PreAttackZero";
    case ErrorCode::NoSharedSegment: return "NoSharedSegment";
    case ErrorCode::VariantFileMissing: return "VariantFileMissing";
    case ErrorCode::VariantCountMismatch: return "VariantCountMismatch";
    case ErrorCode::UnknownSegmentKey: return "UnknownSegmentKey";
    case ErrorCode::ProviderMissing: return "ProviderMissing";
    case ErrorCode::MissingTemplate: return "MissingTemplate";
    case ErrorCode::ImageNotFound: return "ImageNotFound";
    case ErrorCode::ParaphraseCountMismatch: return "ParaphraseCountMismatch";
    case ErrorCode::EmptyQuestion: return "EmptyQuestion";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::GroundTruthShapeMismatch: return "GroundTruthShapeMismatch";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::AllZeroBaseline: return "AllZeroBaseline";
    case ErrorCode::EmptyOutcomes: return "EmptyOutcomes";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyPairs: return "EmptyPairs";
    case ErrorCode::MissingFamily: return "MissingFamily";
    case ErrorCode::NoResults: return "NoResults";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
      code_(code),
      detail_(detail) {}

}  // namespace avikit
