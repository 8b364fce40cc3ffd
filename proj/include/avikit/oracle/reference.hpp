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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "avikit/core/instruction.hpp"
#include "avikit/oracle/oracle.hpp"

namespace avikit {

/// Answer of a reference oracle outside its truthful region. It shares no
/// token with any realistic ground truth, so every task scores it 0.
inline constexpr std::string_view kWrongAnswer = "∅";

/// Prompt -> truthful answer. Prompts shared by several items map to all of
/// their first ground-truth entries joined with ", ", which still scores
/// above 0 for each of them.
class AnswerKey {
 public:
  AnswerKey() = default;
  explicit AnswerKey(const Dataset& dataset);

  void add(const std::string& prompt, const std::string& answer);
  /// kWrongAnswer for unknown prompts.
  std::string answer(std::string_view prompt) const;
  std::size_t size() const noexcept { return answers_.size(); }

 private:
  std::unordered_map<std::string, std::string> answers_;
};

struct ThresholdMeanIntensity {
  double threshold = 0.5;
};

/// Wrong answer iff w . x > b on the flattened unit-interval pixels.
struct LinearBoundary {
  std::vector<double> w;
  double b = 0.0;
};

/// Answers with the prompt words that appear in `keywords` (case-insensitive,
/// prompt order, trailing punctuation ignored); an empty list echoes every word.
struct KeywordEcho {
  std::vector<std::string> keywords;
};

/// Image digest -> canned response; unknown digests answer "UNKNOWN".
struct LookupTable {
  std::map<std::string, std::string> responses;
};

using ReferenceKind = std::variant<ThresholdMeanIntensity, LinearBoundary, KeywordEcho, LookupTable>;

/// Reads a JSON object {"<digest>": "<response>", ...}.
LookupTable load_lookup_table(const std::filesystem::path& path);

/// Reads {"w": [...], "b": number}.
LinearBoundary load_linear_boundary(const std::filesystem::path& path);

/// Deterministic in-process model. Pure in (image, prompt, seed).
class ReferenceTransport : public Transport {
 public:
  /// Throws Error(BadParameters).
  ReferenceTransport(ReferenceKind kind, std::uint64_t seed, AnswerKey key = {});

  std::string generate(const OracleImage& image, std::string_view prompt) override;
  std::string id() const override { return id_; }

  /// Closed-form decision used by generate(); exposed for brute-force checks.
  bool truthful(const ImageBuf& image) const;

 private:
  ReferenceKind kind_;
  AnswerKey key_;
  std::string id_;
};

std::unique_ptr<OracleHandle> make_reference_oracle(ReferenceKind kind, std::uint64_t seed, AnswerKey key = {},
                                                    OracleOptions options = {});

}  // namespace avikit
