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

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "avikit/bias/bias.hpp"
#include "avikit/scoring/metrics.hpp"

namespace avikit {

// Result files written by the commands, one JSON object per line.
inline constexpr std::string_view kCorruptionResults = "corruption_results.jsonl";
inline constexpr std::string_view kDecisionResults = "decision_results.jsonl";
inline constexpr std::string_view kTextResults = "text_results.jsonl";
inline constexpr std::string_view kBiasResults = "bias_results.jsonl";
inline constexpr std::string_view kErrorLog = "errors.jsonl";

/// Throws Error(MissingFile) or Error(MalformedRecord).
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// "-" for nullopt, otherwise fixed-point with `digits` decimals.
std::string format_number(std::optional<double> v, int digits = 2);

/// Plain-text table with left-aligned first column and right-aligned rest.
struct TextTable {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string render() const;
  std::string csv() const;
};

struct CorruptionSummary {
  /// Corruption name -> ASDR over every item and severity; nullopt when all
  /// clean scores were 0. Table order.
  std::vector<std::pair<std::string, std::optional<AsdrResult>>> kinds;
  std::optional<double> average;
};

/// Rows carry kind, score_before and score_after.
CorruptionSummary summarize_corruption(std::span<const nlohmann::json> rows);
TextTable corruption_table(const CorruptionSummary& s);

struct DecisionGroup {
  std::string capability;
  std::size_t attempted = 0;
  std::size_t skipped = 0;
  std::size_t successes = 0;
  std::optional<double> asr;
  std::optional<double> aed_par, aed_pb, aed_ps;
};

struct DecisionSummary {
  /// Capability order; a group whose items were all skipped has no ASR.
  std::vector<DecisionGroup> groups;
  /// Means over the groups that have a value.
  std::optional<double> average_asr;
  std::optional<double> average_aed_par, average_aed_pb, average_aed_ps;
};

/// Rows carry capability, skipped, success and aed_par/aed_pb/aed_ps.
DecisionSummary summarize_decision(std::span<const nlohmann::json> rows);
TextTable decision_table(const DecisionSummary& s);

struct TextSummary {
  /// Method -> ASDR over the per-instruction pairs of all its results.
  std::vector<std::pair<std::string, std::optional<AsdrResult>>> methods;
  /// Group -> method -> ASDR.
  std::map<std::string, std::map<std::string, std::optional<double>>> by_group;
  /// Mean of the method rows.
  std::optional<double> average;
};

/// Rows carry group, method and per_instruction [{id, before, after}].
TextSummary summarize_text(std::span<const nlohmann::json> rows);
TextTable text_table(const TextSummary& s);

/// Rows carry the bias record plus "answer".
BiasReport summarize_bias(std::span<const nlohmann::json> rows);
TextTable bias_table(const BiasReport& r);

struct Report {
  std::string text;
  /// "family,score" rows for the families present.
  std::string radar_csv;
  std::map<Family, double> scores;
};

/// Collects every result file under `dir` (sorted paths), recomputes the
/// metrics and robustness scores. Throws Error(NoResults) when none exist.
Report build_report(const std::filesystem::path& dir);

}  // namespace avikit
