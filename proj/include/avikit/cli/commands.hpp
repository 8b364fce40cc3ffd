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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "avikit/core/error.hpp"

namespace avikit {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2, kExitPartial = 3 };

/// 1 for errors in what the user supplied (files, flags, data), else 2.
int exit_code_for(const Error& e) noexcept;

/// Everything a run depends on; serialized into manifest.json so the run can
/// be repeated from the manifest alone.
struct RunConfig {
  std::string command;
  std::filesystem::path dataset;
  std::string oracle;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  std::size_t budget = 1500;
  std::vector<int> severities{1, 3, 5};
  /// Corruption kinds or text methods; empty means all.
  std::vector<std::string> methods;
  std::size_t parallel = 1;
  bool force_suffix = true;
  bool exact_match = false;
  bool save_images = true;

  // attack-text resources
  std::optional<std::filesystem::path> synonyms;
  std::optional<std::filesystem::path> paraphrases;
  std::optional<std::filesystem::path> semantic_variants;

  // oracle transport
  std::optional<std::filesystem::path> cache_dir;
  double timeout_s = 120.0;
  int retries = 2;
  int max_new_tokens = 128;

  nlohmann::json to_json() const;
  /// Throws Error(ConfigError).
  static RunConfig from_json(const nlohmann::json& j);
};

struct RunStatus {
  int exit_code = kExitOk;
  std::size_t results = 0;
  std::size_t errors = 0;
};

/// Each command writes manifest.json, its result JSONL, errors.jsonl and a
/// summary table (.txt and .csv) under config.out. Item-level failures are
/// logged and yield kExitPartial; anything else throws Error.
RunStatus cmd_corrupt(const RunConfig& config);
RunStatus cmd_attack_image(const RunConfig& config);
RunStatus cmd_attack_text(const RunConfig& config);
/// config.dataset is a bias suite JSONL (see write_bias_suite).
RunStatus cmd_bias(const RunConfig& config);
/// Dispatches on config.command.
RunStatus run_command(const RunConfig& config);

/// Writes report.txt and radar.csv for the results under `results` into
/// `out`. Throws Error(NoResults).
void cmd_report(const std::filesystem::path& results, const std::filesystem::path& out);

}  // namespace avikit
