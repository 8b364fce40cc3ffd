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

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "avikit/core/image.hpp"

namespace avikit {

struct ScorePair {
  double before = 0.0;
  double after = 0.0;
};

struct AsdrResult {
  double value = 0.0;
  std::size_t used = 0;
  /// Pairs with before == 0, where the drop rate is undefined.
  std::size_t excluded = 0;
};

/// Mean of (before - after) / before over pairs with before > 0.
/// Throws Error(AllZeroBaseline) when no pair qualifies.
AsdrResult asdr(std::span<const ScorePair> pairs);

/// Successes over attempted attacks; nullopt entries were skipped and do
/// not count. Throws Error(EmptyOutcomes) when nothing was attempted.
double asr(std::span<const std::optional<bool>> outcomes);
double asr(std::span<const bool> outcomes);

struct ImagePairRef {
  const ImageBuf* clean = nullptr;
  const ImageBuf* adversarial = nullptr;
};

/// Mean flattened L2 distance on the unit scale.
/// Throws Error(ShapeMismatch) or Error(EmptyPairs).
double aed(std::span<const ImagePairRef> pairs);

enum class Family { Corruption, Decision, Text, Bias };

std::string_view to_string(Family f) noexcept;

struct MetricsSummary {
  std::map<std::string, double> corruption_asdr;  // per corruption kind
  std::map<std::string, double> text_asdr;        // per text attack method
  std::optional<double> decision_asr;
  std::map<std::string, double> aed;              // per decision stage
  std::map<std::string, double> bias_accuracy;    // per bias row
};

struct RobustnessScores {
  double corruption = 0.0;
  double decision = 0.0;
  double text = 0.0;
  double bias = 0.0;

  double get(Family f) const noexcept;
};

/// 1 - max(average ASDR, 0).
double asdr_robustness(double average_asdr) noexcept;
/// 1 - ASR.
double decision_robustness(double asr_value) noexcept;

/// Throws Error(MissingFamily) naming the first family without data.
RobustnessScores robustness_scores(const MetricsSummary& summary);

}  // namespace avikit
