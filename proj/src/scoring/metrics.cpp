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

#include "avikit/scoring/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "avikit/core/error.hpp"

namespace avikit {
namespace {

double mean_of(const std::map<std::string, double>& m) {
  double s = 0.0;
  for (const auto& [k, v] : m) s += v;
  return s / static_cast<double>(m.size());
}

}  // namespace

AsdrResult asdr(std::span<const ScorePair> pairs) {
  AsdrResult r;
  double sum = 0.0;
  for (const auto& p : pairs) {
    if (p.before > 0.0) {
      sum += (p.before - p.after) / p.before;
      ++r.used;
    } else {
      ++r.excluded;
    }
  }
  if (r.used == 0) {
    throw Error(ErrorCode::AllZeroBaseline, std::to_string(r.excluded) + " pairs, none with a positive baseline");
  }
  r.value = sum / static_cast<double>(r.used);
  return r;
}

double asr(std::span<const std::optional<bool>> outcomes) {
  std::size_t attempted = 0, success = 0;
  for (const auto& o : outcomes) {
    if (!o) continue;
    ++attempted;
    success += *o ? 1 : 0;
  }
  if (attempted == 0) throw Error(ErrorCode::EmptyOutcomes, "no attempted attacks");
  return static_cast<double>(success) / static_cast<double>(attempted);
}

double asr(std::span<const bool> outcomes) {
  if (outcomes.empty()) throw Error(ErrorCode::EmptyOutcomes, "no attempted attacks");
  const auto success = std::count(outcomes.begin(), outcomes.end(), true);
  return static_cast<double>(success) / static_cast<double>(outcomes.size());
}

double aed(std::span<const ImagePairRef> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyPairs, "no successful attacks to measure");
  double sum = 0.0;
  for (const auto& p : pairs) sum += l2_distance(*p.clean, *p.adversarial);
  return sum / static_cast<double>(pairs.size());
}

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::Corruption: return "corruption";
    case Family::Decision: return "decision";
    case Family::Text: return "text";
    case Family::Bias: return "bias";
  }
  return "";
}

double RobustnessScores::get(Family f) const noexcept {
  switch (f) {
    case Family::Corruption: return corruption;
    case Family::Decision: return decision;
    case Family::Text: return text;
    case Family::Bias: return bias;
  }
  return 0.0;
}

double asdr_robustness(double average_asdr) noexcept { return 1.0 - std::max(average_asdr, 0.0); }

double decision_robustness(double asr_value) noexcept { return 1.0 - asr_value; }

RobustnessScores robustness_scores(const MetricsSummary& summary) {
  if (summary.corruption_asdr.empty()) throw Error(ErrorCode::MissingFamily, "corruption");
  if (!summary.decision_asr) throw Error(ErrorCode::MissingFamily, "decision");
  if (summary.text_asdr.empty()) throw Error(ErrorCode::MissingFamily, "text");
  if (summary.bias_accuracy.empty()) throw Error(ErrorCode::MissingFamily, "bias");
  RobustnessScores r;
  r.corruption = asdr_robustness(mean_of(summary.corruption_asdr));
  r.decision = decision_robustness(*summary.decision_asr);
  r.text = asdr_robustness(mean_of(summary.text_asdr));
  r.bias = mean_of(summary.bias_accuracy);
  return r;
}

}  // namespace avikit
