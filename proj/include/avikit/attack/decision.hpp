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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "avikit/core/image.hpp"
#include "avikit/core/instruction.hpp"
#include "avikit/oracle/budget.hpp"
#include "avikit/oracle/oracle.hpp"
#include "avikit/scoring/score.hpp"

namespace avikit {

/// Hard-label view of a model on one instruction: an image is adversarial
/// when the scored response is 0.
class AdvOracle {
 public:
  AdvOracle(OracleHandle& oracle, const VisualInstruction& instruction, ScoringOptions scoring = {});

  /// Score of the response to (image, prompt). Cache misses cost one query.
  double score(const ImageBuf& image, QueryBudget& budget, bool bypass_cache = false);
  bool is_adversarial(const ImageBuf& image, QueryBudget& budget, bool bypass_cache = false) {
    return score(image, budget, bypass_cache) == 0.0;
  }

  const VisualInstruction& instruction() const noexcept { return instruction_; }

 private:
  OracleHandle& oracle_;
  const VisualInstruction& instruction_;
  ScoringOptions scoring_;
};

struct AttackConfig {
  std::size_t total_budget = 1500;
  std::size_t init_cap = 100;
  /// Init noise level k (1-based) is k * sigma_step.
  double sigma_step = 0.02;
  /// PAR starts with par_grid x par_grid patches and halves patch size while
  /// the finer patches stay at least par_min_patch pixels.
  std::size_t par_grid = 4;
  std::size_t par_min_patch = 16;
  ScoringOptions scoring;
};

enum class PatchState : std::uint8_t { Untried, Restored, Sensitive };

struct PatchLevel {
  std::size_t grid = 0;
  std::vector<PatchState> state;
  /// L2 norm of the remaining perturbation inside each patch.
  std::vector<double> magnitude;
};

struct PatchMasks {
  std::vector<PatchLevel> levels;
};

/// Pixel rectangle [y0, y1) x [x0, x1) of patch (row, col) on a grid x grid
/// partition; the rectangles tile the image exactly.
struct PatchRect {
  std::size_t y0, y1, x0, x1;
};
PatchRect patch_rect(std::size_t height, std::size_t width, std::size_t grid, std::size_t row, std::size_t col);

/// Grid sizes PAR visits for an image of this size.
std::vector<std::size_t> par_grids(std::size_t height, std::size_t width, const AttackConfig& config);

/// Throws Error(PreAttackZero) if the clean image is already adversarial
/// (that check is charged to `budget`). Samples clean + k*sigma_step*N(0,1),
/// quantized, for k = 1..init_cap and returns the first adversarial one.
std::optional<ImageBuf> init_gaussian_attack(AdvOracle& ao, QueryBudget& budget, std::uint64_t seed,
                                             const AttackConfig& config = {});

struct ParResult {
  ImageBuf image;
  PatchMasks masks;
  bool budget_exhausted = false;
};

/// Restores clean pixels patch by patch, largest remaining perturbation first,
/// keeping a restoration only when the result stays adversarial.
ParResult par_refine(AdvOracle& ao, const ImageBuf& clean, const ImageBuf& adv, QueryBudget& budget,
                     const AttackConfig& config = {});

struct RefineResult {
  ImageBuf image;
  bool budget_exhausted = false;
  /// False when the final re-check failed and `image` fell back to the input.
  bool verified = true;
};

/// Both refinements keep one query of `budget` for a cache-bypassing re-check
/// of the final state. With less than two queries they return `adv`.
RefineResult boundary_refine(AdvOracle& ao, const ImageBuf& clean, const ImageBuf& adv, QueryBudget& budget,
                             std::uint64_t seed);
RefineResult surfree_refine(AdvOracle& ao, const ImageBuf& clean, const ImageBuf& adv, QueryBudget& budget,
                            std::uint64_t seed);

struct AttackOutcome {
  double pre_score = 0.0;
  bool success = false;
  std::optional<ImageBuf> adv_par;
  std::optional<ImageBuf> adv_par_boundary;
  std::optional<ImageBuf> adv_par_surfree;
  std::optional<double> aed_par;
  std::optional<double> aed_pb;
  std::optional<double> aed_ps;
  std::size_t queries_used = 0;
  std::uint64_t seed = 0;
};

/// Pre-attack score (1 query), init ramp, PAR, then Boundary and SurFree each
/// from the PAR result with half of the remaining queries.
/// Throws Error(PreAttackZero) when the clean score is already 0.
AttackOutcome attack_pipeline(AdvOracle& ao, std::uint64_t seed, const AttackConfig& config = {});

/// Per-item attack seed derived from the run seed and the instruction id.
std::uint64_t attack_seed(std::uint64_t seed, std::string_view id) noexcept;

struct AttackRecord {
  const VisualInstruction* source = nullptr;
  /// Empty when the pre-attack score was already 0 (reported as "-").
  std::optional<AttackOutcome> outcome;
  double pre_score = 0.0;
  std::uint64_t seed = 0;
};

/// Attacks every item; the sink sees records in dataset order.
void attack_suite(const Dataset& dataset, OracleHandle& oracle, const AttackConfig& config, std::uint64_t seed,
                  const std::function<void(const AttackRecord&)>& sink, std::size_t parallel = 1);

}  // namespace avikit
