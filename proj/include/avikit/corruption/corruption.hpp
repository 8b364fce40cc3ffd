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
#include <span>
#include <string_view>
#include <vector>

#include "avikit/core/image.hpp"
#include "avikit/core/instruction.hpp"

namespace avikit {

enum class CorruptionKind {
  Fog,
  Brightness,
  Contrast,
  DefocusBlur,
  Elastic,
  Frost,
  GaussianBlur,
  GaussianNoise,
  GlassBlur,
  ImpulseNoise,
  Jpeg,
  MotionBlur,
  Pixelate,
  Saturate,
  ShotNoise,
  Snow,
  Spatter,
  SpeckleNoise,
  ZoomBlur,
};

inline constexpr std::size_t kCorruptionKindCount = 19;

const std::vector<CorruptionKind>& all_corruptions();
std::string_view to_string(CorruptionKind kind) noexcept;
/// Accepts the enum spelling, case-insensitive, '_' and '-' ignored.
std::optional<CorruptionKind> parse_corruption(std::string_view name);

/// True when the output depends on the seed.
bool is_seeded(CorruptionKind kind) noexcept;

/// Label of the parameter table shipped with this build. Parameters follow
/// the reference common-corruption levels 1/3/5 defined for 224-pixel
/// images; spatial sizes scale with min(height, width) / 224.
inline constexpr std::string_view kCorruptionTableVersion = "common-corruptions-224-relative/1";

class Severity {
 public:
  /// Throws Error(UnsupportedSeverity) unless level is 1, 3 or 5.
  explicit Severity(int level);
  int level() const noexcept { return level_; }
  /// 0, 1, 2 for levels 1, 3, 5.
  std::size_t index() const noexcept { return static_cast<std::size_t>(level_ / 2); }
  friend bool operator==(Severity, Severity) = default;

 private:
  int level_;
};

/// Human-readable parameters of one table cell, e.g. "sigma=0.38".
std::string describe_parameters(CorruptionKind kind, Severity severity);

/// Throws Error(ImageTooSmall) when a kernel does not fit the image.
ImageBuf apply_corruption(const ImageBuf& image, CorruptionKind kind, Severity severity, std::uint64_t seed);

/// hash(seed, id, kind, severity); lets any single item be regenerated alone.
std::uint64_t item_seed(std::uint64_t seed, std::string_view id, CorruptionKind kind, Severity severity) noexcept;

struct CorruptionItem {
  const VisualInstruction* source = nullptr;
  CorruptionKind kind = CorruptionKind::Fog;
  Severity severity{1};
  std::uint64_t seed = 0;
  ImageBuf image;
};

/// Emits |dataset| x |kinds| x |severities| items in dataset, kind, severity
/// order. With parallel > 1 items are computed on worker threads but the sink
/// is still called in that order from the calling thread.
/// Errors are rethrown with the item's id, kind and severity prepended.
void corruption_suite(const Dataset& dataset, std::span<const CorruptionKind> kinds,
                      std::span<const Severity> severities, std::uint64_t seed,
                      const std::function<void(const CorruptionItem&)>& sink, std::size_t parallel = 1);

}  // namespace avikit
