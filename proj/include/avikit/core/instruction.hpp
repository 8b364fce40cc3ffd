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

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "avikit/core/image.hpp"

namespace avikit {

enum class TaskKind {
  ImageClassification,
  ObjectCounting,
  MultiClassIdentification,
  OCR,
  KIE,
  ImageCaptioning,
  VQA,
  KGID,
  Visdial,
  ObjectHallucination,
};

enum class CapabilityKind {
  Perception,
  KnowledgeAcquisition,
  Reasoning,
  Commonsense,
  Hallucination,
};

inline constexpr std::array<TaskKind, 10> kAllTasks = {
    TaskKind::ImageClassification, TaskKind::ObjectCounting, TaskKind::MultiClassIdentification,
    TaskKind::OCR,                 TaskKind::KIE,            TaskKind::ImageCaptioning,
    TaskKind::VQA,                 TaskKind::KGID,           TaskKind::Visdial,
    TaskKind::ObjectHallucination,
};

inline constexpr std::array<CapabilityKind, 5> kAllCapabilities = {
    CapabilityKind::Perception, CapabilityKind::KnowledgeAcquisition, CapabilityKind::Reasoning,
    CapabilityKind::Commonsense, CapabilityKind::Hallucination,
};

/// Default capability of a task. Commonsense items use VQA-style tasks and
/// must state their capability explicitly in the dataset.
CapabilityKind capability_of(TaskKind task) noexcept;

std::string_view to_string(TaskKind task) noexcept;
std::string_view to_string(CapabilityKind cap) noexcept;
/// Short column label used in report tables (Per., Kno., ...).
std::string_view short_label(CapabilityKind cap) noexcept;

/// Case-insensitive; underscores and hyphens are ignored.
std::optional<TaskKind> parse_task(std::string_view name);
std::optional<CapabilityKind> parse_capability(std::string_view name);

struct VisualInstruction {
  std::string id;
  ImageBuf image;
  std::string prompt;
  std::vector<std::string> ground_truth;
  TaskKind task = TaskKind::VQA;
  CapabilityKind capability = CapabilityKind::Reasoning;
  /// Grouping key for shared-segment text attacks; defaults to the task name.
  std::string subtask;
  /// Path as written in the dataset file (relative to the dataset directory).
  std::string image_path;
};

enum class Violation {
  EmptyPrompt,
  EmptyGroundTruth,
  EmptyGroundTruthEntry,
  ImageTooSmall,
  BadImageBuffer,
};

std::string_view to_string(Violation v) noexcept;

inline constexpr std::size_t kMinImageExtent = 8;

std::vector<Violation> validate_instruction(const VisualInstruction& vi);

struct Dataset {
  std::vector<VisualInstruction> items;
  std::string source_path;

  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }
};

/// Loads a JSONL dataset: one {id, image_path, prompt, ground_truth, task,
/// capability?, subtask?} object per line; blank lines are skipped. Images
/// are resolved relative to the dataset file's directory.
/// Throws Error with MissingFile, MalformedRecord, UndecodableImage or DuplicateId.
Dataset load_dataset(const std::filesystem::path& path);

/// Record body shared by dataset files and derived manifests.
nlohmann::json instruction_record(const VisualInstruction& vi);

}  // namespace avikit
