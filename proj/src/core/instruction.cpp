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

#include "avikit/core/instruction.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "avikit/core/error.hpp"
#include "avikit/core/image_io.hpp"

namespace avikit {
namespace {

std::string canonical_name(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

CapabilityKind capability_of(TaskKind task) noexcept {
  switch (task) {
    case TaskKind::ImageClassification:
    case TaskKind::ObjectCounting:
    case TaskKind::MultiClassIdentification:
      return CapabilityKind::Perception;
    case TaskKind::OCR:
    case TaskKind::KIE:
    case TaskKind::ImageCaptioning:
      return CapabilityKind::KnowledgeAcquisition;
    case TaskKind::VQA:
    case TaskKind::KGID:
    case TaskKind::Visdial:
      return CapabilityKind::Reasoning;
    case TaskKind::ObjectHallucination:
      return CapabilityKind::Hallucination;
  }
  return CapabilityKind::Reasoning;
}

std::string_view to_string(TaskKind task) noexcept {
  switch (task) {
    case TaskKind::ImageClassification: return "ImageClassification";
    case TaskKind::ObjectCounting: return "ObjectCounting";
    case TaskKind::MultiClassIdentification: return "MultiClassIdentification";
    case TaskKind::OCR: return "OCR";
    case TaskKind::KIE: return "KIE";
    case TaskKind::ImageCaptioning: return "ImageCaptioning";
    case TaskKind::VQA: return "VQA";
    case TaskKind::KGID: return "KGID";
    case TaskKind::Visdial: return "Visdial";
    case TaskKind::ObjectHallucination: return "ObjectHallucination";
  }
  return "";
}

std::string_view to_string(CapabilityKind cap) noexcept {
  switch (cap) {
    case CapabilityKind::Perception: return "Perception";
    case CapabilityKind::KnowledgeAcquisition: return "KnowledgeAcquisition";
    case CapabilityKind::Reasoning: return "Reasoning";
    case CapabilityKind::Commonsense: return "Commonsense";
    case CapabilityKind::Hallucination: return "Hallucination";
  }
  return "";
}

std::string_view short_label(CapabilityKind cap) noexcept {
  switch (cap) {
    case CapabilityKind::Perception: return "Per.";
    case CapabilityKind::KnowledgeAcquisition: return "Kno.";
    case CapabilityKind::Reasoning: return "Rea.";
    case CapabilityKind::Commonsense: return "Com.";
    case CapabilityKind::Hallucination: return "Hal.";
  }
  return "";
}

std::optional<TaskKind> parse_task(std::string_view name) {
  const std::string key = canonical_name(name);
  for (TaskKind t : kAllTasks) {
    if (canonical_name(to_string(t)) == key) return t;
  }
  return std::nullopt;
}

std::optional<CapabilityKind> parse_capability(std::string_view name) {
  const std::string key = canonical_name(name);
  for (CapabilityKind c : kAllCapabilities) {
    if (canonical_name(to_string(c)) == key) return c;
  }
  return std::nullopt;
}

std::string_view to_string(Violation v) noexcept {
  switch (v) {
    case Violation::EmptyPrompt: return "EmptyPrompt";
    case Violation::EmptyGroundTruth: return "EmptyGroundTruth";
    case Violation::EmptyGroundTruthEntry: return "EmptyGroundTruthEntry";
    case Violation::ImageTooSmall: return "ImageTooSmall";
    case Violation::BadImageBuffer: return "BadImageBuffer";
  }
  return "";
}

std::vector<Violation> validate_instruction(const VisualInstruction& vi) {
  std::vector<Violation> out;
  if (blank(vi.prompt)) out.push_back(Violation::EmptyPrompt);
  if (vi.ground_truth.empty()) {
    out.push_back(Violation::EmptyGroundTruth);
  } else if (std::any_of(vi.ground_truth.begin(), vi.ground_truth.end(),
                         [](const std::string& g) { return g.empty(); })) {
    out.push_back(Violation::EmptyGroundTruthEntry);
  }
  if (vi.image.height < kMinImageExtent || vi.image.width < kMinImageExtent) {
    out.push_back(Violation::ImageTooSmall);
  }
  if (!vi.image.valid()) out.push_back(Violation::BadImageBuffer);
  return out;
}

nlohmann::json instruction_record(const VisualInstruction& vi) {
  nlohmann::json j;
  j["id"] = vi.id;
  j["image_path"] = vi.image_path;
  j["prompt"] = vi.prompt;
  j["ground_truth"] = vi.ground_truth;
  j["task"] = std::string(to_string(vi.task));
  j["capability"] = std::string(to_string(vi.capability));
  if (!vi.subtask.empty() && vi.subtask != to_string(vi.task)) j["subtask"] = vi.subtask;
  return j;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());

  Dataset ds;
  ds.source_path = path.string();
  const std::filesystem::path base = path.parent_path();
  std::unordered_set<std::string> seen;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto malformed = [&](const std::string& why) {
      return Error(ErrorCode::MalformedRecord, "line " + std::to_string(lineno) + ": " + why);
    };

    nlohmann::json rec = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (rec.is_discarded() || !rec.is_object()) throw malformed("not a JSON object");

    VisualInstruction vi;
    try {
      vi.id = rec.at("id").get<std::string>();
      vi.image_path = rec.at("image_path").get<std::string>();
      vi.prompt = rec.at("prompt").get<std::string>();
      vi.ground_truth = rec.at("ground_truth").get<std::vector<std::string>>();
      const auto task = parse_task(rec.at("task").get<std::string>());
      if (!task) throw malformed("unknown task " + rec.at("task").dump());
      vi.task = *task;
      vi.capability = capability_of(vi.task);
      if (rec.contains("capability") && !rec["capability"].is_null()) {
        const auto cap = parse_capability(rec["capability"].get<std::string>());
        if (!cap) throw malformed("unknown capability " + rec["capability"].dump());
        vi.capability = *cap;
      }
      vi.subtask = rec.value("subtask", std::string(to_string(vi.task)));
    } catch (const nlohmann::json::exception& e) {
      throw malformed(e.what());
    }

    if (!seen.insert(vi.id).second) throw Error(ErrorCode::DuplicateId, vi.id);

    try {
      vi.image = read_image(base / vi.image_path);
    } catch (const Error& e) {
      throw Error(ErrorCode::UndecodableImage, vi.id + " (" + e.what() + ")");
    }

    const auto violations = validate_instruction(vi);
    if (!violations.empty()) {
      std::string why = "invariant violated:";
      for (auto v : violations) why += " " + std::string(to_string(v));
      throw malformed(why);
    }
    ds.items.push_back(std::move(vi));
  }
  return ds;
}

}  // namespace avikit
