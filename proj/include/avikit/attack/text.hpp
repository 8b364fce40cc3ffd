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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "avikit/core/instruction.hpp"
#include "avikit/oracle/oracle.hpp"
#include "avikit/scoring/score.hpp"

namespace avikit {

enum class TextMethod {
  TextBugger,
  DeepWordBug,
  Pruthi,
  BertAttack,
  TextFooler,
  Pwws,
  StressTest,
  CheckList,
  InputReduction,
  Semantic,
};

enum class AttackLevel { Character, Word, Sentence, Semantic };

inline constexpr std::array<TextMethod, 10> kAllTextMethods = {
    TextMethod::TextBugger, TextMethod::DeepWordBug, TextMethod::Pruthi,    TextMethod::BertAttack,
    TextMethod::TextFooler, TextMethod::Pwws,        TextMethod::StressTest, TextMethod::CheckList,
    TextMethod::InputReduction, TextMethod::Semantic,
};

AttackLevel level_of(TextMethod method) noexcept;
std::string_view to_string(TextMethod method) noexcept;
std::string_view to_string(AttackLevel level) noexcept;
std::optional<TextMethod> parse_text_method(std::string_view name);

struct PerturbationConstraints {
  std::size_t min_word_len = 4;
  /// Character-level methods only.
  std::size_t max_perturbed_words = 2;
  bool protect_last_word = true;
  bool no_repeat_word = true;
};

/// Whitespace tokens with the exact whitespace between them, so joining
/// reproduces the input byte for byte.
struct Tokens {
  std::vector<std::string> words;
  /// gaps[i] precedes words[i]; gaps.back() trails the last word.
  std::vector<std::string> gaps;

  static Tokens split(std::string_view text);
  std::string join() const;
  std::size_t size() const noexcept { return words.size(); }
};

/// Word with leading and trailing ASCII punctuation removed; length limits
/// are measured on it, in code points.
std::string_view word_core(std::string_view token) noexcept;
std::size_t codepoint_count(std::string_view s) noexcept;

struct SharedSegment {
  struct Carrier {
    std::string id;
    std::string prefix;
    std::string suffix;
  };
  std::string text;
  std::vector<Carrier> carriers;

  std::string prompt(const Carrier& c, std::string_view segment) const;
};

/// Longest run of whole tokens occurring verbatim in every prompt (ties go to
/// the earliest run in the first prompt). Needs >= 2 prompts and >= 3 tokens.
/// Throws Error(NoSharedSegment).
SharedSegment extract_shared_segment(std::span<const std::string> prompts, std::span<const std::string> ids = {});

/// Per-instruction scores of the group's prompts with `segment` spliced in.
class SegmentScorer {
 public:
  virtual ~SegmentScorer() = default;
  virtual std::vector<double> scores(std::string_view segment) = 0;
  virtual std::vector<std::string> ids() const = 0;
};

/// Queries the model through each carrier. Responses are cached by the oracle.
class OracleSegmentScorer : public SegmentScorer {
 public:
  OracleSegmentScorer(OracleHandle& oracle, std::vector<const VisualInstruction*> items, SharedSegment segment,
                      ScoringOptions scoring = {});

  std::vector<double> scores(std::string_view segment) override;
  std::vector<std::string> ids() const override;

 private:
  OracleHandle& oracle_;
  std::vector<const VisualInstruction*> items_;
  std::vector<OracleImage> images_;
  SharedSegment segment_;
  ScoringOptions scoring_;
};

/// Scorer from a plain function, for toy models.
class FunctionScorer : public SegmentScorer {
 public:
  FunctionScorer(std::vector<std::string> ids, std::function<std::vector<double>(std::string_view)> fn)
      : ids_(std::move(ids)), fn_(std::move(fn)) {}
  std::vector<double> scores(std::string_view segment) override { return fn_(segment); }
  std::vector<std::string> ids() const override { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::function<std::vector<double>(std::string_view)> fn_;
};

/// Word -> ranked substitutes, read from a TSV file (word, then candidates,
/// tab separated). Keys are matched case-insensitively on the word core.
class SubstitutionProvider {
 public:
  SubstitutionProvider() = default;
  /// Throws Error(ProviderMissing) when the file cannot be read.
  static SubstitutionProvider load(const std::filesystem::path& path);

  void add(std::string word, std::vector<std::string> candidates);
  /// Candidates for a token, with its capitalization and punctuation carried
  /// over; never contains the token itself.
  std::vector<std::string> candidates(std::string_view token) const;
  /// Contextual mode; this provider has no language model, so it answers
  /// from the static table.
  std::vector<std::string> contextual(const Tokens& context, std::size_t index) const;
  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::unordered_map<std::string, std::vector<std::string>> table_;
};

struct TextAttackResult {
  TextMethod method = TextMethod::TextBugger;
  std::string group;
  std::size_t prompt_rank = 0;
  std::string original_segment;
  std::string attacked_segment;
  std::vector<std::string> ids;
  std::vector<double> scores_before;
  std::vector<double> scores_after;
  double gamma_before = 0.0;
  double gamma_after = 0.0;
  /// Absent when every clean score is 0.
  std::optional<double> asdr;
  /// Gamma after each accepted step, starting with gamma_before.
  std::vector<double> trace;
  std::size_t evaluations = 0;
};

struct TextAttackOptions {
  PerturbationConstraints constraints;
  std::uint64_t seed = 0;
  /// Required by word-level methods.
  const SubstitutionProvider* provider = nullptr;
  /// Required by the semantic method: segment text -> rewritten variants.
  const std::map<std::string, std::vector<std::string>>* semantic_variants = nullptr;
};

/// Gamma(segment) - Gamma(segment without word i), highest first, ties by
/// index; the protected last word is not ranked.
std::vector<std::size_t> word_importance(std::string_view segment, SegmentScorer& scorer,
                                         const PerturbationConstraints& constraints = {});

/// Runs one method against one segment. Throws Error(ProviderMissing),
/// Error(VariantFileMissing) or Error(UnknownSegmentKey) when a resource is missing.
TextAttackResult run_text_attack(TextMethod method, std::string_view segment, SegmentScorer& scorer,
                                 const TextAttackOptions& options);

/// Post-hoc check of one (original, attacked) pair; returns human-readable violations.
std::vector<std::string> check_text_constraints(std::string_view original, std::string_view attacked,
                                                AttackLevel level, const PerturbationConstraints& constraints = {});

/// Reads a JSON object mapping segment keys to lists of strings.
/// Throws Error(VariantFileMissing) or Error(MalformedRecord).
std::map<std::string, std::vector<std::string>> load_variants(const std::filesystem::path& path);

/// Indices of the `k` variants with the highest clean Gamma, ties to the lower
/// index. Throws Error(VariantCountMismatch) unless there are `expected` variants.
std::vector<std::size_t> select_top_prompts(std::span<const std::string> variants, SegmentScorer& scorer,
                                            std::size_t k = 3, std::size_t expected = 10);

struct TextGroup {
  std::string name;
  std::vector<const VisualInstruction*> items;
};

/// Items grouped by subtask in first-appearance order. Commonsense items are
/// left out: their prompts share no attackable segment.
std::vector<TextGroup> group_by_subtask(const Dataset& dataset);

struct TextSuiteConfig {
  TextAttackOptions attack;
  std::size_t top_k = 3;
  /// Segment key (segment text or subtask name) -> 9 paraphrases.
  const std::map<std::string, std::vector<std::string>>* paraphrases = nullptr;
  ScoringOptions scoring;
};

/// For every group: shared segment, its 9 paraphrases, the top-k by clean
/// Gamma, then every method on each. Emits groups x top_k x methods results.
void run_text_attack_suite(const Dataset& dataset, OracleHandle& oracle, std::span<const TextMethod> methods,
                           const TextSuiteConfig& config, const std::function<void(const TextAttackResult&)>& sink);

}  // namespace avikit
