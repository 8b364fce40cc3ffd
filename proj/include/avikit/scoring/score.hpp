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

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "avikit/core/instruction.hpp"

namespace avikit {

/// Lowercases ASCII, turns ASCII punctuation into spaces and collapses runs
/// of whitespace. Non-ASCII bytes pass through unchanged.
std::string normalize_text(std::string_view text);

/// Whitespace tokens of normalize_text(text).
std::vector<std::string> normalized_tokens(std::string_view text);

/// True when `needle` occurs as a contiguous run inside `haystack`.
/// An empty needle never matches.
bool contains_tokens(const std::vector<std::string>& haystack,
                     const std::vector<std::string>& needle);

/// Document frequencies over the reference sets of one evaluation run.
/// Scores are comparable only between items scored against the same corpus.
class CiderCorpus {
 public:
  CiderCorpus() = default;
  explicit CiderCorpus(const std::vector<std::vector<std::string>>& reference_sets);

  /// CIDEr-D of one candidate against its references (n = 1..4, sigma 6,
  /// clipped tf-idf, scaled by 10). Throws Error(EmptyReference).
  double score(std::string_view candidate, const std::vector<std::string>& references) const;

  std::size_t documents() const noexcept { return documents_; }

 private:
  std::unordered_map<std::string, double> df_;
  std::size_t documents_ = 0;
};

/// CIDEr-D without a run corpus: each reference acts as its own document.
double cider(std::string_view candidate, const std::vector<std::string>& references);

struct ScoringOptions {
  /// Accuracy tasks require normalized equality instead of containment.
  bool exact_match = false;
  /// Corpus for captioning; when null, cider() is used.
  const CiderCorpus* corpus = nullptr;
};

double accuracy(std::string_view response, const std::vector<std::string>& ground_truth,
                bool exact_match = false);

/// Fraction of ground-truth words present among the response tokens.
double word_accuracy(std::string_view response, std::string_view gt_words);

/// Entity-level F1. Predicted entities are the response split on newlines,
/// ';' and ','; a prediction matches a ground-truth entity that occurs
/// inside it (one-to-one).
double entity_f1(std::string_view response, const std::vector<std::string>& ground_truth);

/// Reciprocal rank: 1/rank, or 0 when absent (rank 0).
double mrr(std::size_t rank) noexcept;

/// Rank of ground_truth[0] among all listed options, ordered by where each
/// option first appears in the response. 0 when the correct option is absent.
/// Throws Error(GroundTruthShapeMismatch) with fewer than two options.
std::size_t visdial_rank(std::string_view response, const std::vector<std::string>& options);

/// Task score of a response; 0 means the attack objective is met.
double score_response(TaskKind task, std::string_view response,
                      const std::vector<std::string>& ground_truth,
                      const ScoringOptions& options = {});

/// Builds the captioning corpus from every captioning item of a dataset.
CiderCorpus caption_corpus(const Dataset& dataset);

}  // namespace avikit
