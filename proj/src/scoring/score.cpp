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

#include "avikit/scoring/score.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "avikit/core/error.hpp"

namespace avikit {
namespace {

constexpr int kMaxN = 4;
constexpr double kSigma = 6.0;

using NgramCounts = std::unordered_map<std::string, int>;

// n-gram keys join tokens with a space; order index = token count - 1.
NgramCounts precook(std::string_view text) {
  const auto words = normalized_tokens(text);
  NgramCounts counts;
  for (int k = 1; k <= kMaxN; ++k) {
    for (std::size_t i = 0; i + k <= words.size(); ++i) {
      std::string key = words[i];
      for (int j = 1; j < k; ++j) key += ' ' + words[i + j];
      ++counts[key];
    }
  }
  return counts;
}

int order_of(const std::string& ngram) {
  return static_cast<int>(std::count(ngram.begin(), ngram.end(), ' '));
}

struct TfIdfVector {
  std::array<std::unordered_map<std::string, double>, kMaxN> vec;
  std::array<double, kMaxN> norm{};
  double length = 0.0;
};

double clipped_similarity(const TfIdfVector& hyp, const TfIdfVector& ref, int n) {
  double val = 0.0;
  for (const auto& [ngram, weight] : hyp.vec[n]) {
    const auto it = ref.vec[n].find(ngram);
    if (it == ref.vec[n].end()) continue;
    val += std::min(weight, it->second) * it->second;
  }
  if (hyp.norm[n] != 0.0 && ref.norm[n] != 0.0) val /= hyp.norm[n] * ref.norm[n];
  return val;
}

std::vector<std::string> split_entities(std::string_view response) {
  std::vector<std::string> out;
  std::string cur;
  const auto flush = [&] {
    std::string n = normalize_text(cur);
    if (!n.empty()) out.push_back(std::move(n));
    cur.clear();
  };
  for (char c : response) {
    if (c == '\n' || c == ';' || c == ',') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

std::vector<std::string> split_space(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t j = s.find(' ', i);
    if (j == std::string::npos) {
      out.push_back(s.substr(i));
      break;
    }
    out.push_back(s.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

std::size_t first_occurrence(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return std::string::npos;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) return i;
  }
  return std::string::npos;
}

}  // namespace

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && (std::isspace(c) || std::ispunct(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  return out;
}

std::vector<std::string> normalized_tokens(std::string_view text) {
  const std::string n = normalize_text(text);
  if (n.empty()) return {};
  return split_space(n);
}

bool contains_tokens(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  return first_occurrence(haystack, needle) != std::string::npos;
}

CiderCorpus::CiderCorpus(const std::vector<std::vector<std::string>>& reference_sets)
    : documents_(reference_sets.size()) {
  for (const auto& refs : reference_sets) {
    std::unordered_set<std::string> seen;
    for (const auto& ref : refs) {
      for (const auto& [ngram, count] : precook(ref)) seen.insert(ngram);
    }
    for (const auto& ngram : seen) df_[ngram] += 1.0;
  }
}

double CiderCorpus::score(std::string_view candidate, const std::vector<std::string>& references) const {
  if (references.empty()) throw Error(ErrorCode::EmptyReference, "captioning item without references");
  // With no corpus every n-gram gets unit idf, i.e. plain clipped tf cosine.
  const double ref_len = documents_ > 0 ? std::log(static_cast<double>(documents_)) : 0.0;
  const auto to_vec = [&](const NgramCounts& counts) {
    TfIdfVector v;
    for (const auto& [ngram, tf] : counts) {
      const int n = order_of(ngram);
      double w = tf;
      if (documents_ > 0) {
        const auto it = df_.find(ngram);
        const double df = std::log(std::max(1.0, it == df_.end() ? 0.0 : it->second));
        w = tf * (ref_len - df);
      }
      v.vec[n][ngram] = w;
      v.norm[n] += w * w;
      // Matches the reference implementation, which measures length in bigrams.
      if (n == 1) v.length += tf;
    }
    for (double& x : v.norm) x = std::sqrt(x);
    return v;
  };

  const TfIdfVector hyp = to_vec(precook(candidate));
  std::array<double, kMaxN> total{};
  for (const auto& ref : references) {
    const TfIdfVector r = to_vec(precook(ref));
    const double delta = hyp.length - r.length;
    const double penalty = std::exp(-(delta * delta) / (2.0 * kSigma * kSigma));
    for (int n = 0; n < kMaxN; ++n) total[n] += clipped_similarity(hyp, r, n) * penalty;
  }
  double mean = 0.0;
  for (double t : total) mean += t;
  mean /= kMaxN;
  return mean / static_cast<double>(references.size()) * 10.0;
}

double cider(std::string_view candidate, const std::vector<std::string>& references) {
  return CiderCorpus().score(candidate, references);
}

double accuracy(std::string_view response, const std::vector<std::string>& ground_truth, bool exact_match) {
  if (exact_match) {
    const std::string r = normalize_text(response);
    for (const auto& g : ground_truth) {
      const std::string n = normalize_text(g);
      if (!n.empty() && n == r) return 1.0;
    }
    return 0.0;
  }
  const auto tokens = normalized_tokens(response);
  for (const auto& g : ground_truth) {
    if (contains_tokens(tokens, normalized_tokens(g))) return 1.0;
  }
  return 0.0;
}

double word_accuracy(std::string_view response, std::string_view gt_words) {
  const auto gt = normalized_tokens(gt_words);
  if (gt.empty()) return 0.0;
  const auto tokens = normalized_tokens(response);
  const std::unordered_set<std::string> present(tokens.begin(), tokens.end());
  std::size_t hit = 0;
  for (const auto& w : gt) hit += present.count(w);
  return static_cast<double>(hit) / static_cast<double>(gt.size());
}

double entity_f1(std::string_view response, const std::vector<std::string>& ground_truth) {
  std::vector<std::string> pred = split_entities(response);
  std::sort(pred.begin(), pred.end());
  pred.erase(std::unique(pred.begin(), pred.end()), pred.end());
  std::vector<std::string> gt;
  for (const auto& g : ground_truth) {
    std::string n = normalize_text(g);
    if (!n.empty() && std::find(gt.begin(), gt.end(), n) == gt.end()) gt.push_back(std::move(n));
  }
  if (pred.empty() || gt.empty()) return 0.0;

  std::vector<std::vector<std::string>> pred_tokens;
  for (const auto& p : pred) pred_tokens.push_back(split_space(p));
  std::vector<bool> used(pred.size(), false);
  std::size_t tp = 0;
  for (const auto& g : gt) {
    const auto gtok = split_space(g);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (!used[i] && contains_tokens(pred_tokens[i], gtok)) {
        used[i] = true;
        ++tp;
        break;
      }
    }
  }
  if (tp == 0) return 0.0;
  const double p = static_cast<double>(tp) / static_cast<double>(pred.size());
  const double r = static_cast<double>(tp) / static_cast<double>(gt.size());
  return 2.0 * p * r / (p + r);
}

double mrr(std::size_t rank) noexcept { return rank == 0 ? 0.0 : 1.0 / static_cast<double>(rank); }

std::size_t visdial_rank(std::string_view response, const std::vector<std::string>& options) {
  if (options.size() < 2) {
    throw Error(ErrorCode::GroundTruthShapeMismatch,
                "Visdial needs the correct answer followed by at least one option");
  }
  const auto tokens = normalized_tokens(response);
  const std::size_t correct = first_occurrence(tokens, normalized_tokens(options[0]));
  if (correct == std::string::npos) return 0;
  std::size_t rank = 1;
  for (std::size_t i = 1; i < options.size(); ++i) {
    if (first_occurrence(tokens, normalized_tokens(options[i])) < correct) ++rank;
  }
  return rank;
}

double score_response(TaskKind task, std::string_view response, const std::vector<std::string>& ground_truth,
                      const ScoringOptions& options) {
  if (ground_truth.empty()) throw Error(ErrorCode::GroundTruthShapeMismatch, "empty ground truth");
  switch (task) {
    case TaskKind::OCR: {
      double best = 0.0;
      for (const auto& g : ground_truth) best = std::max(best, word_accuracy(response, g));
      return best;
    }
    case TaskKind::KIE:
      return entity_f1(response, ground_truth);
    case TaskKind::ImageCaptioning:
      return options.corpus ? options.corpus->score(response, ground_truth) : cider(response, ground_truth);
    case TaskKind::Visdial:
      return mrr(visdial_rank(response, ground_truth));
    case TaskKind::ImageClassification:
    case TaskKind::ObjectCounting:
    case TaskKind::MultiClassIdentification:
    case TaskKind::VQA:
    case TaskKind::KGID:
    case TaskKind::ObjectHallucination:
      return accuracy(response, ground_truth, options.exact_match);
  }
  return 0.0;
}

CiderCorpus caption_corpus(const Dataset& dataset) {
  std::vector<std::vector<std::string>> sets;
  for (const auto& vi : dataset.items) {
    if (vi.task == TaskKind::ImageCaptioning) sets.push_back(vi.ground_truth);
  }
  return sets.empty() ? CiderCorpus() : CiderCorpus(sets);
}

}  // namespace avikit
