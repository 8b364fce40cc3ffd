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

#include "avikit/attack/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "avikit/core/error.hpp"
#include "avikit/core/rng.hpp"
#include "avikit/scoring/metrics.hpp"

namespace avikit {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string canonical(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// UTF-8 code points of a string, each as its byte sequence.
std::vector<std::string> codepoints(std::string_view s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i + 1;
    while (j < s.size() && (static_cast<unsigned char>(s[j]) & 0xC0) == 0x80) ++j;
    out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string concat(const std::vector<std::string>& cps) {
  std::string out;
  for (const auto& c : cps) out += c;
  return out;
}

// Restricted Damerau-Levenshtein distance over code points.
std::size_t edit_distance(std::string_view a, std::string_view b) {
  const auto x = codepoints(a), y = codepoints(b);
  const std::size_t n = x.size(), m = y.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t cost = x[i - 1] == y[j - 1] ? 0 : 1;
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
      if (i > 1 && j > 1 && x[i - 1] == y[j - 2] && x[i - 2] == y[j - 1]) {
        d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
      }
    }
  }
  return d[n][m];
}

struct SplitWord {
  std::string lead, core, trail;
};

SplitWord split_word(std::string_view token) {
  const std::string_view core = word_core(token);
  const std::size_t start = static_cast<std::size_t>(core.data() - token.data());
  return {std::string(token.substr(0, start)), std::string(core), std::string(token.substr(start + core.size()))};
}

Tokens without(const Tokens& t, std::size_t i) {
  Tokens out = t;
  out.words.erase(out.words.begin() + static_cast<long>(i));
  // Drop the gap before the word; for the first word, the one after it.
  out.gaps.erase(out.gaps.begin() + static_cast<long>(i == 0 ? 1 : i));
  return out;
}

Tokens with_word(const Tokens& t, std::size_t i, std::string word) {
  Tokens out = t;
  out.words[i] = std::move(word);
  return out;
}

// Cached Gamma for one attack run.
class Gamma {
 public:
  explicit Gamma(SegmentScorer& scorer) : scorer_(scorer) {}

  double operator()(const std::string& segment) { return sum(scores(segment)); }
  double operator()(const Tokens& t) { return (*this)(t.join()); }

  const std::vector<double>& scores(const std::string& segment) {
    auto it = cache_.find(segment);
    if (it == cache_.end()) {
      ++evaluations_;
      it = cache_.emplace(segment, scorer_.scores(segment)).first;
    }
    return it->second;
  }

  std::size_t evaluations() const noexcept { return evaluations_; }

  static double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

 private:
  SegmentScorer& scorer_;
  std::unordered_map<std::string, std::vector<double>> cache_;
  std::size_t evaluations_ = 0;
};

bool protected_index(const Tokens& t, std::size_t i, const PerturbationConstraints& c) {
  return c.protect_last_word && i + 1 == t.size();
}

bool long_enough(std::string_view token, const PerturbationConstraints& c) {
  return codepoint_count(word_core(token)) >= c.min_word_len;
}

char random_letter(Rng& rng) { return static_cast<char>('a' + rng.below(26)); }

// Visually confusable Cyrillic/Latin look-alikes.
const std::map<std::string, std::string>& homoglyphs() {
  static const std::map<std::string, std::string> table = {
      {"a", "а"}, {"c", "с"}, {"e", "е"}, {"i", "і"}, {"j", "ј"}, {"o", "о"},
      {"p", "р"}, {"s", "ѕ"}, {"x", "х"}, {"y", "у"}, {"A", "А"}, {"B", "В"},
      {"C", "С"}, {"E", "Е"}, {"H", "Н"}, {"K", "К"}, {"M", "М"}, {"O", "О"},
      {"P", "Р"}, {"T", "Т"}, {"X", "Х"},
  };
  return table;
}

enum class Edit { Insert, Delete, Swap, Substitute, Homoglyph };

// One edit of `core` at code point `pos`; nullopt when it does not apply.
std::optional<std::string> edit_core(const std::vector<std::string>& cps, Edit op, std::size_t pos, Rng& rng) {
  std::vector<std::string> out = cps;
  switch (op) {
    case Edit::Insert:
      if (pos > out.size()) return std::nullopt;
      out.insert(out.begin() + static_cast<long>(pos), std::string(1, random_letter(rng)));
      break;
    case Edit::Delete:
      if (pos >= out.size()) return std::nullopt;
      out.erase(out.begin() + static_cast<long>(pos));
      break;
    case Edit::Swap:
      if (pos + 1 >= out.size() || out[pos] == out[pos + 1]) return std::nullopt;
      std::swap(out[pos], out[pos + 1]);
      break;
    case Edit::Substitute: {
      if (pos >= out.size()) return std::nullopt;
      std::string c(1, random_letter(rng));
      if (c == out[pos]) c[0] = static_cast<char>('a' + (c[0] - 'a' + 1) % 26);
      out[pos] = c;
      break;
    }
    case Edit::Homoglyph: {
      if (pos >= out.size()) return std::nullopt;
      const auto it = homoglyphs().find(out[pos]);
      if (it == homoglyphs().end()) return std::nullopt;
      out[pos] = it->second;
      break;
    }
  }
  return concat(out);
}

std::vector<std::string> char_candidates(TextMethod method, std::string_view token, Rng& rng) {
  const SplitWord w = split_word(token);
  const auto cps = codepoints(w.core);
  const std::size_t n = cps.size();
  std::vector<std::string> cores;
  const auto add = [&](std::optional<std::string> c) {
    if (c && *c != w.core && std::find(cores.begin(), cores.end(), *c) == cores.end()) cores.push_back(*c);
  };
  switch (method) {
    case TextMethod::TextBugger:
      for (int k = 0; k < 2; ++k) {
        add(edit_core(cps, Edit::Insert, 1 + rng.below(n - 1), rng));
        add(edit_core(cps, Edit::Delete, rng.below(n), rng));
        add(edit_core(cps, Edit::Swap, rng.below(n - 1), rng));
      }
      for (std::size_t p = 0, found = 0; p < n && found < 2; ++p) {
        const std::size_t q = (p + rng.below(n)) % n;
        if (homoglyphs().count(cps[q])) {
          add(edit_core(cps, Edit::Homoglyph, q, rng));
          ++found;
        }
      }
      break;
    case TextMethod::DeepWordBug:
      for (int k = 0; k < 4; ++k) {
        static constexpr Edit kOps[] = {Edit::Swap, Edit::Substitute, Edit::Delete, Edit::Insert};
        const Edit op = kOps[rng.below(4)];
        add(edit_core(cps, op, rng.below(op == Edit::Insert ? n + 1 : n), rng));
      }
      break;
    case TextMethod::Pruthi: {
      // Internal characters only: the first and last stay in place.
      for (std::size_t p = 1; p + 1 < n; ++p) add(edit_core(cps, Edit::Delete, p, rng));
      for (std::size_t p = 1; p + 2 < n; ++p) add(edit_core(cps, Edit::Swap, p, rng));
      for (std::size_t p = 1; p < n; ++p) add(edit_core(cps, Edit::Insert, p, rng));
      constexpr std::size_t kCap = 24;
      if (cores.size() > kCap) {
        for (std::size_t i = 0; i < kCap; ++i) std::swap(cores[i], cores[i + rng.below(cores.size() - i)]);
        cores.resize(kCap);
      }
      break;
    }
    default:
      break;
  }
  std::vector<std::string> out;
  for (const auto& c : cores) out.push_back(w.lead + c + w.trail);
  return out;
}

const std::vector<std::string>& stress_distractors() {
  static const std::vector<std::string> list = {
      "and true is true",
      "and false is not true",
      "and true is true and true is true and true is true and true is true and true is true",
  };
  return list;
}

const std::vector<std::string>& checklist_tokens() {
  static const std::vector<std::string> list = {
      "LGOjh1ewOi", "MQnugHcaoy", "SFuCQCH2l5", "ZRSZ6sLyBA", "jf0S9hMBIz", "Q47Jmd4lMV", "9Q3S1F94fE",
      "5yWbBXztUY", "is77sOXAu8", "AMsRIKZniY", "w52rwgo0Av", "6a4Yn3RGVc", "xikCjkU1bS", "d6ZQ3u0GBQ",
      "bhrRSokrfa", "IhuBIhoPGc", "ofw9fEkN5R", "Kw6nrs57gH", "SvAp8RlOFn", "vTAjHynoIG",
  };
  return list;
}

struct Run {
  Gamma gamma;
  Tokens tokens;
  double current;
  std::vector<double> trace;

  Run(SegmentScorer& scorer, std::string_view segment)
      : gamma(scorer), tokens(Tokens::split(segment)), current(gamma(std::string(segment))), trace{current} {}

  void accept(Tokens next, double g) {
    tokens = std::move(next);
    current = g;
    trace.push_back(g);
  }
};

// Best substitute for word i (lowest Gamma, first wins ties); nullopt if none.
std::optional<std::pair<std::string, double>> best_substitute(Run& run, std::size_t i,
                                                              const std::vector<std::string>& candidates) {
  std::optional<std::pair<std::string, double>> best;
  for (const auto& c : candidates) {
    const double g = run.gamma(with_word(run.tokens, i, c));
    if (!best || g < best->second) best = {c, g};
  }
  return best;
}

void char_attack(TextMethod method, Run& run, const TextAttackOptions& opt, Rng& rng, SegmentScorer& scorer) {
  const auto order = word_importance(run.tokens.join(), scorer, opt.constraints);
  std::size_t perturbed = 0;
  for (std::size_t i : order) {
    if (perturbed >= opt.constraints.max_perturbed_words || run.current == 0.0) break;
    if (!long_enough(run.tokens.words[i], opt.constraints)) continue;
    const auto best = best_substitute(run, i, char_candidates(method, run.tokens.words[i], rng));
    if (best && best->second < run.current) {
      run.accept(with_word(run.tokens, i, best->first), best->second);
      ++perturbed;
    }
  }
}

std::vector<std::string> capped(std::vector<std::string> v, std::size_t cap) {
  if (v.size() > cap) v.resize(cap);
  return v;
}

void word_attack(TextMethod method, Run& run, const TextAttackOptions& opt, SegmentScorer& scorer) {
  if (!opt.provider) throw Error(ErrorCode::ProviderMissing, std::string(to_string(method)) + " needs a substitution table");
  constexpr std::size_t kMaxCandidates = 50;
  const auto candidates_for = [&](std::size_t i) {
    return capped(method == TextMethod::BertAttack ? opt.provider->contextual(run.tokens, i)
                                                   : opt.provider->candidates(run.tokens.words[i]),
                  kMaxCandidates);
  };
  std::vector<std::size_t> order = word_importance(run.tokens.join(), scorer, opt.constraints);

  if (method == TextMethod::Pwws) {
    // Saliency (softmax over deletion drops) weighted by the best substitution drop.
    std::vector<double> saliency(run.tokens.size(), 0.0), gain(run.tokens.size(), 0.0);
    double z = 0.0;
    for (std::size_t i : order) {
      saliency[i] = std::exp(run.current - run.gamma(without(run.tokens, i)));
      z += saliency[i];
    }
    for (std::size_t i : order) {
      if (!long_enough(run.tokens.words[i], opt.constraints)) continue;
      if (const auto best = best_substitute(run, i, candidates_for(i))) gain[i] = run.current - best->second;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double sa = saliency[a] / z * gain[a], sb = saliency[b] / z * gain[b];
      return sa > sb || (sa == sb && a < b);
    });
  }

  for (std::size_t i : order) {
    if (run.current == 0.0) break;
    if (!long_enough(run.tokens.words[i], opt.constraints)) continue;
    const auto best = best_substitute(run, i, candidates_for(i));
    if (best && best->second < run.current) run.accept(with_word(run.tokens, i, best->first), best->second);
  }
}

void append_attack(Run& run, const std::vector<std::string>& pool, std::size_t tries, Rng& rng) {
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < std::min(tries, idx.size()); ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  const std::string base = run.tokens.join();
  std::optional<std::pair<std::string, double>> best;
  for (std::size_t i = 0; i < std::min(tries, idx.size()); ++i) {
    std::string cand = base + " " + pool[idx[i]];
    const double g = run.gamma(cand);
    if (!best || g < best->second) best = {std::move(cand), g};
  }
  // Not greedy: the worst variant is kept even when Gamma rises.
  if (best) run.accept(Tokens::split(best->first), best->second);
}

void input_reduction(Run& run, const PerturbationConstraints& c) {
  while (run.tokens.size() > 1) {
    // Least important word whose removal does not raise Gamma.
    std::optional<std::pair<std::size_t, double>> pick;
    for (std::size_t i = 0; i < run.tokens.size(); ++i) {
      if (protected_index(run.tokens, i, c)) continue;
      const double g = run.gamma(without(run.tokens, i));
      if (g > run.current) continue;
      if (!pick || g > pick->second) pick = {i, g};
    }
    if (!pick) break;
    run.accept(without(run.tokens, pick->first), pick->second);
  }
}

void semantic_attack(Run& run, const std::string& segment, const TextAttackOptions& opt) {
  if (!opt.semantic_variants) throw Error(ErrorCode::VariantFileMissing, "no semantic variants loaded");
  const auto it = opt.semantic_variants->find(segment);
  if (it == opt.semantic_variants->end()) throw Error(ErrorCode::UnknownSegmentKey, segment);
  std::optional<std::pair<std::string, double>> best;
  for (const auto& v : it->second) {
    const double g = run.gamma(v);
    if (!best || g < best->second) best = {v, g};
  }
  if (best && best->first != segment) run.accept(Tokens::split(best->first), best->second);
}

}  // namespace

AttackLevel level_of(TextMethod method) noexcept {
  switch (method) {
    case TextMethod::TextBugger:
    case TextMethod::DeepWordBug:
    case TextMethod::Pruthi:
      return AttackLevel::Character;
    case TextMethod::BertAttack:
    case TextMethod::TextFooler:
    case TextMethod::Pwws:
      return AttackLevel::Word;
    case TextMethod::StressTest:
    case TextMethod::CheckList:
    case TextMethod::InputReduction:
      return AttackLevel::Sentence;
    case TextMethod::Semantic:
      return AttackLevel::Semantic;
  }
  return AttackLevel::Semantic;
}

std::string_view to_string(TextMethod method) noexcept {
  switch (method) {
    case TextMethod::TextBugger: return "TextBugger";
    case TextMethod::DeepWordBug: return "DeepWordBug";
    case TextMethod::Pruthi: return "Pruthi";
    case TextMethod::BertAttack: return "BertAttack";
    case TextMethod::TextFooler: return "TextFooler";
    case TextMethod::Pwws: return "Pwws";
    case TextMethod::StressTest: return "StressTest";
    case TextMethod::CheckList: return "CheckList";
    case TextMethod::InputReduction: return "InputReduction";
    case TextMethod::Semantic: return "Semantic";
  }
  return "";
}

std::string_view to_string(AttackLevel level) noexcept {
  switch (level) {
    case AttackLevel::Character: return "character";
    case AttackLevel::Word: return "word";
    case AttackLevel::Sentence: return "sentence";
    case AttackLevel::Semantic: return "semantic";
  }
  return "";
}

std::optional<TextMethod> parse_text_method(std::string_view name) {
  const std::string key = canonical(name);
  for (TextMethod m : kAllTextMethods) {
    if (canonical(to_string(m)) == key) return m;
  }
  return std::nullopt;
}

Tokens Tokens::split(std::string_view text) {
  Tokens t;
  std::size_t i = 0;
  std::string gap;
  while (i < text.size()) {
    if (is_space(text[i])) {
      gap.push_back(text[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    t.gaps.push_back(std::move(gap));
    gap.clear();
    t.words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  t.gaps.push_back(std::move(gap));
  return t;
}

std::string Tokens::join() const {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) out += gaps[i] + words[i];
  if (!gaps.empty()) out += gaps.back();
  return out;
}

std::string_view word_core(std::string_view token) noexcept {
  std::size_t a = 0, b = token.size();
  while (a < b && is_punct(token[a])) ++a;
  while (b > a && is_punct(token[b - 1])) --b;
  return token.substr(a, b - a);
}

std::size_t codepoint_count(std::string_view s) noexcept {
  std::size_t n = 0;
  for (char c : s) n += (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  return n;
}

std::string SharedSegment::prompt(const Carrier& c, std::string_view segment) const {
  return c.prefix + std::string(segment) + c.suffix;
}

SharedSegment extract_shared_segment(std::span<const std::string> prompts, std::span<const std::string> ids) {
  if (prompts.size() < 2) throw Error(ErrorCode::NoSharedSegment, "need at least two prompts");
  // Byte offsets of each whole-token run of `text` inside `s`.
  const auto find_run = [](const std::string& s, const std::string& text) -> std::optional<std::size_t> {
    for (std::size_t pos = s.find(text); pos != std::string::npos; pos = s.find(text, pos + 1)) {
      const bool left = pos == 0 || is_space(s[pos - 1]);
      const std::size_t end = pos + text.size();
      const bool right = end == s.size() || is_space(s[end]);
      if (left && right) return pos;
    }
    return std::nullopt;
  };

  const std::string& first = prompts[0];
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // token byte ranges in the first prompt
  for (std::size_t i = 0; i < first.size();) {
    if (is_space(first[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < first.size() && !is_space(first[j])) ++j;
    spans.emplace_back(i, j);
    i = j;
  }

  for (std::size_t len = spans.size(); len >= 3; --len) {
    for (std::size_t start = 0; start + len <= spans.size(); ++start) {
      const std::string text = first.substr(spans[start].first, spans[start + len - 1].second - spans[start].first);
      SharedSegment seg;
      seg.text = text;
      bool everywhere = true;
      for (std::size_t p = 0; p < prompts.size() && everywhere; ++p) {
        const auto pos = p == 0 ? std::optional<std::size_t>(spans[start].first) : find_run(prompts[p], text);
        if (!pos) {
          everywhere = false;
          break;
        }
        seg.carriers.push_back({p < ids.size() ? ids[p] : std::to_string(p), prompts[p].substr(0, *pos),
                                prompts[p].substr(*pos + text.size())});
      }
      if (everywhere) return seg;
    }
  }
  throw Error(ErrorCode::NoSharedSegment, "no common run of three or more tokens");
}

OracleSegmentScorer::OracleSegmentScorer(OracleHandle& oracle, std::vector<const VisualInstruction*> items,
                                         SharedSegment segment, ScoringOptions scoring)
    : oracle_(oracle), items_(std::move(items)), segment_(std::move(segment)), scoring_(scoring) {
  if (items_.size() != segment_.carriers.size()) {
    throw Error(ErrorCode::ShapeMismatch, "segment carriers do not match the items");
  }
  images_.reserve(items_.size());
  for (const auto* vi : items_) images_.emplace_back(vi->image);
}

std::vector<double> OracleSegmentScorer::scores(std::string_view segment) {
  std::vector<double> out;
  out.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const std::string prompt = segment_.prompt(segment_.carriers[i], segment);
    const std::string response = oracle_.query(images_[i], prompt);
    out.push_back(score_response(items_[i]->task, response, items_[i]->ground_truth, scoring_));
  }
  return out;
}

std::vector<std::string> OracleSegmentScorer::ids() const {
  std::vector<std::string> out;
  for (const auto* vi : items_) out.push_back(vi->id);
  return out;
}

SubstitutionProvider SubstitutionProvider::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ProviderMissing, path.string());
  SubstitutionProvider p;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) {
      if (!f.empty()) fields.push_back(f);
    }
    if (fields.size() < 2) continue;
    std::string word = fields[0];
    fields.erase(fields.begin());
    p.add(std::move(word), std::move(fields));
  }
  return p;
}

void SubstitutionProvider::add(std::string word, std::vector<std::string> candidates) {
  auto& list = table_[lower(word)];
  for (auto& c : candidates) {
    if (lower(c) != lower(word) && std::find(list.begin(), list.end(), c) == list.end()) list.push_back(std::move(c));
  }
}

std::vector<std::string> SubstitutionProvider::candidates(std::string_view token) const {
  const SplitWord w = split_word(token);
  const auto it = table_.find(lower(w.core));
  if (it == table_.end()) return {};
  const bool capital = !w.core.empty() && std::isupper(static_cast<unsigned char>(w.core[0]));
  std::vector<std::string> out;
  for (std::string c : it->second) {
    if (capital && !c.empty()) c[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(c[0])));
    std::string full = w.lead + c + w.trail;
    if (full != token) out.push_back(std::move(full));
  }
  return out;
}

std::vector<std::string> SubstitutionProvider::contextual(const Tokens& context, std::size_t index) const {
  return candidates(context.words.at(index));
}

std::vector<std::size_t> word_importance(std::string_view segment, SegmentScorer& scorer,
                                         const PerturbationConstraints& constraints) {
  Gamma gamma(scorer);
  const Tokens t = Tokens::split(segment);
  const double base = gamma(t);
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (protected_index(t, i, constraints)) continue;
    ranked.emplace_back(base - gamma(without(t, i)), i);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::size_t> out;
  for (const auto& r : ranked) out.push_back(r.second);
  return out;
}

TextAttackResult run_text_attack(TextMethod method, std::string_view segment, SegmentScorer& scorer,
                                 const TextAttackOptions& options) {
  Run run(scorer, segment);
  Rng rng(hash_combine(options.seed, static_cast<std::uint64_t>(method)));
  switch (level_of(method)) {
    case AttackLevel::Character:
      char_attack(method, run, options, rng, scorer);
      break;
    case AttackLevel::Word:
      word_attack(method, run, options, scorer);
      break;
    case AttackLevel::Sentence:
      if (method == TextMethod::StressTest) {
        append_attack(run, stress_distractors(), stress_distractors().size(), rng);
      } else if (method == TextMethod::CheckList) {
        append_attack(run, checklist_tokens(), 5, rng);
      } else {
        input_reduction(run, options.constraints);
      }
      break;
    case AttackLevel::Semantic:
      semantic_attack(run, std::string(segment), options);
      break;
  }

  TextAttackResult r;
  r.method = method;
  r.original_segment = std::string(segment);
  r.attacked_segment = run.tokens.join();
  r.ids = scorer.ids();
  r.scores_before = run.gamma.scores(r.original_segment);
  r.scores_after = run.gamma.scores(r.attacked_segment);
  r.gamma_before = Gamma::sum(r.scores_before);
  r.gamma_after = Gamma::sum(r.scores_after);
  std::vector<ScorePair> pairs;
  for (std::size_t i = 0; i < r.scores_before.size(); ++i) pairs.push_back({r.scores_before[i], r.scores_after[i]});
  if (std::any_of(pairs.begin(), pairs.end(), [](const ScorePair& p) { return p.before > 0; })) {
    r.asdr = asdr(pairs).value;
  }
  r.trace = std::move(run.trace);
  r.evaluations = run.gamma.evaluations();
  return r;
}

std::vector<std::string> check_text_constraints(std::string_view original, std::string_view attacked,
                                                AttackLevel level, const PerturbationConstraints& c) {
  std::vector<std::string> v;
  const Tokens a = Tokens::split(original), b = Tokens::split(attacked);
  const std::size_t n = a.size();

  if (level == AttackLevel::Character || level == AttackLevel::Word) {
    if (b.size() != n) {
      v.push_back("word count changed from " + std::to_string(n) + " to " + std::to_string(b.size()));
      return v;
    }
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (a.words[i] == b.words[i]) continue;
      ++changed;
      const std::string where = "word " + std::to_string(i) + " '" + a.words[i] + "'";
      if (c.protect_last_word && i + 1 == n) v.push_back(where + ": last word changed");
      if (codepoint_count(word_core(a.words[i])) < c.min_word_len) v.push_back(where + ": shorter than minimum");
      if (level == AttackLevel::Character && c.no_repeat_word && edit_distance(a.words[i], b.words[i]) != 1) {
        v.push_back(where + ": more than one character edit");
      }
    }
    if (level == AttackLevel::Character && changed > c.max_perturbed_words) {
      v.push_back(std::to_string(changed) + " words perturbed");
    }
    return v;
  }

  if (level == AttackLevel::Sentence) {
    const std::string orig(original);
    if (attacked == orig) return v;
    if (attacked.substr(0, orig.size()) == orig && attacked.size() > orig.size() && is_space(attacked[orig.size()])) {
      return v;  // distractor appended, original untouched
    }
    // Otherwise a deletion: b must be a subsequence of a keeping the last word.
    std::size_t j = 0;
    for (std::size_t i = 0; i < n && j < b.size(); ++i) {
      if (a.words[i] == b.words[j]) ++j;
    }
    if (j != b.size()) v.push_back("sentence edit is neither an append nor a deletion");
    if (c.protect_last_word && n > 0 && (b.size() == 0 || b.words.back() != a.words.back())) {
      v.push_back("last word removed");
    }
  }
  return v;
}

std::map<std::string, std::vector<std::string>> load_variants(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::VariantFileMissing, path.string());
  const nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedRecord, path.string() + ": not a JSON object");
  std::map<std::string, std::vector<std::string>> out;
  try {
    for (const auto& [key, value] : j.items()) out[key] = value.get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": " + e.what());
  }
  return out;
}

std::vector<std::size_t> select_top_prompts(std::span<const std::string> variants, SegmentScorer& scorer,
                                            std::size_t k, std::size_t expected) {
  if (variants.size() != expected) {
    throw Error(ErrorCode::VariantCountMismatch,
                std::to_string(variants.size()) + " variants, expected " + std::to_string(expected));
  }
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const auto s = scorer.scores(variants[i]);
    ranked.emplace_back(std::accumulate(s.begin(), s.end(), 0.0), i);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) out.push_back(ranked[i].second);
  return out;
}

std::vector<TextGroup> group_by_subtask(const Dataset& dataset) {
  std::vector<TextGroup> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& vi : dataset.items) {
    if (vi.capability == CapabilityKind::Commonsense) continue;
    const std::string key = vi.subtask.empty() ? std::string(to_string(vi.task)) : vi.subtask;
    auto [it, fresh] = index.emplace(key, groups.size());
    if (fresh) groups.push_back({key, {}});
    groups[it->second].items.push_back(&vi);
  }
  return groups;
}

void run_text_attack_suite(const Dataset& dataset, OracleHandle& oracle, std::span<const TextMethod> methods,
                           const TextSuiteConfig& config, const std::function<void(const TextAttackResult&)>& sink) {
  if (methods.empty()) return;
  if (!config.paraphrases) throw Error(ErrorCode::VariantFileMissing, "no paraphrase variants loaded");
  for (const TextGroup& group : group_by_subtask(dataset)) {
    std::vector<std::string> prompts, ids;
    for (const auto* vi : group.items) {
      prompts.push_back(vi->prompt);
      ids.push_back(vi->id);
    }
    SharedSegment segment = extract_shared_segment(prompts, ids);
    auto it = config.paraphrases->find(segment.text);
    if (it == config.paraphrases->end()) it = config.paraphrases->find(group.name);
    if (it == config.paraphrases->end()) throw Error(ErrorCode::UnknownSegmentKey, group.name + ": " + segment.text);
    if (it->second.size() != 9) {
      throw Error(ErrorCode::VariantCountMismatch,
                  group.name + ": " + std::to_string(it->second.size()) + " paraphrases, expected 9");
    }
    std::vector<std::string> variants{segment.text};
    variants.insert(variants.end(), it->second.begin(), it->second.end());

    OracleSegmentScorer scorer(oracle, group.items, segment, config.scoring);
    const auto top = select_top_prompts(variants, scorer, config.top_k);
    for (std::size_t rank = 0; rank < top.size(); ++rank) {
      for (TextMethod method : methods) {
        TextAttackOptions opt = config.attack;
        opt.seed = hash_combine(hash_combine(config.attack.seed, fnv1a64(group.name)), rank);
        TextAttackResult r = run_text_attack(method, variants[top[rank]], scorer, opt);
        r.group = group.name;
        r.prompt_rank = rank;
        sink(r);
      }
    }
  }
}

}  // namespace avikit
