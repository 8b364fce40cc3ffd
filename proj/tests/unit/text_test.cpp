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

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "avikit/attack/text.hpp"
#include "avikit/core/error.hpp"
#include "avikit/core/rng.hpp"
#include "avikit/oracle/reference.hpp"
#include "synthetic.hpp"

namespace avikit {
namespace {

const std::string kSegment = "Choose the best answer from the following choices:";

bool has_word(std::string_view segment, std::string_view word) {
  for (const auto& w : Tokens::split(segment).words) {
    std::string core(word_core(w));
    std::transform(core.begin(), core.end(), core.begin(), [](unsigned char c) { return std::tolower(c); });
    if (core == word) return true;
  }
  return false;
}

// n instructions, each scoring fn(segment).
FunctionScorer uniform_scorer(std::size_t n, std::function<double(std::string_view)> fn) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("q" + std::to_string(i));
  return FunctionScorer(ids, [n, fn](std::string_view s) { return std::vector<double>(n, fn(s)); });
}

TEST(Tokens, SplitJoinRoundTrip) {
  for (const std::string& s : std::vector<std::string>{"", "a", "  two  words ", "tab\tsep\nline", kSegment}) {
    EXPECT_EQ(Tokens::split(s).join(), s);
  }
  EXPECT_EQ(Tokens::split(kSegment).size(), 8u);
  EXPECT_EQ(word_core("\"(choices:)\""), "choices");
  EXPECT_EQ(codepoint_count("сhoose"), 6u);
}

TEST(TextMethods, NamesAndLevels) {
  for (TextMethod m : kAllTextMethods) EXPECT_EQ(parse_text_method(to_string(m)), m);
  EXPECT_EQ(parse_text_method("input_reduction"), TextMethod::InputReduction);
  EXPECT_FALSE(parse_text_method("nope"));
  EXPECT_EQ(level_of(TextMethod::Pruthi), AttackLevel::Character);
  EXPECT_EQ(level_of(TextMethod::Pwws), AttackLevel::Word);
  EXPECT_EQ(level_of(TextMethod::CheckList), AttackLevel::Sentence);
  EXPECT_EQ(level_of(TextMethod::Semantic), AttackLevel::Semantic);
}

TEST(SharedSegment, VqaChoicePrompt) {
  const std::vector<std::string> prompts = {
      "What is on the table? " + kSegment + " (A) a cup (B) a pen",
      "Which animal is shown? " + kSegment + " A. cat B. dog C. owl",
      "How many people are there? " + kSegment + " 1) one 2) two",
  };
  const SharedSegment seg = extract_shared_segment(prompts, std::vector<std::string>{"a", "b", "c"});
  EXPECT_EQ(seg.text, kSegment);
  ASSERT_EQ(seg.carriers.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(seg.prompt(seg.carriers[i], seg.text), prompts[i]);
  EXPECT_EQ(seg.carriers[1].id, "b");
  EXPECT_EQ(seg.prompt(seg.carriers[0], "X"), "What is on the table? X (A) a cup (B) a pen");
}

TEST(SharedSegment, IdenticalAndDisjoint) {
  const std::vector<std::string> same = {"describe this image please", "describe this image please"};
  EXPECT_EQ(extract_shared_segment(same).text, same[0]);
  const std::vector<std::string> disjoint = {"alpha beta gamma", "delta epsilon zeta"};
  EXPECT_THROW(extract_shared_segment(disjoint), Error);
  const std::vector<std::string> short_run = {"red car here now", "red car there then"};
  try {
    extract_shared_segment(short_run);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoSharedSegment);
  }
  // Whole tokens only: "cats" does not contain the token "cat".
  const std::vector<std::string> partial = {"the big cat sat", "the big cats sat on the big cat sat"};
  EXPECT_EQ(extract_shared_segment(partial).text, "the big cat sat");
}

TEST(SharedSegment, TieGoesToEarliestRun) {
  const std::vector<std::string> prompts = {"a b c x d e f", "d e f y a b c"};
  EXPECT_EQ(extract_shared_segment(prompts).text, "a b c");
}

TEST(WordImportance, BestRankedFirst) {
  // Gamma counts occurrences of "best" over 4 instructions.
  auto scorer = uniform_scorer(4, [](std::string_view s) { return has_word(s, "best") ? 1.0 : 0.0; });
  const auto order = word_importance(kSegment, scorer);
  ASSERT_EQ(order.size(), 7u);  // last word protected
  EXPECT_EQ(order[0], 2u);
  // Remaining words tie at 0 and keep index order.
  EXPECT_EQ(std::vector<std::size_t>(order.begin() + 1, order.end()), (std::vector<std::size_t>{0, 1, 3, 4, 5, 6}));

  auto flat = uniform_scorer(2, [](std::string_view) { return 1.0; });
  EXPECT_EQ(word_importance("only protected", flat), std::vector<std::size_t>{0});
}

TEST(CharAttack, ExactMatchStopsAfterOneEdit) {
  for (TextMethod m : {TextMethod::TextBugger, TextMethod::DeepWordBug, TextMethod::Pruthi}) {
    auto scorer = uniform_scorer(3, [](std::string_view s) { return s == kSegment ? 1.0 : 0.0; });
    TextAttackOptions opt;
    opt.seed = 7;
    const auto r = run_text_attack(m, kSegment, scorer, opt);
    EXPECT_DOUBLE_EQ(r.gamma_before, 3.0) << to_string(m);
    EXPECT_DOUBLE_EQ(r.gamma_after, 0.0) << to_string(m);
    ASSERT_TRUE(r.asdr);
    EXPECT_DOUBLE_EQ(*r.asdr, 1.0);
    EXPECT_EQ(r.trace, (std::vector<double>{3.0, 0.0}));
    const Tokens a = Tokens::split(r.original_segment), b = Tokens::split(r.attacked_segment);
    ASSERT_EQ(a.size(), b.size());
    std::size_t changed = 0;
    for (std::size_t i = 0; i < a.size(); ++i) changed += a.words[i] != b.words[i];
    EXPECT_EQ(changed, 1u);
    EXPECT_TRUE(check_text_constraints(r.original_segment, r.attacked_segment, AttackLevel::Character).empty());
  }
}

TEST(CharAttack, ShortWordsAndLastWordUntouched) {
  // Any change lowers Gamma, so the attack edits as much as it is allowed to.
  const std::string seg = "the cat sat on a very large mat today";
  auto scorer = uniform_scorer(2, [&](std::string_view s) {
    const Tokens a = Tokens::split(seg), b = Tokens::split(s);
    double same = 0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) same += a.words[i] == b.words[i];
    return same;
  });
  for (TextMethod m : {TextMethod::TextBugger, TextMethod::DeepWordBug, TextMethod::Pruthi}) {
    TextAttackOptions opt;
    opt.seed = 3;
    const auto r = run_text_attack(m, seg, scorer, opt);
    const Tokens a = Tokens::split(seg), b = Tokens::split(r.attacked_segment);
    ASSERT_EQ(a.size(), b.size());
    std::size_t changed = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.words[i] == b.words[i]) continue;
      ++changed;
      EXPECT_GE(codepoint_count(word_core(a.words[i])), 4u) << a.words[i];
    }
    EXPECT_EQ(changed, 2u) << to_string(m);
    EXPECT_EQ(b.words.back(), "today");
  }
}

TEST(WordAttack, ChooseBecomesPick) {
  auto scorer = uniform_scorer(5, [](std::string_view s) { return has_word(s, "choose") ? 1.0 : 0.0; });
  SubstitutionProvider provider;
  provider.add("choose", {"pick"});
  TextAttackOptions opt;
  opt.provider = &provider;
  for (TextMethod m : {TextMethod::TextFooler, TextMethod::BertAttack, TextMethod::Pwws}) {
    const auto r = run_text_attack(m, kSegment, scorer, opt);
    EXPECT_EQ(r.attacked_segment, "Pick the best answer from the following choices:") << to_string(m);
    EXPECT_DOUBLE_EQ(r.gamma_after, 0.0);
    EXPECT_DOUBLE_EQ(*r.asdr, 1.0);
  }
}

TEST(WordAttack, NoCandidatesNoChange) {
  auto scorer = uniform_scorer(2, [](std::string_view s) { return has_word(s, "choose") ? 1.0 : 0.0; });
  SubstitutionProvider empty;
  TextAttackOptions opt;
  opt.provider = &empty;
  const auto r = run_text_attack(TextMethod::TextFooler, kSegment, scorer, opt);
  EXPECT_EQ(r.attacked_segment, kSegment);
  EXPECT_DOUBLE_EQ(*r.asdr, 0.0);

  opt.provider = nullptr;
  try {
    run_text_attack(TextMethod::Pwws, kSegment, scorer, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProviderMissing);
  }
}

TEST(SubstitutionProvider, LoadAndCase) {
  const auto p = SubstitutionProvider::load(AVIKIT_TEST_DATA "/synonyms.tsv");
  EXPECT_EQ(p.size(), 5u);
  EXPECT_EQ(p.candidates("Choose"), (std::vector<std::string>{"Pick", "Select"}));
  EXPECT_EQ(p.candidates("choices:"), (std::vector<std::string>{"options:"}));
  EXPECT_TRUE(p.candidates("zebra").empty());
  EXPECT_THROW(SubstitutionProvider::load("/nonexistent.tsv"), Error);
}

TEST(SentenceAttack, CheckListAppendsToken) {
  auto scorer = uniform_scorer(2, [](std::string_view s) { return 1.0 / (1.0 + s.size()); });
  TextAttackOptions opt;
  opt.seed = 11;
  const auto r = run_text_attack(TextMethod::CheckList, kSegment, scorer, opt);
  ASSERT_EQ(r.attacked_segment.size(), kSegment.size() + 11);
  EXPECT_EQ(r.attacked_segment.substr(0, kSegment.size() + 1), kSegment + " ");
  const std::string token = r.attacked_segment.substr(kSegment.size() + 1);
  EXPECT_TRUE(std::all_of(token.begin(), token.end(), [](unsigned char c) { return std::isalnum(c); }));
  EXPECT_TRUE(check_text_constraints(kSegment, r.attacked_segment, AttackLevel::Sentence).empty());

  const auto s = run_text_attack(TextMethod::StressTest, kSegment, scorer, opt);
  // Longest distractor gives the lowest Gamma under this scorer.
  EXPECT_EQ(s.attacked_segment.rfind(kSegment + " and true is true and true is true", 0), 0u);
}

TEST(SentenceAttack, InputReductionMatchesExhaustiveSearch) {
  // "answer" lowers Gamma, so removing it would raise Gamma.
  const std::string seg = "Please choose the best answer from these options";
  auto scorer = uniform_scorer(3, [](std::string_view s) { return has_word(s, "answer") ? 0.5 : 1.0; });
  const auto r = run_text_attack(TextMethod::InputReduction, seg, scorer, {});
  EXPECT_EQ(r.attacked_segment, "answer options");

  // Smallest subset keeping the last word with Gamma <= clean Gamma.
  const Tokens t = Tokens::split(seg);
  const std::size_t n = t.size();
  const double clean = r.gamma_before;
  std::vector<std::string> minimal;
  std::size_t best_size = n + 1;
  for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::string s;
    std::size_t k = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (mask & (1u << i)) {
        s += t.words[i] + " ";
        ++k;
      }
    }
    s += t.words.back();
    const auto v = scorer.scores(s);
    if (v[0] * 3 > clean) continue;
    if (k + 1 < best_size) {
      best_size = k + 1;
      minimal = {s};
    } else if (k + 1 == best_size) {
      minimal.push_back(s);
    }
  }
  EXPECT_EQ(minimal, std::vector<std::string>{r.attacked_segment});
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
}

TEST(SentenceAttack, InputReductionKeepsLastWord) {
  auto scorer = uniform_scorer(2, [](std::string_view s) { return 0.1 * Tokens::split(s).size(); });
  const auto r = run_text_attack(TextMethod::InputReduction, kSegment, scorer, {});
  EXPECT_EQ(r.attacked_segment, "choices:");
  EXPECT_TRUE(check_text_constraints(kSegment, r.attacked_segment, AttackLevel::Sentence).empty());
  EXPECT_FALSE(check_text_constraints(kSegment, "Choose the", AttackLevel::Sentence).empty());
}

TEST(SemanticAttack, PicksLowestVariant) {
  std::map<std::string, std::vector<std::string>> variants = {{kSegment, {kSegment}}};
  auto scorer = uniform_scorer(2, [](std::string_view s) { return has_word(s, "elige") ? 0.2 : 1.0; });
  TextAttackOptions opt;
  opt.semantic_variants = &variants;
  auto r = run_text_attack(TextMethod::Semantic, kSegment, scorer, opt);
  EXPECT_EQ(r.attacked_segment, kSegment);
  EXPECT_DOUBLE_EQ(*r.asdr, 0.0);

  variants = load_variants(AVIKIT_TEST_DATA "/variants.json");
  r = run_text_attack(TextMethod::Semantic, kSegment, scorer, opt);
  EXPECT_EQ(r.attacked_segment, variants[kSegment][0]);
  EXPECT_NEAR(*r.asdr, 0.8, 1e-12);

  // A variant the model likes better is still returned: ASDR goes negative.
  std::map<std::string, std::vector<std::string>> worse = {{"a b c", {"x y z"}}};
  auto pref = uniform_scorer(1, [](std::string_view s) { return s == "x y z" ? 0.6 : 0.5; });
  opt.semantic_variants = &worse;
  EXPECT_NEAR(*run_text_attack(TextMethod::Semantic, "a b c", pref, opt).asdr, -0.2, 1e-12);

  try {
    run_text_attack(TextMethod::Semantic, "unknown key text", scorer, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownSegmentKey);
  }
  opt.semantic_variants = nullptr;
  try {
    run_text_attack(TextMethod::Semantic, kSegment, scorer, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::VariantFileMissing);
  }
}

TEST(SelectTopPrompts, RankingAndTies) {
  const std::vector<std::string> variants = {"v0 x y", "v1 answer", "v2 x", "v3 answer", "v4",
                                             "v5", "v6 answer", "v7", "v8", "v9"};
  // 5 instructions; instruction i rewards "answer" with weight i + 1.
  FunctionScorer scorer({"a", "b", "c", "d", "e"}, [](std::string_view s) {
    std::vector<double> out;
    for (int i = 0; i < 5; ++i) out.push_back(has_word(s, "answer") ? i + 1.0 : 0.0);
    return out;
  });
  EXPECT_EQ(select_top_prompts(variants, scorer), (std::vector<std::size_t>{1, 3, 6}));
  auto flat = uniform_scorer(2, [](std::string_view) { return 0.5; });
  EXPECT_EQ(select_top_prompts(variants, flat), (std::vector<std::size_t>{0, 1, 2}));
  try {
    select_top_prompts(std::span(variants).first(9), flat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::VariantCountMismatch);
  }
}

TEST(Constraints, CheckerFlagsViolations) {
  const PerturbationConstraints c;
  EXPECT_TRUE(check_text_constraints(kSegment, "Choose the bset answer from the following choices:",
                                     AttackLevel::Character, c).empty());
  // "the" is too short.
  EXPECT_FALSE(check_text_constraints(kSegment, "Choose teh best answer from the following choices:",
                                      AttackLevel::Character, c).empty());
  // Three words.
  EXPECT_FALSE(check_text_constraints(kSegment, "Chose the bset answr from the following choices:",
                                      AttackLevel::Character, c).empty());
  // Two edits on one word.
  EXPECT_FALSE(check_text_constraints(kSegment, "Choose the bxsx answer from the following choices:",
                                      AttackLevel::Character, c).empty());
  // Last word.
  EXPECT_FALSE(check_text_constraints(kSegment, "Choose the best answer from the following choics:",
                                      AttackLevel::Character, c).empty());
  EXPECT_FALSE(check_text_constraints(kSegment, "Choose the best", AttackLevel::Word, c).empty());
  EXPECT_TRUE(check_text_constraints(kSegment, "Pick the best reply from the following choices:", AttackLevel::Word, c)
                  .empty());
}

TEST(Constraints, RandomizedAttacksComply) {
  const std::vector<std::string> vocab = {"the",    "choose", "best",  "answer", "from",  "following", "a",
                                          "choices:", "image", "Describe", "what", "picture", "select", "option"};
  SubstitutionProvider provider;
  provider.add("choose", {"pick", "select"});
  provider.add("best", {"finest", "ideal"});
  provider.add("answer", {"reply"});
  provider.add("image", {"photo", "picture"});
  provider.add("the", {"a"});
  std::map<std::string, std::vector<std::string>> semantic;
  Rng rng(99);
  std::size_t checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    std::string seg;
    const std::size_t len = 3 + rng.below(6);
    for (std::size_t i = 0; i < len; ++i) seg += (i ? " " : "") + vocab[rng.below(vocab.size())];
    semantic[seg] = {"translated " + seg};
    std::set<std::string> keys;
    for (int k = 0; k < 3; ++k) keys.insert(vocab[rng.below(vocab.size())]);
    FunctionScorer scorer({"a", "b", "c"}, [keys](std::string_view s) {
      std::vector<double> out;
      for (const auto& k : keys) out.push_back(s.find(k) != std::string_view::npos ? 1.0 : 0.0);
      return out;
    });
    TextAttackOptions opt;
    opt.seed = static_cast<std::uint64_t>(trial);
    opt.provider = &provider;
    opt.semantic_variants = &semantic;
    for (TextMethod m : kAllTextMethods) {
      const auto r = run_text_attack(m, seg, scorer, opt);
      EXPECT_EQ(check_text_constraints(seg, r.attacked_segment, level_of(m)), std::vector<std::string>{})
          << to_string(m) << ": '" << seg << "' -> '" << r.attacked_segment << "'";
      EXPECT_DOUBLE_EQ(r.gamma_after, std::accumulate(r.scores_after.begin(), r.scores_after.end(), 0.0));
      if (level_of(m) != AttackLevel::Sentence || m == TextMethod::InputReduction) {
        if (level_of(m) != AttackLevel::Semantic) {
          for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
        }
      }
      ++checked;
    }
  }
  EXPECT_EQ(checked, 300u);
}

// Five VQA items sharing the choice segment, answered by a keyword echo model.
Dataset choice_dataset(std::size_t n, const std::string& subtask) {
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    VisualInstruction vi;
    vi.id = subtask + std::to_string(i);
    vi.image = test::synthetic_image(16, 16, i);
    vi.prompt = "What is in " + subtask + std::to_string(i) + "? " + kSegment + " option" + std::to_string(i);
    vi.ground_truth = {i % 2 ? "answer" : "best"};
    vi.task = TaskKind::VQA;
    vi.capability = CapabilityKind::Reasoning;
    vi.subtask = subtask;
    ds.items.push_back(std::move(vi));
  }
  return ds;
}

std::map<std::string, std::vector<std::string>> nine_paraphrases() {
  std::map<std::string, std::vector<std::string>> out;
  auto& v = out[kSegment];
  for (int i = 0; i < 9; ++i) v.push_back("Variant " + std::to_string(i) + (i % 3 ? " pick the answer" : " pick one"));
  return out;
}

TEST(TextSuite, OneGroupTenMethodsThirtyResults) {
  const Dataset ds = choice_dataset(5, "Choice");
  auto oracle = make_reference_oracle(KeywordEcho{{"best", "answer"}}, 0);
  const auto paraphrases = nine_paraphrases();
  SubstitutionProvider provider = SubstitutionProvider::load(AVIKIT_TEST_DATA "/synonyms.tsv");
  std::map<std::string, std::vector<std::string>> semantic;
  for (const auto& [k, v] : paraphrases) {
    for (const auto& s : v) semantic[s] = {"Elige " + s};
  }
  semantic[kSegment] = {"Elige la mejor respuesta"};
  TextSuiteConfig cfg;
  cfg.paraphrases = &paraphrases;
  cfg.attack.provider = &provider;
  cfg.attack.semantic_variants = &semantic;

  std::vector<TextAttackResult> results;
  run_text_attack_suite(ds, *oracle, kAllTextMethods, cfg, [&](const TextAttackResult& r) { results.push_back(r); });
  ASSERT_EQ(results.size(), 30u);
  std::size_t entries = 0;
  for (const auto& r : results) {
    EXPECT_EQ(r.group, "Choice");
    EXPECT_EQ(r.ids.size(), 5u);
    entries += r.ids.size();
    // gamma_before is the clean Gamma of the selected prompt.
    std::vector<std::string> prompts, ids;
    for (const auto& vi : ds.items) prompts.push_back(vi.prompt), ids.push_back(vi.id);
    std::vector<const VisualInstruction*> items;
    for (const auto& vi : ds.items) items.push_back(&vi);
    OracleSegmentScorer scorer(*oracle, items, extract_shared_segment(prompts, ids));
    const auto clean = scorer.scores(r.original_segment);
    EXPECT_DOUBLE_EQ(r.gamma_before, std::accumulate(clean.begin(), clean.end(), 0.0));
  }
  EXPECT_EQ(entries, 150u);
  // The clean segment carries both keywords, so it ranks first.
  EXPECT_EQ(results[0].original_segment, kSegment);
  EXPECT_EQ(results[0].prompt_rank, 0u);
  EXPECT_EQ(results[29].prompt_rank, 2u);

  std::vector<TextAttackResult> none;
  run_text_attack_suite(ds, *oracle, {}, cfg, [&](const TextAttackResult& r) { none.push_back(r); });
  EXPECT_TRUE(none.empty());
}

TEST(TextSuite, ParaphraseCountChecked) {
  const Dataset ds = choice_dataset(3, "Choice");
  auto oracle = make_reference_oracle(KeywordEcho{}, 0);
  auto paraphrases = nine_paraphrases();
  paraphrases[kSegment].pop_back();
  TextSuiteConfig cfg;
  cfg.paraphrases = &paraphrases;
  const std::vector<TextMethod> methods = {TextMethod::CheckList};
  try {
    run_text_attack_suite(ds, *oracle, methods, cfg, [](const TextAttackResult&) {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::VariantCountMismatch);
  }
}

}  // namespace
}  // namespace avikit
