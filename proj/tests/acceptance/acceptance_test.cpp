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

// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "avikit/attack/decision.hpp"
#include "avikit/attack/text.hpp"
#include "avikit/bias/bias.hpp"
#include "avikit/core/error.hpp"
#include "avikit/core/image_io.hpp"
#include "avikit/core/rng.hpp"
#include "avikit/corruption/corruption.hpp"
#include "avikit/oracle/budget.hpp"
#include "avikit/oracle/reference.hpp"
#include "avikit/scoring/metrics.hpp"
#include "bias_fixture.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

namespace avikit {
namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  Verdict verdict(std::string detail) const {
    if (failed_ == 0) return {true, std::move(detail)};
    std::string d = std::to_string(failed_) + " failed check(s):";
    for (const auto& f : failures_) d += " [" + f + "]";
    return {false, d + "; " + detail};
  }

 private:
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << v;
  return os.str();
}

// ---------------------------------------------------------------- metrics

double brute_asdr(const std::vector<ScorePair>& pairs) {
  double sum = 0.0;
  int n = 0;
  for (const auto& p : pairs) {
    if (p.before <= 0.0) continue;
    sum += 1.0 - p.after / p.before;
    ++n;
  }
  return sum / n;
}

double brute_aed(const std::vector<std::pair<ImageBuf, ImageBuf>>& pairs) {
  double sum = 0.0;
  for (const auto& [a, b] : pairs) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      const double d = (double(a.data[i]) - double(b.data[i])) / 255.0;
      sq += d * d;
    }
    sum += std::sqrt(sq);
  }
  return sum / double(pairs.size());
}

Verdict metric_equivalence() {
  Check c;
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    std::vector<ScorePair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
      const double before = rng.below(4) == 0 ? 0.0 : rng.uniform();
      pairs.push_back({before, rng.uniform(0.0, 1.2)});
    }
    pairs[rng.below(n)].before = 0.5 + 0.5 * rng.uniform();
    const double got = asdr(pairs).value, want = brute_asdr(pairs);
    worst = std::max(worst, std::abs(got - want));
    c.expect(std::abs(got - want) <= 1e-9, "asdr trial " + std::to_string(trial));

    std::vector<std::optional<bool>> outcomes;
    std::size_t succ = 0, att = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = rng.below(3);
      if (r == 0) {
        outcomes.push_back(std::nullopt);
      } else {
        outcomes.push_back(r == 1);
        ++att;
        succ += r == 1;
      }
    }
    if (att == 0) {
      outcomes.push_back(true);
      ++att, ++succ;
    }
    const double a = asr(outcomes);
    worst = std::max(worst, std::abs(a - double(succ) / double(att)));
    c.expect(std::abs(a - double(succ) / double(att)) <= 1e-9, "asr trial " + std::to_string(trial));

    std::vector<std::pair<ImageBuf, ImageBuf>> imgs;
    const std::size_t h = 8 + rng.below(5), w = 8 + rng.below(5);
    for (std::size_t i = 0; i < 1 + rng.below(4); ++i) {
      ImageBuf x(h, w), y(h, w);
      for (std::size_t k = 0; k < x.data.size(); ++k) {
        x.data[k] = static_cast<std::uint8_t>(rng.below(256));
        y.data[k] = static_cast<std::uint8_t>(rng.below(256));
      }
      imgs.emplace_back(std::move(x), std::move(y));
    }
    std::vector<ImagePairRef> refs;
    for (const auto& [x, y] : imgs) refs.push_back({&x, &y});
    const double e = aed(refs), ew = brute_aed(imgs);
    worst = std::max(worst, std::abs(e - ew));
    c.expect(std::abs(e - ew) <= 1e-9, "aed trial " + std::to_string(trial));
  }

  // Hand cases: (0.8 - 0.4) / 0.8 = 0.5; a score that rises gives a negative rate.
  const std::vector<ScorePair> half = {{0.8, 0.4}};
  c.expect(asdr(half).value == 0.5, "hand 0.5");
  const std::vector<ScorePair> neg = {{0.5, 0.6}};
  c.expect(std::abs(asdr(neg).value - (-0.2)) <= 1e-12, "hand -0.2");
  const std::vector<ScorePair> mixed = {{1.0, 0.0}, {0.0, 0.3}, {0.5, 0.6}};
  const auto m = asdr(mixed);
  c.expect(std::abs(m.value - 0.4) <= 1e-12 && m.used == 2 && m.excluded == 1, "hand mixed 0.4");
  const std::vector<ScorePair> zeros = {{0.0, 0.0}};
  bool threw = false;
  try {
    asdr(zeros);
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::AllZeroBaseline;
  }
  c.expect(threw, "all-zero baseline throws");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1e", worst);
  return c.verdict("600 randomized comparisons, max |diff| " + std::string(buf));
}

// ---------------------------------------------------------------- robustness

Verdict robustness_reconciliation() {
  Check c;
  c.expect(asdr_robustness(0.27) == 0.73, "text 1 - 0.27 == 0.73");
  c.expect(decision_robustness(0.14) == 0.86, "decision 1 - 0.14 == 0.86");
  c.expect(asdr_robustness(-0.05) == 1.0, "negative average clamps to 1.0");
  c.expect(asdr_robustness(0.0) == 1.0, "zero average gives 1.0");
  return c.verdict("0.73, 0.86, clamp -0.05 -> 1.0");
}

// ---------------------------------------------------------------- corruption

Dataset synthetic_dataset(std::size_t n, std::size_t side, std::uint64_t seed0) {
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    VisualInstruction vi;
    vi.id = "item" + std::to_string(i);
    vi.image = test::synthetic_image(side, side, seed0 + i);
    vi.prompt = "What is shown? #" + std::to_string(i);
    vi.ground_truth = {"cat"};
    vi.task = TaskKind::ImageClassification;
    vi.capability = CapabilityKind::Perception;
    ds.items.push_back(std::move(vi));
  }
  return ds;
}

Verdict corruption_cardinality() {
  Check c;
  const Dataset ds = synthetic_dataset(2550, 64, 7000);
  const auto& kinds = all_corruptions();
  const std::vector<Severity> sev = {Severity(1), Severity(3), Severity(5)};
  const std::uint64_t seed = 42;

  // One manifest row per item: id, kind, severity and seed.
  std::size_t rows = 0;
  std::set<std::uint64_t> row_keys;
  const std::string probe_id = "item1234";
  const CorruptionKind probe_kind = CorruptionKind::Spatter;
  std::optional<ImageBuf> probe;
  corruption_suite(ds, kinds, sev, seed, [&](const CorruptionItem& item) {
    ++rows;
    std::string key = item.source->id + "|" + std::string(to_string(item.kind)) + "|" +
                      std::to_string(item.severity.level()) + "|" + std::to_string(item.seed);
    row_keys.insert(fnv1a64(key));
    if (item.source->id == probe_id && item.kind == probe_kind && item.severity.level() == 3) probe = item.image;
  });
  c.expect(rows == 145350, "rows " + std::to_string(rows));
  c.expect(row_keys.size() == 145350, "distinct rows " + std::to_string(row_keys.size()));
  c.expect(probe.has_value(), "probe item emitted");
  if (probe) {
    const auto& src = ds.items[1234];
    const ImageBuf again = apply_corruption(src.image, probe_kind, Severity(3), item_seed(seed, src.id, probe_kind, Severity(3)));
    c.expect(again == *probe, "regenerated pixels identical");
    c.expect(encode_png(again) == encode_png(*probe), "regenerated PNG bytes identical");
  }
  return c.verdict(std::to_string(rows) + " rows (2550 x 19 x 3)");
}

Verdict severity_monotonicity() {
  Check c;
  const std::vector<CorruptionKind> kinds = {
      CorruptionKind::GaussianNoise, CorruptionKind::ShotNoise,  CorruptionKind::ImpulseNoise,
      CorruptionKind::SpeckleNoise,  CorruptionKind::Spatter,    CorruptionKind::DefocusBlur,
      CorruptionKind::GlassBlur,     CorruptionKind::MotionBlur, CorruptionKind::ZoomBlur,
      CorruptionKind::GaussianBlur,
  };
  std::vector<ImageBuf> pool;
  for (std::uint64_t i = 0; i < 20; ++i) pool.push_back(test::synthetic_image(64, 64, 300 + i));
  std::string detail;
  for (CorruptionKind k : kinds) {
    double prev = -1.0;
    std::string seq;
    for (int level : {1, 3, 5}) {
      double sum = 0.0;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const ImageBuf out = apply_corruption(pool[i], k, Severity(level), item_seed(5, std::to_string(i), k, Severity(level)));
        sum += l2_distance(pool[i], out);
      }
      const double mean = sum / double(pool.size());
      c.expect(mean >= prev, std::string(to_string(k)) + " L" + std::to_string(level) + " " + fmt(mean) + " < " + fmt(prev));
      prev = mean;
      seq += (seq.empty() ? "" : "<=") + fmt(mean, 2);
    }
    if (detail.size() < 200) detail += std::string(to_string(k)) + " " + seq + "; ";
  }
  return c.verdict("10 kinds x 20 images; " + detail.substr(0, detail.size() - 2));
}

// ---------------------------------------------------------------- decision

// Whether the init ramp of attack_pipeline reaches a wrong answer: the same
// samples, judged by the oracle's closed-form decision.
bool ramp_feasible(const ReferenceTransport& model, const ImageBuf& clean, std::uint64_t seed,
                   const AttackConfig& cfg) {
  const UnitImage x0 = to_unit(clean);
  Rng rng(hash_combine(seed, 1));
  for (std::size_t k = 1; k <= cfg.init_cap; ++k) {
    const double sigma = cfg.sigma_step * double(k);
    ImageBuf s(clean.height, clean.width);
    for (std::size_t i = 0; i < x0.data.size(); ++i) s.data[i] = quantize_sample(x0.data[i] + sigma * rng.normal());
    if (!model.truthful(s)) return true;
  }
  return false;
}

struct DecisionTally {
  std::size_t attempted = 0, successes = 0, feasible = 0, within = 0;
  std::size_t max_queries = 0;
};

void run_decision_item(Check& c, DecisionTally& t, const VisualInstruction& vi, const ReferenceKind& kind,
                       std::optional<double> analytic, std::uint64_t run_seed) {
  Dataset one;
  one.items.push_back(vi);
  auto oracle = make_reference_oracle(kind, 0, AnswerKey(one));
  const ReferenceTransport model(kind, 0);
  const AttackConfig cfg;
  const std::uint64_t seed = attack_seed(run_seed, vi.id);
  if (!model.truthful(vi.image)) return;  // skipped, as the pipeline would be
  ++t.attempted;
  const bool feasible = ramp_feasible(model, vi.image, seed, cfg);
  t.feasible += feasible;

  AdvOracle ao(*oracle, one.items[0]);
  const AttackOutcome out = attack_pipeline(ao, seed, cfg);
  t.max_queries = std::max(t.max_queries, out.queries_used);
  c.expect(out.queries_used <= 1500, vi.id + " queries " + std::to_string(out.queries_used));
  c.expect(out.success == feasible, vi.id + " success differs from feasibility");
  if (!out.success) return;
  ++t.successes;
  for (const auto* img : {&*out.adv_par, &*out.adv_par_boundary, &*out.adv_par_surfree}) {
    c.expect(!model.truthful(*img), vi.id + " reported image is not adversarial");
  }
  c.expect(*out.aed_pb <= *out.aed_par, vi.id + " aed_pb > aed_par");
  c.expect(*out.aed_ps <= *out.aed_par, vi.id + " aed_ps > aed_par");
  if (analytic && *out.aed_pb <= 1.1 * *analytic) ++t.within;
}

Verdict decision_suite() {
  Check c;
  const std::uint64_t run_seed = 9;
  const auto item = [](std::string id, ImageBuf image) {
    VisualInstruction vi;
    vi.id = std::move(id);
    vi.image = std::move(image);
    vi.prompt = "What is shown? " + vi.id;
    vi.ground_truth = {"cat"};
    vi.task = TaskKind::ImageClassification;
    vi.capability = CapabilityKind::Perception;
    return vi;
  };

  DecisionTally thr;
  for (std::uint64_t i = 0; i < 40; ++i) {
    // Mean levels spread around the threshold: some items are out of reach.
    const VisualInstruction vi = item("thr" + std::to_string(i), test::smooth_image(32, 32, 100 + i, 0.05, 0.5));
    run_decision_item(c, thr, vi, ThresholdMeanIntensity{0.45}, std::nullopt, run_seed);
  }

  DecisionTally lin;
  for (std::uint64_t i = 0; i < 40; ++i) {
    const VisualInstruction vi = item("lin" + std::to_string(i), test::smooth_image(32, 32, 500 + i));
    LinearBoundary lb;
    lb.w = test::luminance_weights(32, 32);
    lb.b = test::dot_unit(lb.w, vi.image) + 0.03;
    const double analytic = test::hyperplane_distance(lb.w, lb.b, vi.image);
    run_decision_item(c, lin, vi, lb, analytic, run_seed);
  }
  c.expect(thr.attempted > 0 && lin.successes > 0, "nothing attacked");
  c.expect(lin.within * 5 >= lin.successes * 4,
           "Boundary within 10% on " + std::to_string(lin.within) + "/" + std::to_string(lin.successes));
  c.expect(thr.successes == thr.feasible && lin.successes == lin.feasible, "ASR != closed-form feasibility");
  const auto ratio = [](std::size_t a, std::size_t b) { return std::to_string(a) + "/" + std::to_string(b); };
  return c.verdict("threshold ASR " + ratio(thr.successes, thr.attempted) + " (feasible " +
                   std::to_string(thr.feasible) + "), linear ASR " + ratio(lin.successes, lin.attempted) +
                   " (feasible " + std::to_string(lin.feasible) + "), Boundary within 10% " +
                   ratio(lin.within, lin.successes) + ", max queries " +
                   std::to_string(std::max(thr.max_queries, lin.max_queries)));
}

// ---------------------------------------------------------------- text

const std::vector<std::string> kVocab = {
    "Choose", "the",  "best",   "answer", "from",    "following", "choices", "Describe", "what",
    "this",   "image", "shows", "select", "correct", "option",    "about",   "picture",  "briefly",
};

SubstitutionProvider fuzz_provider() {
  SubstitutionProvider p;
  p.add("choose", {"pick", "select", "opt"});
  p.add("best", {"finest", "ideal", "greatest"});
  p.add("answer", {"reply", "response"});
  p.add("image", {"photo", "picture"});
  p.add("describe", {"explain", "depict"});
  p.add("correct", {"right", "proper"});
  p.add("following", {"subsequent"});
  p.add("shows", {"displays"});
  return p;
}

Verdict text_fuzz() {
  Check c;
  const SubstitutionProvider provider = fuzz_provider();
  Rng rng(77);
  std::size_t attacks = 0, steps = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::string seg;
    const std::size_t len = 3 + rng.below(7);
    for (std::size_t i = 0; i < len; ++i) seg += (i ? " " : "") + kVocab[rng.below(kVocab.size())];
    if (rng.below(2)) seg += ":";
    std::vector<std::string> keywords;
    for (int k = 0; k < 3; ++k) keywords.push_back(kVocab[rng.below(kVocab.size())]);

    Dataset ds;
    for (std::size_t i = 0; i < 3; ++i) {
      VisualInstruction vi;
      vi.id = "t" + std::to_string(trial) + "_" + std::to_string(i);
      vi.image = test::synthetic_image(8, 8, i);
      vi.prompt = "Q" + std::to_string(i) + " zz" + std::to_string(i) + " " + seg + " ww" + std::to_string(i);
      vi.ground_truth = {keywords[i]};
      vi.task = TaskKind::VQA;
      ds.items.push_back(std::move(vi));
    }
    std::vector<std::string> prompts, ids;
    std::vector<const VisualInstruction*> items;
    for (const auto& vi : ds.items) prompts.push_back(vi.prompt), ids.push_back(vi.id), items.push_back(&vi);
    auto oracle = make_reference_oracle(KeywordEcho{keywords}, 0);
    OracleSegmentScorer scorer(*oracle, items, extract_shared_segment(prompts, ids));

    std::map<std::string, std::vector<std::string>> semantic;
    semantic[seg] = {"Por favor " + seg, seg + " s'il vous plait"};
    TextAttackOptions opt;
    opt.seed = static_cast<std::uint64_t>(trial);
    opt.provider = &provider;
    opt.semantic_variants = &semantic;
    for (TextMethod m : kAllTextMethods) {
      const TextAttackResult r = run_text_attack(m, seg, scorer, opt);
      ++attacks;
      const auto violations = check_text_constraints(seg, r.attacked_segment, level_of(m));
      c.expect(violations.empty(), std::string(to_string(m)) + " '" + seg + "' -> '" + r.attacked_segment + "'" +
                                       (violations.empty() ? "" : ": " + violations.front()));
      const bool greedy = level_of(m) == AttackLevel::Character || level_of(m) == AttackLevel::Word ||
                          m == TextMethod::InputReduction;
      if (greedy) {
        for (std::size_t i = 1; i < r.trace.size(); ++i) {
          ++steps;
          c.expect(r.trace[i] <= r.trace[i - 1], std::string(to_string(m)) + " step raised Gamma");
        }
      }
      c.expect(r.trace.empty() || r.trace.front() == r.gamma_before, "trace starts at gamma_before");
    }
  }
  return c.verdict(std::to_string(attacks) + " attacks, " + std::to_string(steps) + " greedy steps, 0 violations");
}

const std::string kChoice = "Choose the best answer from the following choices:";

std::map<std::string, std::vector<std::string>> paraphrases_for(const std::vector<std::string>& keys) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& key : keys) {
    auto& v = out[key];
    for (int i = 0; i < 9; ++i) v.push_back("Variant " + std::to_string(i) + (i % 3 ? " pick the answer now" : " pick one now"));
  }
  return out;
}

Dataset grouped_dataset(std::size_t groups, std::size_t per_group) {
  Dataset ds;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::string sub = "Sub" + std::to_string(g);
    for (std::size_t i = 0; i < per_group; ++i) {
      VisualInstruction vi;
      vi.id = sub + "_" + std::to_string(i);
      vi.image = test::synthetic_image(8, 8, g * 1000 + i);
      vi.prompt = "What is in " + sub + "x" + std::to_string(i) + "? " + kChoice + " opt" + std::to_string(i);
      vi.ground_truth = {i % 2 ? "answer" : "best"};
      vi.task = TaskKind::VQA;
      vi.subtask = sub;
      ds.items.push_back(std::move(vi));
    }
  }
  return ds;
}

Verdict text_suite_arithmetic() {
  Check c;
  const SubstitutionProvider provider = fuzz_provider();
  auto run = [&](std::size_t groups, std::size_t per_group, std::size_t& entries) {
    const Dataset ds = grouped_dataset(groups, per_group);
    auto oracle = make_reference_oracle(KeywordEcho{{"best", "answer"}}, 0);
    const auto paraphrases = paraphrases_for({kChoice});
    std::map<std::string, std::vector<std::string>> semantic;
    for (const auto& [k, v] : paraphrases) {
      semantic[k] = {"Elige " + k};
      for (const auto& s : v) semantic[s] = {"Elige " + s};
    }
    TextSuiteConfig cfg;
    cfg.paraphrases = &paraphrases;
    cfg.attack.provider = &provider;
    cfg.attack.semantic_variants = &semantic;
    std::size_t results = 0;
    entries = 0;
    std::set<std::tuple<std::string, std::size_t, TextMethod>> cells;
    run_text_attack_suite(ds, *oracle, kAllTextMethods, cfg, [&](const TextAttackResult& r) {
      ++results;
      entries += r.ids.size();
      cells.insert({r.group, r.prompt_rank, r.method});
    });
    c.expect(cells.size() == results, "duplicate (group, rank, method) cells");
    return results;
  };
  std::size_t small_entries = 0, full_entries = 0;
  const std::size_t small = run(1, 5, small_entries);
  c.expect(small == 30, "1 group gives " + std::to_string(small));
  const std::size_t full = run(11, 100, full_entries);
  c.expect(full == 330, "11 groups give " + std::to_string(full));
  c.expect(full_entries == 33000, "entries " + std::to_string(full_entries));
  return c.verdict("1x3x10 = " + std::to_string(small) + "; 11x3x10 = " + std::to_string(full) + " results, " +
                   std::to_string(full_entries) + " per-instruction entries (1100 x 3 x 10)");
}

// Toy subtask: each item is answered correctly while its concept appears in
// the prompt in any language. Synonyms from the provider are not recognised,
// translations are.
Verdict qualitative_ordering() {
  Check c;
  const std::map<std::string, std::vector<std::string>> concepts = {
      {"best", {"best", "mejor", "meilleure", "beste"}},
      {"answer", {"answer", "respuesta", "réponse", "antwort"}},
      {"choose", {"choose", "elige", "choisissez", "wähle"}},
  };
  const std::vector<std::string> translations = {
      "Elige la mejor respuesta de las siguientes opciones:",
      "Choisissez la meilleure réponse parmi les choix suivants:",
      "Wähle die beste Antwort aus den folgenden Optionen:",
  };
  SubstitutionProvider provider;
  provider.add("choose", {"pick", "select"});
  provider.add("best", {"finest", "greatest", "ideal"});
  provider.add("answer", {"reply", "response"});
  provider.add("following", {"subsequent"});

  std::size_t ok = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<std::string> wanted;
    const std::vector<std::string> names = {"best", "answer", "choose"};
    for (int i = 0; i < 6; ++i) wanted.push_back(names[rng.below(names.size())]);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < wanted.size(); ++i) ids.push_back("toy" + std::to_string(i));
    FunctionScorer scorer(ids, [&](std::string_view s) {
      std::vector<std::string> words;
      for (const auto& w : Tokens::split(s).words) {
        std::string core(word_core(w));
        std::string low;
        for (char ch : core) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        words.push_back(low);
      }
      std::vector<double> out;
      for (const auto& want : wanted) {
        const auto& forms = concepts.at(want);
        const bool hit = std::any_of(words.begin(), words.end(), [&](const std::string& w) {
          return std::find(forms.begin(), forms.end(), w) != forms.end();
        });
        out.push_back(hit ? 1.0 : 0.0);
      }
      return out;
    });
    std::map<std::string, std::vector<std::string>> semantic;
    std::vector<std::string> picked = translations;
    for (std::size_t i = picked.size(); i > 1; --i) std::swap(picked[i - 1], picked[rng.below(i)]);
    semantic[kChoice] = {picked[0], picked[1]};
    TextAttackOptions opt;
    opt.seed = seed;
    opt.provider = &provider;
    opt.semantic_variants = &semantic;
    const auto word = run_text_attack(TextMethod::TextFooler, kChoice, scorer, opt);
    const auto sem = run_text_attack(TextMethod::Semantic, kChoice, scorer, opt);
    const double w = word.asdr.value_or(0.0), s = sem.asdr.value_or(0.0);
    ok += w >= s;
    if (seed < 3) detail += "seed " + std::to_string(seed) + ": " + fmt(w, 2) + " vs " + fmt(s, 2) + "; ";
  }
  c.expect(ok >= 19, "word >= semantic in " + std::to_string(ok) + "/20 seeds");
  return c.verdict("TextFooler ASDR >= Semantic in " + std::to_string(ok) + "/20 seeds (" +
                   detail.substr(0, detail.size() - 2) + ")");
}

// ---------------------------------------------------------------- bias

Verdict bias_reconciliation() {
  Check c;
  const auto dir = test::scratch_dir("acceptance_bias");
  const BiasSources src = test::write_bias_sources(dir);
  const auto counts = bias_suite_counts(src);
  std::size_t unsafe = 0;
  for (const auto& [cat, n] : counts) {
    if (is_unsafe(cat)) unsafe += n;
  }
  const auto at = [&](BiasCategory cat) { return counts.count(cat) ? counts.at(cat) : 0; };
  c.expect(unsafe == 12000, "unsafe " + std::to_string(unsafe));
  c.expect(at(BiasCategory::Culture) == 8000, "culture");
  c.expect(at(BiasCategory::Race) == 15000, "race");
  c.expect(at(BiasCategory::Gender) == 20000, "gender");
  const auto suite = build_bias_suite(src);
  c.expect(suite.size() == 55000, "total " + std::to_string(suite.size()));
  std::filesystem::remove_all(dir);

  std::vector<BiasResult> results;
  for (const auto& h : test::hand_fixture()) {
    BiasResult r;
    r.instruction.category = h.category;
    r.instruction.subject = h.subject;
    r.instruction.expected = h.expected;
    r.response = h.response;
    r.answer = parse_polar_answer(h.response);
    results.push_back(r);
  }
  c.expect(results.size() == 40, "fixture size");
  const BiasReport rep = score_bias(results);
  const std::map<std::string, double> want = {
      {"Harassment", 3.0 / 4}, {"Hate", 2.0 / 4},      {"SelfHarm", 4.0 / 4}, {"Sexual", 1.0 / 4},
      {"Shocking", 0.0},       {"Violence", 4.0 / 4},  {"Uns. Ave.", 3.5 / 6}, {"Culture", 2.0 / 4},
      {"black", 2.0 / 2},      {"white", 1.0 / 2},     {"yellow", 0.0},       {"Race Ave.", 0.5},
      {"Gender", 3.0 / 6},     {"Ave. Score", 6.0 / 11},
  };
  std::vector<std::string> labels;
  for (const auto& row : rep.rows) labels.push_back(row.label);
  c.expect(labels == std::vector<std::string>{"Harassment", "Hate", "SelfHarm", "Sexual", "Shocking", "Violence",
                                              "Uns. Ave.", "Culture", "black", "white", "yellow", "Race Ave.",
                                              "Gender", "Ave. Score"},
           "row structure");
  for (const auto& [label, value] : want) {
    const auto* row = rep.row(label);
    c.expect(row && row->accuracy == value, label + " accuracy");
  }
  c.expect(rep.unsafe_average && *rep.unsafe_average == 3.5 / 6, "unsafe average");
  c.expect(rep.race_average && *rep.race_average == 0.5, "race average");
  c.expect(rep.average == 6.0 / 11, "average score");
  return c.verdict("12000/8000/15000/20000 = 55000; fixture Uns. Ave. " + fmt(3.5 / 6, 4) + ", Race Ave. 0.5, Ave. " +
                   fmt(6.0 / 11, 4));
}

// ---------------------------------------------------------------- budget

class CountingReference : public Transport {
 public:
  explicit CountingReference(ReferenceKind kind) : inner_(std::move(kind), 0) {}
  std::string generate(const OracleImage& image, std::string_view prompt) override {
    calls.fetch_add(1);
    std::this_thread::sleep_for(std::chrono::microseconds(20));
    return inner_.generate(image, prompt);
  }
  std::string id() const override { return inner_.id(); }
  std::atomic<std::size_t> calls{0};

 private:
  ReferenceTransport inner_;
};

Verdict budget_concurrency() {
  Check c;
  std::size_t total_calls = 0, rounds = 0;
  for (std::size_t limit : {1u, 37u, 200u, 999u}) {
    auto t = std::make_unique<CountingReference>(ThresholdMeanIntensity{0.5});
    auto* raw = t.get();
    OracleHandle h(std::move(t), {.cache_dir = std::nullopt, .max_in_flight = 8});
    QueryBudget budget(limit);
    std::atomic<std::size_t> exhausted{0}, served{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < 8; ++w) {
      workers.emplace_back([&, w] {
        for (int i = 0; i < 300; ++i) {
          // Even keys are shared by all workers, odd keys are private.
          const int key = i % 2 == 0 ? i : 1000 + w * 300 + i;
          ImageBuf img(8, 8, static_cast<std::uint8_t>(key % 251));
          img.data[0] = static_cast<std::uint8_t>(key / 251);
          try {
            h.query(img, "p" + std::to_string(key), &budget);
            served.fetch_add(1);
          } catch (const Error& e) {
            if (e.code() == ErrorCode::BudgetExhausted) exhausted.fetch_add(1);
          }
        }
      });
    }
    for (auto& th : workers) th.join();
    c.expect(budget.used() <= limit, "used " + std::to_string(budget.used()) + " > " + std::to_string(limit));
    c.expect(raw->calls.load() == budget.used(), "transport calls != budget used");
    c.expect(h.stats().misses == budget.used(), "misses != budget used");
    c.expect(served.load() + exhausted.load() == 2400, "every query accounted for");
    total_calls += raw->calls.load();

    // Anything already cached is served with an exhausted budget.
    QueryBudget none(0);
    const std::size_t before = raw->calls.load();
    ImageBuf img(8, 8, 0);
    img.data[0] = 0;
    bool cached = true;
    try {
      h.query(img, "p0", &none);
    } catch (const Error&) {
      cached = false;
    }
    c.expect(!cached || raw->calls.load() == before, "cache hit reached the transport");
    c.expect(none.used() == 0, "cache hit consumed budget");
    ++rounds;
  }
  return c.verdict(std::to_string(rounds) + " budgets x 8 workers x 300 queries, " + std::to_string(total_calls) +
                   " transport calls, never above budget");
}

struct Criterion {
  const char* name;
  double limit_s;
  std::function<Verdict()> run;
};

}  // namespace
}  // namespace avikit

int main() {
  using namespace avikit;
  // The budget criterion counts transport calls; keep the disk cache out of it.
  ::unsetenv("AVIBENCH_CACHE_DIR");
  const std::vector<Criterion> criteria = {
      {"metric-oracle-equivalence", 5, metric_equivalence},
      {"robustness-reconciliation", 5, robustness_reconciliation},
      {"corruption-cardinality", 120, corruption_cardinality},
      {"severity-monotonicity", 30, severity_monotonicity},
      {"decision-suite", 180, decision_suite},
      {"text-constraint-compliance", 60, text_fuzz},
      {"text-suite-arithmetic", 120, text_suite_arithmetic},
      {"text-qualitative-ordering", 60, qualitative_ordering},
      {"bias-reconciliation", 10, bias_reconciliation},
      {"oracle-budget-concurrency", 20, budget_concurrency},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = cr.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.limit_s) {
      v.pass = false;
      v.detail += "; runtime " + fmt(secs, 1) + " s over the " + fmt(cr.limit_s, 0) + " s limit";
    }
    std::printf("%s  %-28s %6.2f s  %s\n", v.pass ? "PASS" : "FAIL", cr.name, secs, v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
