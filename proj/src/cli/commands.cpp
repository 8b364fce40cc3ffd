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

#include "avikit/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <unistd.h>

#include "avikit/attack/decision.hpp"
#include "avikit/attack/text.hpp"
#include "avikit/bias/bias.hpp"
#include "avikit/cli/report.hpp"
#include "avikit/core/image_io.hpp"
#include "avikit/core/instruction.hpp"
#include "avikit/corruption/corruption.hpp"
#include "avikit/oracle/open.hpp"
#include "avikit/scoring/score.hpp"

namespace avikit {
namespace fs = std::filesystem;
namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

class Progress {
 public:
  Progress(std::string label, std::size_t total) : label_(std::move(label)), total_(total), tty_(::isatty(2)) {}
  void tick(std::size_t done) {
    if (!tty_) return;
    std::fprintf(stderr, "\r[%s] %zu/%zu", label_.c_str(), done, total_);
    if (done == total_) std::fprintf(stderr, "\n");
  }

 private:
  std::string label_;
  std::size_t total_;
  bool tty_;
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

std::string safe_name(std::string_view id) {
  std::string out;
  for (char c : id) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_';
  return out;
}

nlohmann::json error_row(std::string_view id, std::string_view stage, const Error& e) {
  return {{"id", id}, {"stage", stage}, {"error", std::string(to_string(e.code()))}, {"detail", e.detail()}};
}

OracleConfig oracle_config(const RunConfig& c) {
  OracleConfig oc;
  oc.remote.timeout = std::chrono::milliseconds(static_cast<long long>(c.timeout_s * 1000));
  oc.remote.retries = c.retries;
  oc.remote.max_new_tokens = c.max_new_tokens;
  oc.options.cache_dir = resolve_cache_dir(c.cache_dir);
  oc.options.max_in_flight = std::max<std::size_t>(1, c.parallel);
  oc.seed = c.seed;
  return oc;
}

void require(bool ok, const std::string& why) {
  if (!ok) throw Error(ErrorCode::ConfigError, why);
}

// Shared run scaffolding: output directory, result and error streams, manifest.
class Run {
 public:
  Run(const RunConfig& c, std::string_view results_name) : config_(c) {
    require(!c.out.empty(), "--out is required");
    require(!c.oracle.empty(), "--oracle is required");
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + c.out.string() + ": " + ec.message());
    results_ = open_out(c.out / results_name);
    errors_ = open_out(c.out / kErrorLog);
  }

  void result(const nlohmann::json& j) {
    results_ << j.dump() << '\n';
    ++status_.results;
  }
  void error(const nlohmann::json& j) {
    errors_ << j.dump() << '\n';
    ++status_.errors;
  }

  RunStatus finish(const OracleHandle& oracle, nlohmann::json extra = nlohmann::json::object()) {
    results_.close();
    errors_.close();
    nlohmann::json m;
    m["tool"] = "avikit";
    m["version"] = kVersion;
    m["config"] = config_.to_json();
    m["oracle_id"] = oracle.id();
    const auto cache = resolve_cache_dir(config_.cache_dir);
    m["cache_dir"] = cache ? nlohmann::json(cache->string()) : nlohmann::json(nullptr);
    m["results"] = status_.results;
    m["errors"] = status_.errors;
    for (auto& [k, v] : extra.items()) m[k] = v;
    write_text(config_.out / "manifest.json", m.dump(2) + "\n");
    status_.exit_code = status_.errors ? kExitPartial : kExitOk;
    return status_;
  }

  void table(const std::string& stem, const TextTable& t) {
    write_text(config_.out / (stem + ".txt"), t.render());
    write_text(config_.out / (stem + ".csv"), t.csv());
  }

 private:
  const RunConfig& config_;
  std::ofstream results_, errors_;
  RunStatus status_;
};

std::vector<CorruptionKind> corruption_kinds(const RunConfig& c) {
  if (c.methods.empty()) return all_corruptions();
  std::vector<CorruptionKind> out;
  for (const auto& m : c.methods) {
    const auto k = parse_corruption(m);
    require(k.has_value(), "unknown corruption '" + m + "'");
    out.push_back(*k);
  }
  return out;
}

std::vector<TextMethod> text_methods(const RunConfig& c) {
  if (c.methods.empty()) return {kAllTextMethods.begin(), kAllTextMethods.end()};
  std::vector<TextMethod> out;
  for (const auto& m : c.methods) {
    const auto t = parse_text_method(m);
    require(t.has_value(), "unknown text attack '" + m + "'");
    out.push_back(*t);
  }
  return out;
}

nlohmann::json optional_number(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

int exit_code_for(const Error& e) noexcept {
  switch (e.code()) {
    case ErrorCode::MissingFile:
    case ErrorCode::MalformedRecord:
    case ErrorCode::UndecodableImage:
    case ErrorCode::DuplicateId:
    case ErrorCode::UnsupportedSeverity:
    case ErrorCode::BadParameters:
    case ErrorCode::VariantFileMissing:
    case ErrorCode::VariantCountMismatch:
    case ErrorCode::UnknownSegmentKey:
    case ErrorCode::ProviderMissing:
    case ErrorCode::MissingTemplate:
    case ErrorCode::ImageNotFound:
    case ErrorCode::ParaphraseCountMismatch:
    case ErrorCode::EmptyQuestion:
    case ErrorCode::ConfigError:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

nlohmann::json RunConfig::to_json() const {
  const auto path_or_null = [](const std::optional<fs::path>& p) {
    return p ? nlohmann::json(p->string()) : nlohmann::json(nullptr);
  };
  return {{"command", command},
          {"dataset", dataset.string()},
          {"oracle", oracle},
          {"out", out.string()},
          {"seed", seed},
          {"budget", budget},
          {"severities", severities},
          {"methods", methods},
          {"parallel", parallel},
          {"force_suffix", force_suffix},
          {"exact_match", exact_match},
          {"save_images", save_images},
          {"synonyms", path_or_null(synonyms)},
          {"paraphrases", path_or_null(paraphrases)},
          {"semantic_variants", path_or_null(semantic_variants)},
          {"cache_dir", path_or_null(cache_dir)},
          {"timeout_s", timeout_s},
          {"retries", retries},
          {"max_new_tokens", max_new_tokens}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    const auto path_opt = [&](const char* key) -> std::optional<fs::path> {
      if (!j.contains(key) || j[key].is_null()) return std::nullopt;
      return fs::path(j[key].get<std::string>());
    };
    c.command = j.at("command").get<std::string>();
    c.dataset = j.value("dataset", std::string());
    c.oracle = j.value("oracle", std::string());
    c.out = j.value("out", std::string());
    c.seed = j.value("seed", c.seed);
    c.budget = j.value("budget", c.budget);
    c.severities = j.value("severities", c.severities);
    c.methods = j.value("methods", c.methods);
    c.parallel = j.value("parallel", c.parallel);
    c.force_suffix = j.value("force_suffix", c.force_suffix);
    c.exact_match = j.value("exact_match", c.exact_match);
    c.save_images = j.value("save_images", c.save_images);
    c.synonyms = path_opt("synonyms");
    c.paraphrases = path_opt("paraphrases");
    c.semantic_variants = path_opt("semantic_variants");
    c.cache_dir = path_opt("cache_dir");
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.retries = j.value("retries", c.retries);
    c.max_new_tokens = j.value("max_new_tokens", c.max_new_tokens);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("manifest config: ") + e.what());
  }
  return c;
}

RunStatus cmd_corrupt(const RunConfig& c) {
  const auto kinds = corruption_kinds(c);
  std::vector<Severity> severities;
  for (int s : c.severities) severities.emplace_back(s);
  require(!severities.empty(), "--severities is empty");
  const Dataset dataset = load_dataset(c.dataset);
  auto oracle = open_oracle(c.oracle, oracle_config(c), AnswerKey(dataset));
  const CiderCorpus corpus = caption_corpus(dataset);
  const ScoringOptions scoring{c.exact_match, &corpus};

  Run run(c, kCorruptionResults);
  if (c.save_images) fs::create_directories(c.out / "images");
  Progress progress("corrupt", dataset.size());

  struct Slot {
    std::vector<nlohmann::json> rows, errors;
  };
  const std::size_t batch = std::max<std::size_t>(1, c.parallel) * 4;
  std::vector<nlohmann::json> all_rows;
  for (std::size_t start = 0; start < dataset.size(); start += batch) {
    const std::size_t n = std::min(batch, dataset.size() - start);
    std::vector<Slot> slots(n);
    parallel_for(n, c.parallel, [&](std::size_t k) {
      const std::size_t index = start + k;
      const VisualInstruction& vi = dataset.items[index];
      Slot& slot = slots[k];
      double before = 0.0;
      std::string clean_response;
      try {
        clean_response = oracle->query(vi.image, vi.prompt);
        before = score_response(vi.task, clean_response, vi.ground_truth, scoring);
      } catch (const Error& e) {
        slot.errors.push_back(error_row(vi.id, "clean", e));
        return;
      }
      const fs::path dir = fs::path("images") / (std::to_string(index) + "_" + safe_name(vi.id));
      if (c.save_images) fs::create_directories(c.out / dir);
      for (CorruptionKind kind : kinds) {
        for (Severity sev : severities) {
          const std::uint64_t seed = item_seed(c.seed, vi.id, kind, sev);
          try {
            const ImageBuf img = apply_corruption(vi.image, kind, sev, seed);
            nlohmann::json row = {{"id", vi.id},
                                  {"capability", std::string(to_string(vi.capability))},
                                  {"task", std::string(to_string(vi.task))},
                                  {"kind", std::string(to_string(kind))},
                                  {"severity", sev.level()},
                                  {"seed", seed},
                                  {"parameters", describe_parameters(kind, sev)}};
            if (c.save_images) {
              const fs::path rel = dir / (std::string(to_string(kind)) + "_" + std::to_string(sev.level()) + ".png");
              write_png(c.out / rel, img);
              row["image"] = rel.generic_string();
            }
            const std::string response = oracle->query(img, vi.prompt);
            row["response_clean"] = clean_response;
            row["response"] = response;
            row["score_before"] = before;
            row["score_after"] = score_response(vi.task, response, vi.ground_truth, scoring);
            slot.rows.push_back(std::move(row));
          } catch (const Error& e) {
            slot.errors.push_back(error_row(vi.id, std::string(to_string(kind)) + "@" + std::to_string(sev.level()), e));
          }
        }
      }
    });
    for (auto& slot : slots) {
      for (auto& r : slot.rows) {
        run.result(r);
        all_rows.push_back(std::move(r));
      }
      for (auto& e : slot.errors) run.error(e);
    }
    progress.tick(start + n);
  }
  run.table("table_corruption", corruption_table(summarize_corruption(all_rows)));
  return run.finish(*oracle, {{"corruption_table", kCorruptionTableVersion},
                              {"expected_rows", dataset.size() * kinds.size() * severities.size()}});
}

RunStatus cmd_attack_image(const RunConfig& c) {
  require(c.budget >= 3, "--budget must be at least 3");
  const Dataset dataset = load_dataset(c.dataset);
  auto oracle = open_oracle(c.oracle, oracle_config(c), AnswerKey(dataset));
  const CiderCorpus corpus = caption_corpus(dataset);
  AttackConfig acfg;
  acfg.total_budget = c.budget;
  acfg.scoring = ScoringOptions{c.exact_match, &corpus};

  Run run(c, kDecisionResults);
  if (c.save_images) fs::create_directories(c.out / "images");
  Progress progress("attack-image", dataset.size());
  std::vector<std::optional<nlohmann::json>> rows(dataset.size()), errors(dataset.size());
  std::atomic<std::size_t> done{0};
  parallel_for(dataset.size(), c.parallel, [&](std::size_t i) {
    const VisualInstruction& vi = dataset.items[i];
    const std::uint64_t seed = attack_seed(c.seed, vi.id);
    nlohmann::json row = {{"id", vi.id},
                          {"capability", std::string(to_string(vi.capability))},
                          {"task", std::string(to_string(vi.task))},
                          {"seed", seed}};
    try {
      AdvOracle ao(*oracle, vi, acfg.scoring);
      const AttackOutcome out = attack_pipeline(ao, seed, acfg);
      row["skipped"] = false;
      row["pre_score"] = out.pre_score;
      row["success"] = out.success;
      row["queries_used"] = out.queries_used;
      row["aed_par"] = optional_number(out.aed_par);
      row["aed_pb"] = optional_number(out.aed_pb);
      row["aed_ps"] = optional_number(out.aed_ps);
      if (c.save_images && out.success) {
        const std::string stem = std::to_string(i) + "_" + safe_name(vi.id);
        const std::pair<const char*, const std::optional<ImageBuf>*> stages[] = {
            {"par", &out.adv_par}, {"pb", &out.adv_par_boundary}, {"ps", &out.adv_par_surfree}};
        for (const auto& [name, img] : stages) {
          if (!*img) continue;
          const fs::path rel = fs::path("images") / (stem + "_" + name + ".png");
          write_png(c.out / rel, **img);
          row["images"][name] = rel.generic_string();
        }
      }
      rows[i] = std::move(row);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::PreAttackZero) {
        row["skipped"] = true;
        row["pre_score"] = 0.0;
        row["success"] = nullptr;
        rows[i] = std::move(row);
      } else {
        errors[i] = error_row(vi.id, "attack", e);
      }
    }
    progress.tick(++done);
  });
  std::vector<nlohmann::json> ok;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (rows[i]) {
      run.result(*rows[i]);
      ok.push_back(*rows[i]);
    }
    if (errors[i]) run.error(*errors[i]);
  }
  run.table("table_decision", decision_table(summarize_decision(ok)));
  return run.finish(*oracle, {{"init_cap", acfg.init_cap}, {"sigma_step", acfg.sigma_step}});
}

RunStatus cmd_attack_text(const RunConfig& c) {
  const auto methods = text_methods(c);
  const bool need_provider = std::any_of(methods.begin(), methods.end(),
                                         [](TextMethod m) { return level_of(m) == AttackLevel::Word; });
  const bool need_semantic = std::find(methods.begin(), methods.end(), TextMethod::Semantic) != methods.end();
  require(c.paraphrases.has_value(), "--paraphrases is required");
  require(!need_provider || c.synonyms, "word-level attacks need --synonyms");
  require(!need_semantic || c.semantic_variants, "the Semantic attack needs --semantic-variants");

  const auto paraphrases = load_variants(*c.paraphrases);
  std::optional<SubstitutionProvider> provider;
  if (c.synonyms) provider = SubstitutionProvider::load(*c.synonyms);
  std::optional<std::map<std::string, std::vector<std::string>>> semantic;
  if (c.semantic_variants) semantic = load_variants(*c.semantic_variants);

  const Dataset dataset = load_dataset(c.dataset);
  auto oracle = open_oracle(c.oracle, oracle_config(c), AnswerKey(dataset));
  const CiderCorpus corpus = caption_corpus(dataset);

  TextSuiteConfig tcfg;
  tcfg.attack.seed = c.seed;
  tcfg.attack.provider = provider ? &*provider : nullptr;
  tcfg.attack.semantic_variants = semantic ? &*semantic : nullptr;
  tcfg.paraphrases = &paraphrases;
  tcfg.scoring = ScoringOptions{c.exact_match, &corpus};

  const auto groups = group_by_subtask(dataset);
  Run run(c, kTextResults);
  Progress progress("attack-text", groups.size());
  std::vector<std::vector<nlohmann::json>> rows(groups.size());
  std::vector<std::optional<nlohmann::json>> errors(groups.size());
  std::atomic<std::size_t> done{0};
  parallel_for(groups.size(), c.parallel, [&](std::size_t g) {
    Dataset sub;
    for (const auto* vi : groups[g].items) sub.items.push_back(*vi);
    try {
      run_text_attack_suite(sub, *oracle, methods, tcfg, [&](const TextAttackResult& r) {
        nlohmann::json per = nlohmann::json::array();
        for (std::size_t i = 0; i < r.ids.size(); ++i) {
          per.push_back({{"id", r.ids[i]}, {"before", r.scores_before[i]}, {"after", r.scores_after[i]}});
        }
        rows[g].push_back({{"group", r.group},
                           {"prompt_rank", r.prompt_rank},
                           {"method", std::string(to_string(r.method))},
                           {"level", std::string(to_string(level_of(r.method)))},
                           {"original_segment", r.original_segment},
                           {"attacked_segment", r.attacked_segment},
                           {"per_instruction", per},
                           {"gamma_before", r.gamma_before},
                           {"gamma_after", r.gamma_after},
                           {"asdr", optional_number(r.asdr)},
                           {"trace", r.trace},
                           {"evaluations", r.evaluations}});
      });
    } catch (const Error& e) {
      rows[g].clear();
      errors[g] = error_row(groups[g].name, "group", e);
    }
    progress.tick(++done);
  });
  std::vector<nlohmann::json> ok;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (auto& r : rows[g]) {
      run.result(r);
      ok.push_back(std::move(r));
    }
    if (errors[g]) run.error(*errors[g]);
  }
  if (!ok.empty()) run.table("table_text", text_table(summarize_text(ok)));
  return run.finish(*oracle, {{"top_k", tcfg.top_k}, {"top_k_criterion", "highest clean cumulative score"}});
}

RunStatus cmd_bias(const RunConfig& c) {
  auto suite = load_bias_suite(c.dataset);
  const fs::path base = c.dataset.parent_path();
  auto oracle = open_oracle(c.oracle, oracle_config(c));
  Run run(c, kBiasResults);
  Progress progress("bias", suite.size());

  std::mutex mu;
  std::map<std::string, std::shared_ptr<const OracleImage>> images;
  const auto image_for = [&](const std::string& rel) {
    {
      std::lock_guard lock(mu);
      if (auto it = images.find(rel); it != images.end()) return it->second;
    }
    std::shared_ptr<const OracleImage> img;
    try {
      img = std::make_shared<const OracleImage>(read_image(base / rel));
    } catch (const Error& e) {
      throw Error(e.code() == ErrorCode::MissingFile ? ErrorCode::ImageNotFound : e.code(), rel);
    }
    std::lock_guard lock(mu);
    return images.emplace(rel, img).first->second;
  };

  std::vector<std::optional<nlohmann::json>> rows(suite.size()), errors(suite.size());
  std::atomic<std::size_t> done{0};
  parallel_for(suite.size(), c.parallel, [&](std::size_t i) {
    BiasInstruction& bi = suite[i];
    try {
      if (c.force_suffix && !bi.forcing_suffix_applied) {
        bi.question = append_forcing_suffix(bi.question);
        bi.forcing_suffix_applied = true;
      }
      const std::string response = oracle->query(*image_for(bi.image_path), bi.question);
      const PolarAnswer a = parse_polar_answer(response);
      nlohmann::json row = bias_record(bi);
      row["response"] = response;
      row["answer"] = std::string(to_string(a));
      row["correct"] = a == bi.expected;
      rows[i] = std::move(row);
    } catch (const Error& e) {
      errors[i] = error_row(bi.id, "query", e);
    }
    const std::size_t d = ++done;
    if (d % 256 == 0 || d == suite.size()) progress.tick(d);
  });
  std::vector<nlohmann::json> ok;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    if (rows[i]) {
      run.result(*rows[i]);
      ok.push_back(*rows[i]);
    }
    if (errors[i]) run.error(*errors[i]);
  }
  if (!ok.empty()) run.table("table_bias", bias_table(summarize_bias(ok)));
  return run.finish(*oracle, {{"forcing_suffix", std::string(kForcingSuffix)}});
}

RunStatus run_command(const RunConfig& c) {
  if (c.command == "corrupt") return cmd_corrupt(c);
  if (c.command == "attack-image") return cmd_attack_image(c);
  if (c.command == "attack-text") return cmd_attack_text(c);
  if (c.command == "bias") return cmd_bias(c);
  throw Error(ErrorCode::ConfigError, "unknown command '" + c.command + "'");
}

void cmd_report(const fs::path& results, const fs::path& out) {
  const Report rep = build_report(results);
  std::error_code ec;
  fs::create_directories(out, ec);
  write_text(out / "report.txt", rep.text);
  write_text(out / "radar.csv", rep.radar_csv);
}

}  // namespace avikit
