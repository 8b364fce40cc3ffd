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

// avikit command-line entry point.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "avikit/bias/bias.hpp"
#include "avikit/cli/commands.hpp"
#include "avikit/core/error.hpp"

namespace {

using avikit::RunConfig;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Flags {
  std::string severities = "1,3,5";
  std::string methods;
  std::string force_suffix = "true";
  bool no_images = false;
  std::string cache_dir, synonyms, paraphrases, semantic;
};

void add_run_flags(CLI::App* sub, RunConfig& c, Flags& f) {
  sub->add_option("--dataset", c.dataset, "Dataset JSONL (bias: suite JSONL)")->required();
  sub->add_option("--oracle", c.oracle, "URL, cmd:<command> or ref:<kind>[:args]")->required();
  sub->add_option("--out", c.out, "Output directory")->required();
  sub->add_option("--seed", c.seed, "Run seed")->capture_default_str();
  sub->add_option("--budget", c.budget, "Queries per attacked item")->capture_default_str();
  sub->add_option("--severities", f.severities, "Corruption severities (CSV of 1,3,5)")->capture_default_str();
  sub->add_option("--methods", f.methods, "Corruption kinds or text attacks (CSV); default all");
  sub->add_option("--parallel", c.parallel, "Worker threads")->capture_default_str();
  sub->add_option("--force-suffix", f.force_suffix, "Append the yes/no forcing sentence to bias questions")
      ->capture_default_str();
  sub->add_flag("--exact-match", c.exact_match, "Exact match instead of containment for accuracy tasks");
  sub->add_flag("--no-images", f.no_images, "Do not write perturbed images");
  sub->add_option("--cache-dir", f.cache_dir, "Response cache directory (AVIBENCH_CACHE_DIR wins)");
  sub->add_option("--timeout", c.timeout_s, "Seconds per model call")->capture_default_str();
  sub->add_option("--retries", c.retries, "Retries per model call")->capture_default_str();
  sub->add_option("--max-new-tokens", c.max_new_tokens, "Generation limit sent to the model")->capture_default_str();
  sub->add_option("--synonyms", f.synonyms, "Substitution table (TSV) for word-level attacks");
  sub->add_option("--paraphrases", f.paraphrases, "Segment -> 9 paraphrases (JSON)");
  sub->add_option("--semantic-variants", f.semantic, "Segment -> rewritten variants (JSON)");
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw avikit::Error(avikit::ErrorCode::ConfigError, "--force-suffix expects true or false, got '" + s + "'");
}

void finish_config(RunConfig& c, const Flags& f, const std::string& command) {
  c.command = command;
  c.severities.clear();
  for (const auto& s : split_csv(f.severities)) {
    try {
      c.severities.push_back(std::stoi(s));
    } catch (const std::exception&) {
      throw avikit::Error(avikit::ErrorCode::ConfigError, "bad severity '" + s + "'");
    }
  }
  c.methods = split_csv(f.methods);
  c.force_suffix = parse_bool(f.force_suffix);
  c.save_images = !f.no_images;
  if (!f.cache_dir.empty()) c.cache_dir = f.cache_dir;
  if (!f.synonyms.empty()) c.synonyms = f.synonyms;
  if (!f.paraphrases.empty()) c.paraphrases = f.paraphrases;
  if (!f.semantic.empty()) c.semantic_variants = f.semantic;
}

int report_status(const avikit::RunStatus& s) {
  std::fprintf(stderr, "%zu results, %zu errors\n", s.results, s.errors);
  return s.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"avikit: adversarial visual-instruction robustness benchmark"};
  app.set_version_flag("--version", std::string(avikit::kVersion));
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub run_cmds[] = {
      {"corrupt", "Corrupt every image and score the model before and after"},
      {"attack-image", "Decision-based image attacks (init, PAR, Boundary, SurFree)"},
      {"attack-text", "Attacks on the prompt segment shared within each subtask"},
      {"bias", "Polar content-bias probes"},
  };
  RunConfig config;
  Flags flags;
  std::vector<CLI::App*> run_subs;
  for (const auto& s : run_cmds) {
    run_subs.push_back(app.add_subcommand(s.name, s.help));
    add_run_flags(run_subs.back(), config, flags);
  }

  std::string manifest;
  auto* rerun = app.add_subcommand("rerun", "Repeat a run from its manifest.json");
  rerun->add_option("manifest", manifest, "manifest.json of an earlier run")->required();
  std::string rerun_out;
  rerun->add_option("--out", rerun_out, "Write to this directory instead of the recorded one");

  std::string results_dir, report_out;
  auto* report = app.add_subcommand("report", "Consolidated tables and radar CSV from result directories");
  report->add_option("results", results_dir, "Directory searched for result files")->required();
  report->add_option("--out", report_out, "Output directory (default: the results directory)");

  avikit::BiasSources sources;
  std::string suite_out, build_suffix = "true";
  auto* build = app.add_subcommand("build-bias", "Expand bias templates into a suite JSONL");
  build->add_option("--templates", sources.templates, "Category -> template (JSON)")->required();
  build->add_option("--paraphrases", sources.paraphrases, "Template -> 10 question forms (JSON)")->required();
  build->add_option("--subjects", sources.subjects, "Subjects JSONL")->required();
  build->add_option("--images", sources.images, "Image manifest JSONL")->required();
  build->add_option("--out", suite_out, "Suite JSONL to write")->required();
  build->add_option("--force-suffix", build_suffix, "Append the yes/no forcing sentence")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? avikit::kExitOk : avikit::kExitConfig;
  }

  try {
    for (std::size_t i = 0; i < run_subs.size(); ++i) {
      if (run_subs[i]->parsed()) {
        finish_config(config, flags, run_cmds[i].name);
        return report_status(avikit::run_command(config));
      }
    }
    if (rerun->parsed()) {
      std::ifstream in(manifest);
      if (!in) throw avikit::Error(avikit::ErrorCode::MissingFile, manifest);
      const auto j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
      if (j.is_discarded() || !j.contains("config")) {
        throw avikit::Error(avikit::ErrorCode::ConfigError, manifest + ": not a run manifest");
      }
      RunConfig c = RunConfig::from_json(j["config"]);
      if (!rerun_out.empty()) c.out = rerun_out;
      return report_status(avikit::run_command(c));
    }
    if (report->parsed()) {
      avikit::cmd_report(results_dir, report_out.empty() ? results_dir : report_out);
      return avikit::kExitOk;
    }
    if (build->parsed()) {
      const auto suite = avikit::build_bias_suite(sources, parse_bool(build_suffix));
      avikit::write_bias_suite(suite_out, suite);
      std::fprintf(stderr, "%zu instructions\n", suite.size());
      return avikit::kExitOk;
    }
  } catch (const avikit::Error& e) {
    std::fprintf(stderr, "avikit: %s\n", e.what());
    return avikit::exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "avikit: %s\n", e.what());
    return avikit::kExitRuntime;
  }
  return avikit::kExitConfig;
}
