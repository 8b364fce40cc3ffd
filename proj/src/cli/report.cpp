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

#include "avikit/cli/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "avikit/attack/text.hpp"
#include "avikit/core/error.hpp"
#include "avikit/core/instruction.hpp"
#include "avikit/corruption/corruption.hpp"

namespace avikit {
namespace {

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::optional<double> opt_number(const nlohmann::json& row, const char* key) {
  const auto it = row.find(key);
  if (it == row.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

// Ranks of `name` in a fixed ordering, unknown names last.
template <typename List>
std::size_t rank_in(const List& order, std::string_view name) {
  std::size_t i = 0;
  for (const auto& o : order) {
    if (to_string(o) == name) return i;
    ++i;
  }
  return i;
}

template <typename List>
std::vector<std::string> ordered_keys(const std::map<std::string, std::vector<ScorePair>>& m, const List& order) {
  std::vector<std::string> keys;
  for (const auto& [k, v] : m) keys.push_back(k);
  std::stable_sort(keys.begin(), keys.end(),
                   [&](const std::string& a, const std::string& b) { return rank_in(order, a) < rank_in(order, b); });
  return keys;
}

std::optional<AsdrResult> try_asdr(const std::vector<ScorePair>& pairs) {
  try {
    return asdr(pairs);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllZeroBaseline) throw;
    return std::nullopt;
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

template <typename Fn>
void wrap_row_errors(const char* what, Fn&& fn) {
  try {
    fn();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorCode::MalformedRecord, path.string() + ":" + std::to_string(lineno) + ": not a JSON object");
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::string format_number(std::optional<double> v, int digits) {
  if (!v) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
  // Avoid "-0.00".
  if (std::string_view(buf).find_first_not_of("-0.") == std::string_view::npos && buf[0] == '-') {
    return std::string(buf + 1);
  }
  return buf;
}

std::string TextTable::render() const {
  std::vector<std::size_t> width(header.size(), 0);
  const auto measure = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) {
      width[i] = std::max(width[i], codepoint_count(r[i]));
    }
  };
  measure(header);
  for (const auto& r : rows) measure(r);
  std::ostringstream out;
  if (!title.empty()) out << title << '\n';
  const auto line = [&](const std::vector<std::string>& r) {
    std::string s;
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string cell = i < r.size() ? r[i] : "";
      const std::string pad(width[i] - codepoint_count(cell), ' ');
      if (i) s += "  ";
      s += i == 0 ? cell + pad : pad + cell;
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    out << s << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out << std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
  return out.str();
}

std::string TextTable::csv() const {
  std::ostringstream out;
  const auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_field(r[i]);
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

CorruptionSummary summarize_corruption(std::span<const nlohmann::json> rows) {
  std::map<std::string, std::vector<ScorePair>> pairs;
  wrap_row_errors("corruption row", [&] {
    for (const auto& r : rows) {
      pairs[r.at("kind").get<std::string>()].push_back({r.at("score_before").get<double>(), r.at("score_after").get<double>()});
    }
  });
  CorruptionSummary s;
  std::vector<double> values;
  for (const auto& k : ordered_keys(pairs, all_corruptions())) {
    auto a = try_asdr(pairs[k]);
    if (a) values.push_back(a->value);
    s.kinds.emplace_back(k, a);
  }
  s.average = mean_of(values);
  return s;
}

TextTable corruption_table(const CorruptionSummary& s) {
  TextTable t{"Image corruptions (ASDR)", {"Corruption", "ASDR", "Used", "Excluded"}, {}};
  for (const auto& [name, a] : s.kinds) {
    t.rows.push_back({name, format_number(a ? std::optional(a->value) : std::nullopt),
                      a ? std::to_string(a->used) : "0", a ? std::to_string(a->excluded) : "-"});
  }
  t.rows.push_back({"Ave.", format_number(s.average), "", ""});
  return t;
}

DecisionSummary summarize_decision(std::span<const nlohmann::json> rows) {
  struct Acc {
    std::size_t attempted = 0, skipped = 0, successes = 0;
    std::vector<double> par, pb, ps;
  };
  std::map<std::string, Acc> acc;
  wrap_row_errors("decision row", [&] {
    for (const auto& r : rows) {
      Acc& a = acc[r.at("capability").get<std::string>()];
      if (r.value("skipped", false)) {
        ++a.skipped;
        continue;
      }
      ++a.attempted;
      if (!r.at("success").get<bool>()) continue;
      ++a.successes;
      if (auto v = opt_number(r, "aed_par")) a.par.push_back(*v);
      if (auto v = opt_number(r, "aed_pb")) a.pb.push_back(*v);
      if (auto v = opt_number(r, "aed_ps")) a.ps.push_back(*v);
    }
  });
  std::vector<std::string> caps;
  for (const auto& [k, v] : acc) caps.push_back(k);
  std::stable_sort(caps.begin(), caps.end(), [](const std::string& a, const std::string& b) {
    return rank_in(kAllCapabilities, a) < rank_in(kAllCapabilities, b);
  });

  DecisionSummary s;
  std::vector<double> asrs, par, pb, ps;
  for (const auto& c : caps) {
    const Acc& a = acc[c];
    DecisionGroup g{c, a.attempted, a.skipped, a.successes, std::nullopt, mean_of(a.par), mean_of(a.pb), mean_of(a.ps)};
    if (a.attempted) g.asr = static_cast<double>(a.successes) / static_cast<double>(a.attempted);
    if (g.asr) asrs.push_back(*g.asr);
    if (g.aed_par) par.push_back(*g.aed_par);
    if (g.aed_pb) pb.push_back(*g.aed_pb);
    if (g.aed_ps) ps.push_back(*g.aed_ps);
    s.groups.push_back(g);
  }
  s.average_asr = mean_of(asrs);
  s.average_aed_par = mean_of(par);
  s.average_aed_pb = mean_of(pb);
  s.average_aed_ps = mean_of(ps);
  return s;
}

TextTable decision_table(const DecisionSummary& s) {
  TextTable t{"Decision-based image attacks", {"Capability", "Attacked", "Skipped", "ASR", "P", "P+B", "P+S"}, {}};
  for (const auto& g : s.groups) {
    std::string label = std::string(g.capability);
    if (const auto c = parse_capability(g.capability)) label = std::string(short_label(*c));
    t.rows.push_back({label, std::to_string(g.attempted), std::to_string(g.skipped), format_number(g.asr),
                      format_number(g.aed_par, 4), format_number(g.aed_pb, 4), format_number(g.aed_ps, 4)});
  }
  t.rows.push_back({"Ave.", "", "", format_number(s.average_asr), format_number(s.average_aed_par, 4),
                    format_number(s.average_aed_pb, 4), format_number(s.average_aed_ps, 4)});
  return t;
}

TextSummary summarize_text(std::span<const nlohmann::json> rows) {
  std::map<std::string, std::vector<ScorePair>> by_method;
  std::map<std::string, std::map<std::string, std::vector<ScorePair>>> by_group;
  wrap_row_errors("text row", [&] {
    for (const auto& r : rows) {
      const std::string method = r.at("method").get<std::string>();
      const std::string group = r.at("group").get<std::string>();
      auto& m = by_method[method];
      auto& g = by_group[group][method];
      for (const auto& p : r.at("per_instruction")) {
        const ScorePair sp{p.at("before").get<double>(), p.at("after").get<double>()};
        m.push_back(sp);
        g.push_back(sp);
      }
    }
  });
  TextSummary s;
  std::vector<double> values;
  for (const auto& m : ordered_keys(by_method, kAllTextMethods)) {
    auto a = try_asdr(by_method[m]);
    if (a) values.push_back(a->value);
    s.methods.emplace_back(m, a);
  }
  for (const auto& [group, methods] : by_group) {
    for (const auto& [m, pairs] : methods) {
      const auto a = try_asdr(pairs);
      s.by_group[group][m] = a ? std::optional(a->value) : std::nullopt;
    }
  }
  s.average = mean_of(values);
  return s;
}

TextTable text_table(const TextSummary& s) {
  TextTable t{"Text attacks (ASDR)", {"Method", "Level"}, {}};
  for (const auto& [g, m] : s.by_group) t.header.push_back(g);
  t.header.push_back("All");
  for (const auto& [method, a] : s.methods) {
    const auto parsed = parse_text_method(method);
    std::vector<std::string> row{method, parsed ? std::string(to_string(level_of(*parsed))) : "?"};
    for (const auto& [g, m] : s.by_group) {
      const auto it = m.find(method);
      row.push_back(it == m.end() ? "" : format_number(it->second));
    }
    row.push_back(format_number(a ? std::optional(a->value) : std::nullopt));
    t.rows.push_back(std::move(row));
  }
  std::vector<std::string> last{"Ave. ASDR", ""};
  last.resize(t.header.size() - 1);
  last.push_back(format_number(s.average));
  t.rows.push_back(std::move(last));
  return t;
}

BiasReport summarize_bias(std::span<const nlohmann::json> rows) {
  std::vector<BiasResult> results;
  wrap_row_errors("bias row", [&] {
    for (const auto& r : rows) {
      BiasResult b;
      const auto cat = parse_bias_category(r.at("category").get<std::string>());
      if (!cat) throw Error(ErrorCode::MalformedRecord, "unknown bias category " + r.at("category").dump());
      b.instruction.id = r.value("id", "");
      b.instruction.category = *cat;
      b.instruction.subject = r.at("subject").get<std::string>();
      const std::string expected = r.at("expected").get<std::string>();
      b.instruction.expected = expected == "Yes" ? PolarAnswer::Yes : PolarAnswer::No;
      const std::string answer = r.at("answer").get<std::string>();
      b.answer = answer == "Yes" ? PolarAnswer::Yes : answer == "No" ? PolarAnswer::No : PolarAnswer::Unparseable;
      results.push_back(std::move(b));
    }
  });
  return score_bias(results);
}

TextTable bias_table(const BiasReport& r) {
  TextTable t{"Content bias (accuracy)", {"Content", "Correct", "Total", "Accuracy"}, {}};
  for (const auto& row : r.rows) {
    t.rows.push_back({row.label, row.group ? "" : std::to_string(row.correct), row.group ? "" : std::to_string(row.total),
                      format_number(row.accuracy)});
  }
  return t;
}

Report build_report(const std::filesystem::path& dir) {
  std::map<std::string, std::vector<std::filesystem::path>> files;
  std::error_code ec;
  if (std::filesystem::is_directory(dir, ec)) {
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
      if (!e.is_regular_file()) continue;
      const std::string name = e.path().filename().string();
      if (name == kCorruptionResults || name == kDecisionResults || name == kTextResults || name == kBiasResults) {
        files[name].push_back(e.path());
      }
    }
  }
  if (files.empty()) throw Error(ErrorCode::NoResults, "no result files under " + dir.string());
  const auto rows_of = [&](std::string_view name) {
    std::vector<nlohmann::json> rows;
    auto it = files.find(std::string(name));
    if (it == files.end()) return rows;
    std::sort(it->second.begin(), it->second.end());
    for (const auto& p : it->second) {
      auto part = read_jsonl(p);
      rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return rows;
  };

  Report rep;
  std::ostringstream text;
  if (const auto rows = rows_of(kCorruptionResults); !rows.empty()) {
    const auto s = summarize_corruption(rows);
    text << corruption_table(s).render() << '\n';
    if (s.average) rep.scores[Family::Corruption] = asdr_robustness(*s.average);
  }
  if (const auto rows = rows_of(kDecisionResults); !rows.empty()) {
    const auto s = summarize_decision(rows);
    text << decision_table(s).render() << '\n';
    if (s.average_asr) rep.scores[Family::Decision] = decision_robustness(*s.average_asr);
  }
  if (const auto rows = rows_of(kTextResults); !rows.empty()) {
    const auto s = summarize_text(rows);
    text << text_table(s).render() << '\n';
    if (s.average) rep.scores[Family::Text] = asdr_robustness(*s.average);
  }
  if (const auto rows = rows_of(kBiasResults); !rows.empty()) {
    const auto r = summarize_bias(rows);
    text << bias_table(r).render() << '\n';
    rep.scores[Family::Bias] = r.average;
  }
  if (rep.scores.empty()) throw Error(ErrorCode::NoResults, "result files under " + dir.string() + " hold no scorable rows");

  TextTable robustness{"Robustness", {"Family", "Score"}, {}};
  std::ostringstream radar;
  radar << "family,score\n";
  for (const auto& [family, score] : rep.scores) {
    robustness.rows.push_back({std::string(to_string(family)), format_number(score)});
    radar << to_string(family) << ',' << format_number(score, 4) << '\n';
  }
  text << robustness.render();
  rep.text = text.str();
  rep.radar_csv = radar.str();
  return rep;
}

}  // namespace avikit
