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

#include "avikit/oracle/reference.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "avikit/core/digest.hpp"
#include "avikit/core/error.hpp"
#include "avikit/scoring/score.hpp"

namespace avikit {
namespace {

std::string describe(const ReferenceKind& kind, std::uint64_t seed) {
  std::ostringstream os;
  os.precision(17);
  os << "ref:";
  if (const auto* t = std::get_if<ThresholdMeanIntensity>(&kind)) {
    os << "threshold:" << t->threshold;
  } else if (const auto* l = std::get_if<LinearBoundary>(&kind)) {
    // Weights can be large; identify them by digest.
    std::string raw;
    for (double v : l->w) raw.append(reinterpret_cast<const char*>(&v), sizeof v);
    os << "linear:" << sha256_hex(std::string_view(raw)).substr(0, 16) << ":" << l->b;
  } else if (const auto* k = std::get_if<KeywordEcho>(&kind)) {
    os << "echo";
    for (const auto& w : k->keywords) os << ":" << w;
  } else {
    const auto& t = std::get<LookupTable>(kind);
    os << "lookup:" << t.responses.size();
  }
  os << "#" << seed;
  return os.str();
}

void check(const ReferenceKind& kind) {
  if (const auto* t = std::get_if<ThresholdMeanIntensity>(&kind)) {
    if (!std::isfinite(t->threshold)) throw Error(ErrorCode::BadParameters, "threshold must be finite");
  } else if (const auto* l = std::get_if<LinearBoundary>(&kind)) {
    if (!std::isfinite(l->b)) throw Error(ErrorCode::BadParameters, "offset must be finite");
    for (double v : l->w) {
      if (!std::isfinite(v)) throw Error(ErrorCode::BadParameters, "weights must be finite");
    }
  }
}

std::string echo(const KeywordEcho& k, std::string_view prompt) {
  std::vector<std::string> wanted;
  for (const auto& w : k.keywords) wanted.push_back(normalize_text(w));
  std::string out;
  for (const auto& tok : normalized_tokens(prompt)) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), tok) == wanted.end()) continue;
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

}  // namespace

AnswerKey::AnswerKey(const Dataset& dataset) {
  for (const auto& vi : dataset.items) add(vi.prompt, vi.ground_truth.front());
}

void AnswerKey::add(const std::string& prompt, const std::string& answer) {
  auto [it, inserted] = answers_.emplace(prompt, answer);
  if (inserted) return;
  // Skip answers already listed.
  std::string_view rest = it->second;
  while (!rest.empty()) {
    const auto cut = rest.find(", ");
    if (rest.substr(0, cut) == answer) return;
    if (cut == std::string_view::npos) break;
    rest.remove_prefix(cut + 2);
  }
  it->second += ", " + answer;
}

std::string AnswerKey::answer(std::string_view prompt) const {
  const auto it = answers_.find(std::string(prompt));
  return it == answers_.end() ? std::string(kWrongAnswer) : it->second;
}

LookupTable load_lookup_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadParameters, "lookup table not found: " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (!j.is_object()) throw Error(ErrorCode::BadParameters, "lookup table must be a JSON object");
  LookupTable t;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw Error(ErrorCode::BadParameters, "lookup response for " + k + " is not a string");
    t.responses.emplace(k, v.get<std::string>());
  }
  return t;
}

LinearBoundary load_linear_boundary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadParameters, "linear boundary file not found: " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (!j.is_object() || !j.contains("w") || !j["w"].is_array() || !j.contains("b") || !j["b"].is_number()) {
    throw Error(ErrorCode::BadParameters, "linear boundary must be {\"w\": [...], \"b\": number}");
  }
  LinearBoundary lb;
  for (const auto& v : j["w"]) {
    if (!v.is_number()) throw Error(ErrorCode::BadParameters, "non-numeric weight");
    lb.w.push_back(v.get<double>());
  }
  lb.b = j["b"].get<double>();
  return lb;
}

ReferenceTransport::ReferenceTransport(ReferenceKind kind, std::uint64_t seed, AnswerKey key)
    : kind_(std::move(kind)), key_(std::move(key)) {
  check(kind_);
  id_ = describe(kind_, seed);
}

bool ReferenceTransport::truthful(const ImageBuf& image) const {
  if (const auto* t = std::get_if<ThresholdMeanIntensity>(&kind_)) {
    std::uint64_t sum = 0;
    for (auto v : image.data) sum += v;
    const double mean = image.data.empty() ? 0.0 : static_cast<double>(sum) / (255.0 * image.data.size());
    return mean <= t->threshold;
  }
  if (const auto* l = std::get_if<LinearBoundary>(&kind_)) {
    if (l->w.size() != image.data.size()) {
      throw Error(ErrorCode::BadParameters, "linear boundary has " + std::to_string(l->w.size()) +
                                                " weights for an image of " + std::to_string(image.data.size()) +
                                                " samples");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < l->w.size(); ++i) dot += l->w[i] * (image.data[i] / 255.0);
    return !(dot > l->b);
  }
  return true;
}

std::string ReferenceTransport::generate(const OracleImage& image, std::string_view prompt) {
  if (const auto* k = std::get_if<KeywordEcho>(&kind_)) return echo(*k, prompt);
  if (const auto* t = std::get_if<LookupTable>(&kind_)) {
    const auto it = t->responses.find(image.digest());
    return it == t->responses.end() ? "UNKNOWN" : it->second;
  }
  return truthful(image.pixels()) ? key_.answer(prompt) : std::string(kWrongAnswer);
}

std::unique_ptr<OracleHandle> make_reference_oracle(ReferenceKind kind, std::uint64_t seed, AnswerKey key,
                                                    OracleOptions options) {
  return std::make_unique<OracleHandle>(
      std::make_unique<ReferenceTransport>(std::move(kind), seed, std::move(key)), std::move(options));
}

}  // namespace avikit
