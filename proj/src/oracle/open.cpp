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

#include "avikit/oracle/open.hpp"

#include <string>

#include "avikit/core/error.hpp"

namespace avikit {
namespace {

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

double parse_double(std::string_view s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(s), &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::BadParameters, "not a number: " + std::string(s));
}

std::vector<std::string> split_commas(std::string_view s) {
  std::vector<std::string> out;
  while (!s.empty()) {
    const auto cut = s.find(',');
    if (cut != 0) out.emplace_back(s.substr(0, cut));
    if (cut == std::string_view::npos) break;
    s.remove_prefix(cut + 1);
  }
  return out;
}

ReferenceKind parse_reference(std::string_view spec) {
  if (starts_with(spec, "threshold:")) return ThresholdMeanIntensity{parse_double(spec.substr(10))};
  if (starts_with(spec, "linear:")) return load_linear_boundary(std::string(spec.substr(7)));
  if (spec == "echo") return KeywordEcho{};
  if (starts_with(spec, "echo:")) return KeywordEcho{split_commas(spec.substr(5))};
  if (starts_with(spec, "lookup:")) return load_lookup_table(std::string(spec.substr(7)));
  throw Error(ErrorCode::BadParameters, "unknown reference oracle: ref:" + std::string(spec));
}

}  // namespace

std::unique_ptr<OracleHandle> open_oracle(std::string_view spec, const OracleConfig& config, const AnswerKey& key) {
  OracleOptions options = config.options;
  options.cache_dir = resolve_cache_dir(options.cache_dir);
  std::unique_ptr<Transport> transport;
  if (starts_with(spec, "http://") || starts_with(spec, "https://")) {
    transport = std::make_unique<HttpTransport>(std::string(spec), config.remote);
  } else if (starts_with(spec, "cmd:")) {
    transport = std::make_unique<SubprocessTransport>(std::string(spec.substr(4)), config.remote);
  } else if (starts_with(spec, "ref:")) {
    transport = std::make_unique<ReferenceTransport>(parse_reference(spec.substr(4)), config.seed, key);
  } else {
    throw Error(ErrorCode::BadParameters, "unrecognized oracle spec: " + std::string(spec));
  }
  return std::make_unique<OracleHandle>(std::move(transport), std::move(options));
}

}  // namespace avikit
