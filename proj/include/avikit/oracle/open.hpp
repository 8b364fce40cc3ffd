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

#include <cstdint>
#include <memory>
#include <string_view>

#include "avikit/oracle/oracle.hpp"
#include "avikit/oracle/reference.hpp"
#include "avikit/oracle/remote.hpp"

namespace avikit {

struct OracleConfig {
  RemoteOptions remote;
  OracleOptions options;
  std::uint64_t seed = 0;
};

/// Opens an oracle from its command-line spelling:
///   http://host:port[/prefix]   HTTP service
///   cmd:<shell command>         line-oriented subprocess
///   ref:threshold:<t>           ThresholdMeanIntensity
///   ref:linear:<json file>      LinearBoundary
///   ref:echo[:<w1,w2,...>]      KeywordEcho
///   ref:lookup:<json file>      LookupTable
/// The disk cache location honours AVIBENCH_CACHE_DIR.
/// Throws Error(BadParameters) for anything else.
std::unique_ptr<OracleHandle> open_oracle(std::string_view spec, const OracleConfig& config,
                                          const AnswerKey& key = {});

}  // namespace avikit
