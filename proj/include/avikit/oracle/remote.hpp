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

#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "avikit/oracle/oracle.hpp"

namespace avikit {

struct RemoteOptions {
  std::chrono::milliseconds timeout{120'000};
  /// Extra attempts after the first one.
  int retries = 2;
  /// First backoff delay; doubles on every retry.
  std::chrono::milliseconds backoff{500};
  int max_new_tokens = 128;
  /// Sent as "Authorization: Bearer <token>" when set.
  std::optional<std::string> bearer_token;
};

/// {"image_b64": ..., "prompt": ..., "max_new_tokens": ...}
nlohmann::json generate_request(const OracleImage& image, std::string_view prompt, int max_new_tokens);

/// Extracts "text" from a response body; nullopt when the body is not a JSON
/// object with a string "text" member.
std::optional<std::string> parse_generate_response(std::string_view body);

/// POST {endpoint}/v1/generate. 429 and 5xx are retried with backoff; other
/// 4xx fail at once with ProtocolViolation; a malformed 200 body is retried
/// and then reported as ProtocolViolation.
class HttpTransport : public Transport {
 public:
  /// endpoint: http[s]://host[:port][/prefix]. Throws Error(BadParameters).
  HttpTransport(std::string endpoint, RemoteOptions options = {});

  std::string generate(const OracleImage& image, std::string_view prompt) override;
  std::string id() const override { return "http:" + endpoint_; }

  /// GET {endpoint}/v1/health reports {"status": "ok"}.
  bool health() const;

 private:
  std::string endpoint_;
  std::string origin_;
  std::string prefix_;
  RemoteOptions options_;
};

/// Long-running child process speaking one JSON request per stdin line and
/// one JSON response per stdout line. Calls are serialized; a child that
/// dies, stalls past the timeout or answers garbage is restarted on retry.
class SubprocessTransport : public Transport {
 public:
  explicit SubprocessTransport(std::string command, RemoteOptions options = {});
  ~SubprocessTransport() override;

  std::string generate(const OracleImage& image, std::string_view prompt) override;
  std::string id() const override { return "cmd:" + command_; }

 private:
  void start();
  void stop();
  std::string round_trip(const std::string& line);

  std::string command_;
  RemoteOptions options_;
  std::mutex mu_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffered_;
};

}  // namespace avikit
