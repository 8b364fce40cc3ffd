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

#include "avikit/oracle/remote.hpp"

#include <httplib.h>

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <thread>

#include "avikit/core/digest.hpp"
#include "avikit/core/error.hpp"

namespace avikit {
namespace {

enum class Fault { None, Timeout, Transport, Protocol };

[[noreturn]] void raise(Fault f, const std::string& detail) {
  switch (f) {
    case Fault::Timeout: throw Error(ErrorCode::Timeout, detail);
    case Fault::Protocol: throw Error(ErrorCode::ProtocolViolation, detail);
    default: throw Error(ErrorCode::TransportError, detail);
  }
}

void sleep_backoff(const RemoteOptions& o, int attempt) {
  std::this_thread::sleep_for(o.backoff * (1LL << std::min(attempt, 16)));
}

}  // namespace

nlohmann::json generate_request(const OracleImage& image, std::string_view prompt, int max_new_tokens) {
  return {{"image_b64", base64_encode(image.png())},
          {"prompt", std::string(prompt)},
          {"max_new_tokens", max_new_tokens}};
}

std::optional<std::string> parse_generate_response(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (!j.is_object()) return std::nullopt;
  const auto it = j.find("text");
  if (it == j.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

HttpTransport::HttpTransport(std::string endpoint, RemoteOptions options)
    : endpoint_(std::move(endpoint)), options_(std::move(options)) {
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
  const auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos ||
      (endpoint_.compare(0, scheme_end, "http") != 0 && endpoint_.compare(0, scheme_end, "https") != 0)) {
    throw Error(ErrorCode::BadParameters, "endpoint must start with http:// or https://: " + endpoint_);
  }
  const auto path_start = endpoint_.find('/', scheme_end + 3);
  origin_ = endpoint_.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : endpoint_.substr(path_start);
  if (origin_.size() <= scheme_end + 3) throw Error(ErrorCode::BadParameters, "endpoint has no host");
}

std::string HttpTransport::generate(const OracleImage& image, std::string_view prompt) {
  const std::string body = generate_request(image, prompt, options_.max_new_tokens).dump();
  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout);
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  client.set_write_timeout(secs);
  if (options_.bearer_token) client.set_bearer_token_auth(*options_.bearer_token);

  Fault fault = Fault::None;
  std::string detail;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) sleep_backoff(options_, attempt - 1);
    auto res = client.Post(prefix_ + "/v1/generate", body, "application/json");
    if (!res) {
      const auto err = res.error();
      fault = (err == httplib::Error::Read || err == httplib::Error::Write ||
               err == httplib::Error::ConnectionTimeout)
                  ? Fault::Timeout
                  : Fault::Transport;
      detail = endpoint_ + ": " + httplib::to_string(err);
      continue;
    }
    const int status = res->status;
    if (status == 200) {
      if (auto text = parse_generate_response(res->body)) return *text;
      fault = Fault::Protocol;
      detail = endpoint_ + ": malformed response body";
      continue;
    }
    if (status == 429 || status >= 500) {
      fault = Fault::Transport;
      detail = endpoint_ + ": HTTP " + std::to_string(status);
      continue;
    }
    raise(Fault::Protocol, endpoint_ + ": HTTP " + std::to_string(status));
  }
  raise(fault, detail + " after " + std::to_string(options_.retries + 1) + " attempts");
}

bool HttpTransport::health() const {
  httplib::Client client(origin_);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout));
  if (options_.bearer_token) client.set_bearer_token_auth(*options_.bearer_token);
  auto res = client.Get(prefix_ + "/v1/health");
  if (!res || res->status != 200) return false;
  const auto j = nlohmann::json::parse(res->body, nullptr, false);
  return j.is_object() && j.value("status", "") == "ok";
}

SubprocessTransport::SubprocessTransport(std::string command, RemoteOptions options)
    : command_(std::move(command)), options_(std::move(options)) {
  if (command_.empty()) throw Error(ErrorCode::BadParameters, "empty subprocess command");
  std::signal(SIGPIPE, SIG_IGN);
}

SubprocessTransport::~SubprocessTransport() { stop(); }

void SubprocessTransport::start() {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) throw Error(ErrorCode::TransportError, "pipe failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw Error(ErrorCode::TransportError, "pipe failed");
  }
  const pid_t pid = fork();
  if (pid < 0) throw Error(ErrorCode::TransportError, "fork failed");
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  buffered_.clear();
}

void SubprocessTransport::stop() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    kill(pid_, SIGTERM);
    waitpid(pid_, nullptr, 0);
  }
  pid_ = -1;
  buffered_.clear();
}

std::string SubprocessTransport::round_trip(const std::string& line) {
  std::string_view out = line;
  while (!out.empty()) {
    const ssize_t n = write(to_child_, out.data(), out.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      raise(Fault::Transport, command_ + ": write to child failed");
    }
    out.remove_prefix(static_cast<std::size_t>(n));
  }
  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  for (;;) {
    if (const auto nl = buffered_.find('\n'); nl != std::string::npos) {
      std::string reply = buffered_.substr(0, nl);
      buffered_.erase(0, nl + 1);
      return reply;
    }
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) raise(Fault::Timeout, command_ + ": no response within timeout");
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) continue;
    char buf[65536];
    const ssize_t n = read(from_child_, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) raise(Fault::Transport, command_ + ": child closed its output");
    buffered_.append(buf, static_cast<std::size_t>(n));
  }
}

std::string SubprocessTransport::generate(const OracleImage& image, std::string_view prompt) {
  const std::string line = generate_request(image, prompt, options_.max_new_tokens).dump() + "\n";
  std::lock_guard lock(mu_);
  Fault fault = Fault::None;
  std::string detail;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) {
      stop();
      sleep_backoff(options_, attempt - 1);
    }
    try {
      if (pid_ < 0) start();
      const std::string reply = round_trip(line);
      if (auto text = parse_generate_response(reply)) return *text;
      fault = Fault::Protocol;
      detail = command_ + ": malformed response line";
    } catch (const Error& e) {
      fault = e.code() == ErrorCode::Timeout ? Fault::Timeout : Fault::Transport;
      detail = e.detail();
    }
  }
  stop();
  raise(fault, detail + " after " + std::to_string(options_.retries + 1) + " attempts");
}

}  // namespace avikit
