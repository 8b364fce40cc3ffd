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

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>

#include "avikit/core/image.hpp"
#include "avikit/core/image_io.hpp"
#include "avikit/oracle/budget.hpp"

namespace avikit {

/// An image as the oracle receives it: pixels, their PNG encoding and the
/// SHA-256 of that encoding, computed once.
class OracleImage {
 public:
  explicit OracleImage(ImageBuf image);

  const ImageBuf& pixels() const noexcept { return image_; }
  const Bytes& png() const noexcept { return png_; }
  const std::string& digest() const noexcept { return digest_; }

 private:
  ImageBuf image_;
  Bytes png_;
  std::string digest_;
};

/// One way of reaching a model. Implementations must be safe to call from
/// several threads.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string generate(const OracleImage& image, std::string_view prompt) = 0;
  /// Identifies the model behind the transport; part of every cache key.
  virtual std::string id() const = 0;
};

/// Response store on disk, one file per key, written atomically.
class DiskCache {
 public:
  explicit DiskCache(std::filesystem::path dir);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& response) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path file_for(const std::string& key) const;
  std::filesystem::path dir_;
};

struct OracleOptions {
  /// Persistent response cache; nullopt keeps the cache in memory only.
  std::optional<std::filesystem::path> cache_dir;
  /// Upper bound on concurrent transport calls.
  std::size_t max_in_flight = 4;
};

struct OracleStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t transport_calls = 0;
};

/// Budgeted, cached channel to a model. Cache hits, including hits on a
/// request another thread already has in flight, never touch the budget;
/// a miss takes exactly one query from it before the transport is called.
class OracleHandle {
 public:
  explicit OracleHandle(std::unique_ptr<Transport> transport, OracleOptions options = {});
  ~OracleHandle();

  OracleHandle(const OracleHandle&) = delete;
  OracleHandle& operator=(const OracleHandle&) = delete;

  std::string query(const ImageBuf& image, std::string_view prompt, QueryBudget* budget = nullptr);

  /// bypass_cache forces a transport call (and a budget charge) even when the
  /// response is already cached; the fresh response replaces the cached one.
  std::string query(const OracleImage& image, std::string_view prompt, QueryBudget* budget = nullptr,
                    bool bypass_cache = false);

  std::string id() const { return transport_->id(); }
  OracleStats stats() const noexcept;

 private:
  std::string call_transport(const OracleImage& image, std::string_view prompt);

  std::unique_ptr<Transport> transport_;
  std::string id_;
  std::optional<DiskCache> disk_;
  std::counting_semaphore<> slots_;

  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> memory_;
  std::unordered_map<std::string, std::shared_future<std::string>> in_flight_;

  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> transport_calls_{0};
};

/// Disk-cache location: AVIBENCH_CACHE_DIR when set and non-empty, else `configured`.
std::optional<std::filesystem::path> resolve_cache_dir(std::optional<std::filesystem::path> configured);

}  // namespace avikit
