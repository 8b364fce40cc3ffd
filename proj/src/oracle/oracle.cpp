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

#include "avikit/oracle/oracle.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <random>

#include "avikit/core/digest.hpp"
#include "avikit/core/error.hpp"

namespace avikit {
namespace {

// The in-memory map is dropped wholesale past this size; the disk cache
// (when enabled) still answers.
constexpr std::size_t kMemoryEntries = 1 << 20;

}  // namespace

OracleImage::OracleImage(ImageBuf image) : image_(std::move(image)) {
  png_ = encode_png(image_);
  digest_ = sha256_hex(png_);
}

DiskCache::DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path DiskCache::file_for(const std::string& key) const {
  const std::string h = sha256_hex(std::string_view(key));
  return dir_ / h.substr(0, 2) / (h + ".txt");
}

std::optional<std::string> DiskCache::get(const std::string& key) const {
  std::ifstream in(file_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void DiskCache::put(const std::string& key, const std::string& response) const {
  const auto path = file_for(key);
  std::filesystem::create_directories(path.parent_path());
  thread_local std::mt19937_64 gen(std::random_device{}());
  const auto tmp = path.string() + ".tmp" + std::to_string(gen());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write cache entry " + tmp);
    out << response;
  }
  std::filesystem::rename(tmp, path);
}

OracleHandle::OracleHandle(std::unique_ptr<Transport> transport, OracleOptions options)
    : transport_(std::move(transport)),
      id_(transport_->id()),
      slots_(static_cast<std::ptrdiff_t>(options.max_in_flight == 0 ? 1 : options.max_in_flight)) {
  if (options.cache_dir) disk_.emplace(*options.cache_dir);
}

OracleHandle::~OracleHandle() = default;

std::string OracleHandle::query(const ImageBuf& image, std::string_view prompt, QueryBudget* budget) {
  return query(OracleImage(image), prompt, budget);
}

std::string OracleHandle::query(const OracleImage& image, std::string_view prompt, QueryBudget* budget,
                                bool bypass_cache) {
  std::string key = image.digest();
  key += '\n';
  key += prompt;

  std::promise<std::string> promise;
  std::shared_future<std::string> pending;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    if (!bypass_cache) {
      if (auto it = memory_.find(key); it != memory_.end()) {
        hits_.fetch_add(1);
        return it->second;
      }
      if (auto it = in_flight_.find(key); it != in_flight_.end()) {
        pending = it->second;
      } else {
        in_flight_.emplace(key, promise.get_future().share());
        owner = true;
      }
    }
  }
  if (pending.valid()) {
    hits_.fetch_add(1);
    return pending.get();
  }

  const std::string disk_key = id_ + '\n' + key;
  try {
    std::optional<std::string> response;
    if (!bypass_cache && disk_) response = disk_->get(disk_key);
    if (response) {
      hits_.fetch_add(1);
    } else {
      if (budget) budget->consume();
      misses_.fetch_add(1);
      response = call_transport(image, prompt);
      if (disk_) disk_->put(disk_key, *response);
    }
    {
      std::lock_guard lock(mu_);
      if (memory_.size() >= kMemoryEntries) memory_.clear();
      memory_[key] = *response;
      if (owner) in_flight_.erase(key);
    }
    if (owner) promise.set_value(*response);
    return *response;
  } catch (...) {
    if (owner) {
      {
        std::lock_guard lock(mu_);
        in_flight_.erase(key);
      }
      promise.set_exception(std::current_exception());
    }
    throw;
  }
}

std::string OracleHandle::call_transport(const OracleImage& image, std::string_view prompt) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{slots_};
  transport_calls_.fetch_add(1);
  return transport_->generate(image, prompt);
}

OracleStats OracleHandle::stats() const noexcept {
  return {hits_.load(), misses_.load(), transport_calls_.load()};
}

std::optional<std::filesystem::path> resolve_cache_dir(std::optional<std::filesystem::path> configured) {
  if (const char* env = std::getenv("AVIBENCH_CACHE_DIR"); env && *env) return std::filesystem::path(env);
  return configured;
}

}  // namespace avikit
