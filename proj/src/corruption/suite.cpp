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

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <thread>

#include "avikit/core/error.hpp"
#include "avikit/corruption/corruption.hpp"

namespace avikit {

void corruption_suite(const Dataset& dataset, std::span<const CorruptionKind> kinds,
                      std::span<const Severity> severities, std::uint64_t seed,
                      const std::function<void(const CorruptionItem&)>& sink, std::size_t parallel) {
  const std::size_t per_item = kinds.size() * severities.size();
  const std::size_t total = dataset.size() * per_item;
  const auto make = [&](std::size_t flat) {
    const VisualInstruction& vi = dataset.items[flat / per_item];
    const CorruptionKind kind = kinds[(flat % per_item) / severities.size()];
    const Severity severity = severities[flat % severities.size()];
    CorruptionItem item;
    item.source = &vi;
    item.kind = kind;
    item.severity = severity;
    item.seed = item_seed(seed, vi.id, kind, severity);
    try {
      item.image = apply_corruption(vi.image, kind, severity, item.seed);
    } catch (const Error& e) {
      throw Error(e.code(), vi.id + " " + std::string(to_string(kind)) + "@" + std::to_string(severity.level()) +
                                ": " + e.detail());
    }
    return item;
  };

  parallel = std::max<std::size_t>(1, parallel);
  if (parallel == 1) {
    for (std::size_t i = 0; i < total; ++i) sink(make(i));
    return;
  }

  // Batches are computed concurrently and drained in order.
  const std::size_t batch = 32 * parallel;
  std::vector<std::optional<CorruptionItem>> slots(batch);
  for (std::size_t start = 0; start < total; start += batch) {
    const std::size_t n = std::min(batch, total - start);
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    const auto work = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          slots[i] = make(start + i);
        } catch (...) {
          errors[i] = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(parallel, n); ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < n; ++i) {
      // Items before the first failure are still delivered, as in a serial run.
      if (errors[i]) std::rethrow_exception(errors[i]);
      sink(*slots[i]);
      slots[i].reset();
    }
  }
}

}  // namespace avikit
