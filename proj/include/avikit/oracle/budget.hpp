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

namespace avikit {

/// Query allowance shared by concurrent callers. A child budget charges its
/// parent as well, so per-stage pools can never overdraw the per-item total.
class QueryBudget {
 public:
  explicit QueryBudget(std::size_t total, QueryBudget* parent = nullptr) noexcept
      : total_(total), parent_(parent) {}

  QueryBudget(const QueryBudget&) = delete;
  QueryBudget& operator=(const QueryBudget&) = delete;

  /// Takes one query from this budget and every ancestor, or nothing.
  bool try_consume() noexcept;

  /// Throws Error(BudgetExhausted) when try_consume() fails.
  void consume();

  std::size_t total() const noexcept { return total_; }
  std::size_t used() const noexcept { return used_.load(std::memory_order_acquire); }
  /// Remaining here, further limited by every ancestor.
  std::size_t remaining() const noexcept;
  bool exhausted() const noexcept { return remaining() == 0; }

 private:
  bool take_local() noexcept;
  void give_back_local() noexcept { used_.fetch_sub(1, std::memory_order_acq_rel); }

  const std::size_t total_;
  QueryBudget* const parent_;
  std::atomic<std::size_t> used_{0};
};

}  // namespace avikit
