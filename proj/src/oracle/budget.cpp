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

#include "avikit/oracle/budget.hpp"

#include <algorithm>
#include <string>

#include "avikit/core/error.hpp"

namespace avikit {

bool QueryBudget::take_local() noexcept {
  std::size_t cur = used_.load(std::memory_order_acquire);
  while (cur < total_) {
    if (used_.compare_exchange_weak(cur, cur + 1, std::memory_order_acq_rel)) return true;
  }
  return false;
}

bool QueryBudget::try_consume() noexcept {
  if (!take_local()) return false;
  if (parent_ && !parent_->try_consume()) {
    give_back_local();
    return false;
  }
  return true;
}

void QueryBudget::consume() {
  if (!try_consume()) {
    throw Error(ErrorCode::BudgetExhausted, "all " + std::to_string(total_) + " queries used");
  }
}

std::size_t QueryBudget::remaining() const noexcept {
  const std::size_t u = used();
  std::size_t r = u >= total_ ? 0 : total_ - u;
  if (parent_) r = std::min(r, parent_->remaining());
  return r;
}

}  // namespace avikit
