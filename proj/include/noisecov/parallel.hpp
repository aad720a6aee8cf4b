/*
 * Copyright 2026 The noisecov Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NOISECOV_PARALLEL_HPP_
#define NOISECOV_PARALLEL_HPP_

#include <exception>
#include <functional>
#include <thread>
#include <vector>

#include "noisecov/common.hpp"

namespace noisecov {

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Work is split into
/// contiguous blocks; callers write results into per-index slots, so the
/// outcome does not depend on the thread count. The exception of the lowest
/// failing index is rethrown.
inline void parallel_for(Index n, int threads, const std::function<void(Index)>& fn) {
  if (n <= 0) return;
  const Index workers = std::max<Index>(1, std::min<Index>(threads, n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto run = [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    run(0, n);
  } else {
    std::vector<std::thread> pool;
    for (Index w = 0; w < workers; ++w) {
      pool.emplace_back(run, n * w / workers, n * (w + 1) / workers);
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace noisecov

#endif  // NOISECOV_PARALLEL_HPP_
