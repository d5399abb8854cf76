// Copyright 2026 The ETID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ETID_PARALLEL_H_
#define ETID_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace etid {

struct ExecPolicy {
  bool parallel = false;
  // Worker cap; 0 means one worker per hardware thread.
  std::size_t jobs = 0;

  std::size_t Workers(std::size_t tasks) const {
    if (!parallel || tasks <= 1) return 1;
    std::size_t cap = jobs;
    if (cap == 0) cap = std::max(1u, std::thread::hardware_concurrency());
    return std::min(cap, tasks);
  }
};

// Runs fn(0..n-1). Each index must touch disjoint state. The first exception
// thrown by any task is rethrown after all workers have joined.
template <typename Fn>
void ParallelFor(std::size_t n, const ExecPolicy& policy, Fn&& fn) {
  const std::size_t workers = policy.Workers(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();  // joins
  if (error) std::rethrow_exception(error);
}

}  // namespace etid

#endif  // ETID_PARALLEL_H_
