//
// Copyright 2026 The filaudit Authors
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
//

#ifndef FILAUDIT_PARALLEL_HPP
#define FILAUDIT_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fil {

namespace detail {

inline std::atomic<unsigned>& max_threads_storage() {
  static std::atomic<unsigned> value{std::thread::hardware_concurrency()};
  return value;
}

}  // namespace detail

// Global cap on the worker pool used by parallel_for (the CLI --threads flag).
inline void set_max_threads(unsigned n) {
  detail::max_threads_storage().store(n == 0 ? 1 : n);
}

inline unsigned max_threads() {
  unsigned n = detail::max_threads_storage().load();
  return n == 0 ? 1 : n;
}

// Runs fn(i) for every i in [0, count). Bodies must write only to disjoint
// slots; results must not depend on the schedule. The first exception thrown
// by any body is rethrown on the calling thread.
inline void parallel_for(std::size_t count,
                         const std::function<void(std::size_t)>& fn) {
  unsigned workers = max_threads();
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  if (workers > count) workers = static_cast<unsigned>(count);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto body = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace fil

#endif  // FILAUDIT_PARALLEL_HPP
