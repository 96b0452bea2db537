// Copyright (c) 2026, The ESSL Authors. All rights reserved.
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


#ifndef ESSL_THREAD_POOL_HPP_
#define ESSL_THREAD_POOL_HPP_

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace essl {

/// Fixed set of worker threads that run index-parallel loops. The calling
/// thread participates, so a pool of size n spawns n - 1 threads.
class ThreadPool {
 public:
  /// `workers` <= 0 selects the hardware concurrency.
  explicit ThreadPool(int workers);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const noexcept { return size_; }

  /// Runs fn(i) for every i in [0, n) and returns when all calls finished.
  /// The first exception thrown by any call is rethrown here after the loop
  /// drains; remaining indices are skipped once an error is seen.
  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

  static int default_workers() noexcept;

 private:
  struct Job;
  void worker_main();
  static void run_job(Job& job);

  int size_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable wake_;
  std::condition_variable done_;
  Job* job_ = nullptr;
  std::size_t generation_ = 0;
  int busy_ = 0;
  bool stop_ = false;
};

}  // namespace essl

#endif  // ESSL_THREAD_POOL_HPP_
