/* Copyright 2026 The segmini Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "segmini/parallel.h"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace segmini {
namespace {

std::atomic<int> g_thread_count{1};

}  // namespace

void SetThreadCount(int count) { g_thread_count = std::max(1, count); }

int ThreadCount() { return g_thread_count; }

void ParallelFor(int count, const std::function<void(int)>& body) {
  const int workers = std::min(ThreadCount(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  auto drain = [&] {
    for (int i = next++; i < count; i = next++) body(i);
  };
  for (int t = 0; t + 1 < workers; ++t) pool.emplace_back(drain);
  drain();
}

}  // namespace segmini
