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

#ifndef SEGMINI_PARALLEL_H_
#define SEGMINI_PARALLEL_H_

#include <functional>

namespace segmini {

// Process-wide worker cap. Defaults to 1 so results are reproducible
// bit-for-bit regardless of machine.
void SetThreadCount(int count);
int ThreadCount();

// Runs body(i) for i in [0, count). Each index is processed by exactly one
// worker, so per-index results are identical for any thread count.
void ParallelFor(int count, const std::function<void(int)>& body);

}  // namespace segmini

#endif  // SEGMINI_PARALLEL_H_
