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

#ifndef SEGMINI_METRICS_H_
#define SEGMINI_METRICS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "segmini/label_map.h"

namespace segmini {

struct EvalResult {
  int class_count = 0;
  // confusion[target * class_count + predicted], pixel counts.
  std::vector<std::uint64_t> confusion;
  std::uint64_t total = 0;
  double pixel_accuracy = 0.0;
  // TP / (TP + FP + FN); 1 for classes absent from both prediction and target.
  std::vector<double> class_iou;

  std::uint64_t Count(int target, int predicted) const {
    return confusion[static_cast<std::size_t>(target) * class_count + predicted];
  }
  double MeanIou() const;
  std::string ToKeyValue() const;
};

// Throws kShape when paired maps differ in size, kData for labels outside
// [0, class_count).
EvalResult Evaluate(std::span<const LabelMap> predicted,
                    std::span<const LabelMap> target, int class_count);

}  // namespace segmini

#endif  // SEGMINI_METRICS_H_
