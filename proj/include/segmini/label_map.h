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

#ifndef SEGMINI_LABEL_MAP_H_
#define SEGMINI_LABEL_MAP_H_

#include <cstddef>
#include <vector>

namespace segmini {

// Per-pixel class assignment, row-major. Produced identically by the CNN
// path (PredictLabels) and the lookup-table path (SegmentLut).
struct LabelMap {
  int h = 0;
  int w = 0;
  std::vector<int> labels;

  LabelMap() = default;
  LabelMap(int height, int width, int fill = 0)
      : h(height), w(width),
        labels(static_cast<std::size_t>(height) * width, fill) {}

  int& at(int y, int x) { return labels[static_cast<std::size_t>(y) * w + x]; }
  int at(int y, int x) const {
    return labels[static_cast<std::size_t>(y) * w + x];
  }
  std::size_t size() const { return labels.size(); }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

}  // namespace segmini

#endif  // SEGMINI_LABEL_MAP_H_
