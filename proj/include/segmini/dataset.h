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

#ifndef SEGMINI_DATASET_H_
#define SEGMINI_DATASET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "segmini/label_map.h"
#include "segmini/tensor.h"

namespace segmini {

struct Sample {
  Tensor image;  // 1x3xHxW, values in [0, 1]
  LabelMap mask;
};

struct Dataset {
  std::vector<Sample> samples;
  int class_count = 2;
  std::vector<std::string> class_names;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  // Throws kData when an image and its mask disagree in size or a label is
  // outside [0, class_count).
  void Validate() const;
};

// Pairs an image with its mask, throwing kData on a size mismatch.
Sample MakeSample(Tensor image, LabelMap mask);

enum class SceneKind { kBall, kGoal };

// Deterministic scenes on a noisy green field. Image i draws from an
// mt19937_64 seeded with (seed ^ i).
//  kBall: one white ball with dark patches (class 1) plus occasional white
//         field lines and dark robot-like blocks (background).
//  kGoal: two white posts against a wall above the field horizon; class 1 is
//         a post-wide square at the bottom of each post.
// Throws kShape unless h and w are positive multiples of 8.
Dataset SynthDataset(SceneKind kind, int count, int h, int w, std::uint64_t seed);

// Directory layout: img_%05d.ppm + msk_%05d.pgm pairs and a dataset.txt
// manifest with class_count=, names= (comma separated) and count= lines.
void SaveDataset(const Dataset& data, const std::string& dir);
Dataset LoadDataset(const std::string& dir);

}  // namespace segmini

#endif  // SEGMINI_DATASET_H_
