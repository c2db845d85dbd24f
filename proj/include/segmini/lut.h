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

#ifndef SEGMINI_LUT_H_
#define SEGMINI_LUT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "segmini/label_map.h"
#include "segmini/tensor.h"

namespace segmini {

struct Hsv {
  double h = 0.0;  // degrees, [0, 360)
  double s = 0.0;  // [0, 1]
  double v = 0.0;  // [0, 1]
};

// Hexcone conversion; hue is 0 for achromatic pixels.
Hsv RgbToHsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

struct ClassThreshold {
  int id = 0;
  std::string name;
  // Hue range wraps through 0 when h_lo > h_hi, e.g. [350, 10].
  double h_lo = 0.0, h_hi = 360.0;
  double s_lo = 0.0, s_hi = 1.0;
  double v_lo = 0.0, v_hi = 1.0;

  bool Contains(const Hsv& hsv) const;
};

// Classes in priority order (first match wins); unmatched pixels are class 0.
// File format, one class per line ('#' comments allowed):
//   class <id> <name> h=<lo>:<hi> s=<lo>:<hi> v=<lo>:<hi>
struct HsvThresholds {
  std::vector<ClassThreshold> classes;

  // Max class id + 1, at least 2.
  int ClassCount() const;
  // Unquantized classification.
  int Classify(const Hsv& hsv) const;
  void Validate() const;

  static HsvThresholds Parse(std::string_view text);
  static HsvThresholds Load(const std::string& path);
};

class Lut {
 public:
  static constexpr int kHueBins = 360;
  static constexpr int kSatBins = 64;
  static constexpr int kValBins = 64;

  // Each bin takes the class of its center point.
  static Lut Build(const HsvThresholds& thresholds);

  int Lookup(const Hsv& hsv) const { return table_[BinIndex(hsv)]; }
  int class_count() const { return class_count_; }
  std::size_t size() const { return table_.size(); }
  int bin(int h, int s, int v) const {
    return table_[(static_cast<std::size_t>(h) * kSatBins + s) * kValBins + v];
  }

  static std::size_t BinIndex(const Hsv& hsv);

 private:
  std::vector<std::uint8_t> table_;
  int class_count_ = 2;
};

// Image is 1x3xHxW in [0, 1]; each pixel is rounded to 8 bits, converted to
// HSV and looked up.
LabelMap SegmentLut(const Tensor& image, const Lut& lut);

}  // namespace segmini

#endif  // SEGMINI_LUT_H_
