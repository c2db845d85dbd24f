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

#include "segmini/metrics.h"

#include <limits>
#include <numeric>
#include <sstream>

#include "segmini/error.h"

namespace segmini {

double EvalResult::MeanIou() const {
  if (class_iou.empty()) return 0.0;
  return std::accumulate(class_iou.begin(), class_iou.end(), 0.0) /
         static_cast<double>(class_iou.size());
}

std::string EvalResult::ToKeyValue() const {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "pixels=" << total << "\n";
  out << "pixel_accuracy=" << pixel_accuracy << "\n";
  for (int c = 0; c < class_count; ++c) {
    out << "iou." << c << "=" << class_iou[c] << "\n";
  }
  out << "mean_iou=" << MeanIou() << "\n";
  for (int t = 0; t < class_count; ++t) {
    for (int p = 0; p < class_count; ++p) {
      out << "confusion." << t << "." << p << "=" << Count(t, p) << "\n";
    }
  }
  return out.str();
}

EvalResult Evaluate(std::span<const LabelMap> predicted,
                    std::span<const LabelMap> target, int class_count) {
  if (class_count < 1) Fail(ErrorKind::kData, "class_count must be positive");
  if (predicted.size() != target.size()) {
    Fail(ErrorKind::kShape, "evaluate: " + std::to_string(predicted.size()) +
                                " predictions for " + std::to_string(target.size()) +
                                " targets");
  }
  EvalResult r;
  r.class_count = class_count;
  r.confusion.assign(static_cast<std::size_t>(class_count) * class_count, 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const LabelMap& p = predicted[i];
    const LabelMap& t = target[i];
    if (p.h != t.h || p.w != t.w || p.size() != t.size()) {
      Fail(ErrorKind::kShape, "evaluate: pair " + std::to_string(i) + " differs in size");
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      const int pl = p.labels[j];
      const int tl = t.labels[j];
      if (pl < 0 || pl >= class_count || tl < 0 || tl >= class_count) {
        Fail(ErrorKind::kData, "evaluate: label outside [0, " +
                                   std::to_string(class_count) + ")");
      }
      ++r.confusion[static_cast<std::size_t>(tl) * class_count + pl];
    }
  }
  std::uint64_t correct = 0;
  for (int c = 0; c < class_count; ++c) {
    correct += r.Count(c, c);
  }
  r.total = std::accumulate(r.confusion.begin(), r.confusion.end(), std::uint64_t{0});
  r.pixel_accuracy = r.total == 0 ? 1.0 : static_cast<double>(correct) / r.total;
  r.class_iou.resize(class_count);
  for (int c = 0; c < class_count; ++c) {
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    for (int k = 0; k < class_count; ++k) {
      row += r.Count(c, k);
      col += r.Count(k, c);
    }
    const std::uint64_t tp = r.Count(c, c);
    const std::uint64_t uni = row + col - tp;
    r.class_iou[c] = uni == 0 ? 1.0 : static_cast<double>(tp) / uni;
  }
  return r;
}

}  // namespace segmini
