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

#include <gtest/gtest.h>

#include "oracles.h"
#include "segmini/metrics.h"

namespace segmini {
namespace {

LabelMap Row(std::vector<int> labels) {
  LabelMap m(1, static_cast<int>(labels.size()));
  m.labels = std::move(labels);
  return m;
}

EvalResult Eval1(const LabelMap& pred, const LabelMap& target, int classes) {
  return Evaluate(std::span(&pred, 1), std::span(&target, 1), classes);
}

TEST(EvaluateTest, PerfectPrediction) {
  const LabelMap m = Row({0, 1, 2, 1});
  const EvalResult r = Eval1(m, m, 3);
  EXPECT_EQ(r.pixel_accuracy, 1.0);
  EXPECT_EQ(r.class_iou, (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_EQ(r.MeanIou(), 1.0);
}

TEST(EvaluateTest, DisjointIsZeroIou) {
  const EvalResult r = Eval1(Row({1, 1, 0, 0}), Row({0, 0, 1, 1}), 2);
  EXPECT_EQ(r.class_iou[1], 0.0);
  EXPECT_EQ(r.pixel_accuracy, 0.0);
}

TEST(EvaluateTest, OneThirdIou) {
  const EvalResult r = Eval1(Row({1, 1, 0, 0}), Row({0, 1, 1, 0}), 2);
  EXPECT_DOUBLE_EQ(r.class_iou[1], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.pixel_accuracy, 0.5);
  EXPECT_EQ(r.Count(1, 0), 1u);
  EXPECT_EQ(r.Count(0, 1), 1u);
}

TEST(EvaluateTest, AbsentClassIsOne) {
  const EvalResult r = Eval1(Row({0, 0}), Row({0, 0}), 3);
  EXPECT_EQ(r.class_iou[1], 1.0);
  EXPECT_EQ(r.class_iou[2], 1.0);
}

TEST(EvaluateTest, Errors) {
  try {
    Eval1(Row({0, 0}), Row({0}), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
  try {
    Eval1(Row({0, 2}), Row({0, 0}), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
  const std::vector<LabelMap> two = {Row({0}), Row({1})};
  EXPECT_THROW(Evaluate(two, std::span(two.data(), 1), 2), Error);
}

TEST(EvaluateTest, ConfusionProperties) {
  testing::Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const int classes = rng.Int(2, 5);
    std::vector<LabelMap> pred, target;
    for (int i = 0; i < rng.Int(1, 3); ++i) {
      LabelMap p(rng.Int(1, 6), 5), t(p.h, 5);
      for (int& v : p.labels) v = rng.Int(0, classes - 1);
      for (int& v : t.labels) v = rng.Int(0, classes - 1);
      pred.push_back(p);
      target.push_back(t);
    }
    const EvalResult a = Evaluate(pred, target, classes);
    const EvalResult b = Evaluate(target, pred, classes);
    EXPECT_EQ(a.pixel_accuracy, b.pixel_accuracy);
    std::uint64_t sum = 0;
    for (int t = 0; t < classes; ++t) {
      std::uint64_t row = 0, count = 0;
      for (int p = 0; p < classes; ++p) row += a.Count(t, p);
      for (const LabelMap& m : target) {
        for (int l : m.labels) count += l == t;
      }
      EXPECT_EQ(row, count);
      sum += row;
      EXPECT_GE(a.class_iou[t], 0.0);
      EXPECT_LE(a.class_iou[t], 1.0);
    }
    EXPECT_EQ(sum, a.total);
  }
}

TEST(EvaluateTest, KeyValueDump) {
  const std::string kv = Eval1(Row({1, 1, 0, 0}), Row({0, 1, 1, 0}), 2).ToKeyValue();
  EXPECT_NE(kv.find("pixel_accuracy=0.5"), std::string::npos) << kv;
  EXPECT_NE(kv.find("iou.1="), std::string::npos) << kv;
}

}  // namespace
}  // namespace segmini
