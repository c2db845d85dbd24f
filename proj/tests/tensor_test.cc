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

#include "segmini/tensor.h"

#include <limits>

#include <gtest/gtest.h>

#include "oracles.h"

namespace segmini {
namespace {

TEST(TensorTest, ZerosHasRequestedShape) {
  const Tensor a = Tensor::Zeros({1, 1, 2, 2});
  EXPECT_EQ(a.size(), 4u);
  for (float v : a.values()) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(Tensor::Zeros({2, 3, 4, 5}).size(), 120u);
  const Tensor one = Tensor::Zeros({1, 1, 1, 1});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.at(0, 0, 0, 0), 0.0f);
}

TEST(TensorTest, ZerosRejectsBadShapes) {
  try {
    Tensor::Zeros({0, 1, 1, 1});
    FAIL() << "expected shape error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
  const int big = std::numeric_limits<int>::max();
  try {
    Shape{big, big, big, big}.Validate();
    FAIL() << "expected size error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSize);
  }
}

TEST(TensorTest, FromValuesIsRowMajor) {
  const Tensor a = Tensor::FromValues({1, 1, 2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(a.at(0, 0, 1, 0), 3.0f);
  const Tensor b = Tensor::FromValues({1, 2, 1, 1}, {5, 6});
  EXPECT_EQ(b.at(0, 0, 0, 0), 5.0f);
  EXPECT_EQ(b.at(0, 1, 0, 0), 6.0f);
}

TEST(TensorTest, FromValuesLengthMismatchIsShapeError) {
  try {
    Tensor::FromValues({1, 1, 1, 3}, {1, 2});
    FAIL() << "expected shape error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
}

TEST(TensorTest, ApproxEq) {
  const Tensor a = Tensor::FromValues({1, 1, 1, 2}, {1.0f, 2.0f});
  EXPECT_TRUE(ApproxEq(a, a, 0.0));
  const Tensor b = Tensor::FromValues({1, 1, 1, 2}, {1.0f + 1e-7f, 2.0f});
  EXPECT_TRUE(ApproxEq(a, b, 1e-6));
  EXPECT_FALSE(ApproxEq(a, Tensor::Zeros({1, 2, 1, 1}), 1e9));
}

// Flat index of (n,c,h,w) equals the position visited by a 4-deep loop, and
// from_values(flatten(t)) == t, over random shapes.
TEST(TensorTest, IndexingAndRoundTripProperty) {
  testing::Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Shape s{rng.Int(1, 3), rng.Int(1, 4), rng.Int(1, 5), rng.Int(1, 6)};
    const Tensor t = testing::RandomTensor<float>(s, rng);
    std::size_t expected = 0;
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (int h = 0; h < s.h; ++h)
          for (int w = 0; w < s.w; ++w) {
            ASSERT_EQ(t.Index(n, c, h, w), expected);
            ASSERT_EQ(t.at(n, c, h, w), t.data()[expected]);
            ++expected;
          }
    EXPECT_TRUE(ApproxEq(Tensor::FromValues(s, t.Flatten()), t, 0.0));
    const Tensor z = Tensor::Zeros(s);
    EXPECT_TRUE(ApproxEq(z, z, 0.0));
  }
}

}  // namespace
}  // namespace segmini
