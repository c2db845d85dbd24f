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

#include <cstdio>
#include <string>

#include <gtest/gtest.h>

#include "oracles.h"
#include "segmini/image_io.h"

namespace segmini {
namespace {

ErrorKind KindOf(std::string_view bytes, bool mask) {
  try {
    if (mask) {
      DecodePgm(bytes);
    } else {
      DecodePpm(bytes);
    }
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "accepted: " << bytes.substr(0, 16);
  return ErrorKind::kUsage;
}

TEST(PpmTest, DecodesHeaderAndPayload) {
  std::string bytes = "P6\n2 2\n255\n";
  for (int i = 0; i < 12; ++i) bytes.push_back(static_cast<char>(i * 20));
  const Tensor t = DecodePpm(bytes);
  EXPECT_EQ(t.shape(), (Shape{1, 3, 2, 2}));
  EXPECT_FLOAT_EQ(t.at(0, 0, 0, 0), 0.0f);
  EXPECT_FLOAT_EQ(t.at(0, 1, 0, 0), 20 / 255.0f);
  EXPECT_FLOAT_EQ(t.at(0, 2, 1, 1), 220 / 255.0f);
  EXPECT_EQ(EncodePpm(t), bytes);
}

TEST(PpmTest, CommentsAndWhitespace) {
  std::string bytes = "P6 # made by hand\n1\t1 # size\n255\n";
  bytes += std::string("\x01\x02\x03", 3);
  EXPECT_EQ(DecodePpm(bytes).size(), 3u);
}

TEST(PpmTest, RejectsUnsupported) {
  EXPECT_EQ(KindOf("P3\n1 1\n255\n0 0 0\n", false), ErrorKind::kFormat);
  EXPECT_EQ(KindOf("P6\n1 1\n65535\n123456", false), ErrorKind::kFormat);
  EXPECT_EQ(KindOf("P6\n2 2\n255\nabc", false), ErrorKind::kFormat);
  EXPECT_EQ(KindOf("P6\n2 2\n255\n" + std::string(13, 'x'), false), ErrorKind::kFormat);
  EXPECT_EQ(KindOf("", false), ErrorKind::kFormat);
  EXPECT_EQ(KindOf("P6\n0 2\n255\n", false), ErrorKind::kFormat);
}

TEST(PpmTest, ByteRoundTripProperty) {
  testing::Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const int h = rng.Int(1, 17), w = rng.Int(1, 17);
    std::string bytes = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    for (int i = 0; i < 3 * h * w; ++i) bytes.push_back(static_cast<char>(rng.Int(0, 255)));
    EXPECT_EQ(EncodePpm(DecodePpm(bytes)), bytes);
  }
}

TEST(PpmTest, SaveRejectsOutOfRange) {
  const Tensor t = Tensor::FromValues({1, 3, 1, 1}, {0.5f, 1.5f, 0.0f});
  try {
    EncodePpm(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}

TEST(PgmTest, MaskRoundTripAndZeros) {
  LabelMap m(3, 4);
  m.at(1, 2) = 1;
  m.at(2, 3) = 4;
  EXPECT_EQ(DecodePgm(EncodePgm(m)), m);
  const std::string zeros = "P5\n4 3\n255\n" + std::string(12, '\0');
  const LabelMap z = DecodePgm(zeros);
  EXPECT_EQ(z, LabelMap(3, 4, 0));
  EXPECT_EQ(EncodePgm(z), zeros);
  EXPECT_EQ(KindOf("P5\n4 3\n255\n" + std::string(11, '\0'), true), ErrorKind::kFormat);
  EXPECT_EQ(KindOf("P6\n1 1\n255\n\0\0\0", true), ErrorKind::kFormat);
}

TEST(FileTest, SaveLoadAndMissing) {
  const std::string dir = ::testing::TempDir();
  testing::Rng rng(2);
  Tensor t({1, 3, 5, 6});
  for (float& v : t.values()) v = rng.Int(0, 255) / 255.0f;
  SavePpm(t, dir + "/io_test.ppm");
  EXPECT_TRUE(ApproxEq(LoadPpm(dir + "/io_test.ppm"), t, 0.0));
  LabelMap m(5, 6, 1);
  SaveMask(m, dir + "/io_test.pgm");
  EXPECT_EQ(LoadMask(dir + "/io_test.pgm"), m);
  std::remove((dir + "/io_test.ppm").c_str());
  std::remove((dir + "/io_test.pgm").c_str());
  try {
    LoadPpm(dir + "/does_not_exist.ppm");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}

}  // namespace
}  // namespace segmini
