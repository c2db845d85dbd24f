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

#include <algorithm>

#include <gtest/gtest.h>

#include "oracles.h"
#include "segmini/cost_model.h"

namespace segmini {
namespace {

using testing::NestedLoopConv;
using testing::RandomTensor;
using testing::Rng;

// Multiplications performed by the nested-loop oracle for one variant.
std::uint64_t OracleMults(const Shape& in, int cout, int k, int stride, bool same,
                          ConvVariant variant, Rng& rng) {
  const TensorD x = RandomTensor<double>(in, rng);
  std::uint64_t mults = 0;
  switch (variant) {
    case ConvVariant::kFull:
      NestedLoopConv(x, TensorD({cout, in.c, k, k}), {}, stride, same, false, &mults);
      break;
    case ConvVariant::kDepthwise:
      NestedLoopConv(x, TensorD({in.c, 1, k, k}), {}, stride, same, true, &mults);
      break;
    case ConvVariant::kPointwise:
      NestedLoopConv(x, TensorD({cout, in.c, 1, 1}), {}, stride, same, false, &mults);
      break;
    case ConvVariant::kSeparable: {
      const TensorD mid =
          NestedLoopConv(x, TensorD({in.c, 1, k, k}), {}, stride, same, true, &mults);
      NestedLoopConv(mid, TensorD({cout, in.c, 1, 1}), {}, 1, same, false, &mults);
      break;
    }
  }
  return mults;
}

TEST(ConvMacsTest, PinnedExample) {
  EXPECT_EQ(ConvMacs({1, 3, 8, 8}, 16, 3, 1, Padding::kSame, ConvVariant::kFull), 27648u);
  Rng rng(1);
  EXPECT_EQ(OracleMults({1, 3, 8, 8}, 16, 3, 1, true, ConvVariant::kFull, rng), 27648u);
}

TEST(ConvMacsTest, MatchesOracleCountsOnRandomShapes) {
  Rng rng(2);
  const ConvVariant variants[] = {ConvVariant::kFull, ConvVariant::kDepthwise,
                                  ConvVariant::kPointwise, ConvVariant::kSeparable};
  for (ConvVariant v : variants) {
    for (int trial = 0; trial < 50; ++trial) {
      const Shape in{rng.Int(1, 2), rng.Int(1, 4), rng.Int(3, 11), rng.Int(3, 11)};
      const int cout = rng.Int(1, 5);
      const int k = 2 * rng.Int(0, 2) + 1;
      const int stride = rng.Int(1, 2);
      const bool same = rng.Int(0, 1) == 1 || k > in.h || k > in.w;
      const std::uint64_t got =
          ConvMacs(in, cout, k, stride, same ? Padding::kSame : Padding::kValid, v);
      EXPECT_EQ(got, OracleMults(in, cout, k, stride, same, v, rng))
          << in.ToString() << " cout=" << cout << " k=" << k << " stride=" << stride
          << " same=" << same << " variant=" << static_cast<int>(v);
    }
  }
}

TEST(ConvMacsTest, StrideTwoIsExactlyAQuarter) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Shape in{1, rng.Int(1, 8), 2 * rng.Int(1, 16), 2 * rng.Int(1, 16)};
    const int cout = rng.Int(1, 16);
    const int k = 2 * rng.Int(0, 3) + 1;
    for (ConvVariant v : {ConvVariant::kFull, ConvVariant::kDepthwise, ConvVariant::kSeparable}) {
      const auto s1 = ConvMacs(in, cout, k, 1, Padding::kSame, v);
      const auto s2 = ConvMacs(in, cout, k, 2, Padding::kSame, v);
      EXPECT_EQ(s1, 4 * s2) << in.ToString() << " k=" << k;
    }
  }
}

TEST(SeparableRatioTest, Examples) {
  EXPECT_NEAR(SeparableRatio(64, 3), 1.0 / 64 + 1.0 / 9, 1e-15);
  EXPECT_NEAR(SeparableRatio(64, 3), 0.12674, 1e-5);
  EXPECT_EQ(SeparableRatio(1, 1), 2.0);
  for (int c = 2; c <= 64; ++c) {
    for (int k = 2; k <= 7; ++k) EXPECT_LT(SeparableRatio(c, k), 1.0);
  }
}

// ratio * full == separable, compared as integers: sep * c * k^2 == full * (k^2 + c).
TEST(SeparableRatioTest, ExactAgainstClosedForms) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Shape in{1, rng.Int(1, 16), rng.Int(1, 20), rng.Int(1, 20)};
    const std::uint64_t c = rng.Int(1, 64);
    const std::uint64_t k = 2 * rng.Int(0, 3) + 1;
    const auto full = ConvMacs(in, c, k, 1, Padding::kSame, ConvVariant::kFull);
    const auto sep = ConvMacs(in, c, k, 1, Padding::kSame, ConvVariant::kSeparable);
    EXPECT_EQ(sep * c * k * k, full * (k * k + c));
    EXPECT_NEAR(SeparableRatio(c, k) * full, static_cast<double>(sep), 1e-9 * sep);
  }
}

TEST(ModelCostTest, TotalsAreLayerSums) {
  const CostReport r = ModelCost(DefaultConfig(2), {1, 3, 64, 64});
  std::uint64_t macs = 0, params = 0, other = 0, full = 0, full_params = 0;
  for (const auto& l : r.layers) {
    macs += l.macs;
    params += l.params;
    other += l.other_ops;
    full += l.full_macs;
    full_params += l.full_params;
  }
  EXPECT_EQ(r.total_macs, macs);
  EXPECT_EQ(r.total_params, params);
  EXPECT_EQ(r.total_other_ops, other);
  EXPECT_EQ(r.total_full_macs, full);
  EXPECT_EQ(r.total_full_params, full_params);
  EXPECT_EQ(r.layers.back().output, (Shape{1, 2, 64, 64}));
}

TEST(ModelCostTest, SeparableUnderThirtyPercentOfFull) {
  for (auto mode : {DownsampleMode::kMaxPool, DownsampleMode::kStridedConv}) {
    const CostReport r = ModelCost(DefaultConfig(2, mode), {1, 3, 64, 64});
    EXPECT_LT(static_cast<double>(r.total_macs), 0.3 * static_cast<double>(r.total_full_macs));
  }
}

TEST(ModelCostTest, NonConvLayersHaveNoMacs) {
  const ModelConfig c = DefaultConfig(2);
  const CostReport r = ModelCost(c, {1, 3, 32, 32});
  for (std::size_t i = 0; i < c.layers.size(); ++i) {
    const LayerKind k = c.layers[i].kind;
    if (k == LayerKind::kMaxPool || k == LayerKind::kUpsample || k == LayerKind::kSoftmax ||
        k == LayerKind::kBatchNorm) {
      EXPECT_EQ(r.layers[i].macs, 0u) << r.layers[i].name;
    } else {
      EXPECT_GT(r.layers[i].macs, 0u);
    }
    if (k == LayerKind::kMaxPool || k == LayerKind::kSoftmax) {
      EXPECT_GT(r.layers[i].other_ops, 0u);
    }
  }
}

TEST(ModelCostTest, ParamsMatchBuiltModels) {
  ModelConfig one;
  one.input_channels = 8;
  one.class_count = 16;
  one.layers = {LayerSpec::SepConvRelu(16), LayerSpec::Of(LayerKind::kSoftmax)};
  EXPECT_EQ(ModelCost(one, {1, 8, 8, 8}).layers[0].params, 216u);

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const EncoderWidths w = {rng.Int(1, 12), rng.Int(1, 12), rng.Int(1, 12), rng.Int(1, 12)};
    const auto mode = rng.Int(0, 1) ? DownsampleMode::kMaxPool : DownsampleMode::kStridedConv;
    const ModelConfig c = DefaultConfig(rng.Int(2, 5), mode, w);
    const Model m = InitModel(c, trial);
    std::size_t elements = 0;
    for (const auto& a : m.AllArrays()) elements += a.size();
    EXPECT_EQ(ModelCost(c, {1, 3, 16, 16}).total_params, elements);
    EXPECT_EQ(m.ParameterCount(), elements);
  }
}

TEST(ModelCostTest, StridedModeQuartersThatLayer) {
  const CostReport pool = ModelCost(DefaultConfig(2), {1, 3, 64, 64});
  const CostReport strided = ModelCost(DefaultConfig(2, DownsampleMode::kStridedConv), {1, 3, 64, 64});
  EXPECT_LT(strided.total_macs, pool.total_macs);
  // E1: the first sepconv runs at full resolution in maxpool mode.
  EXPECT_EQ(pool.layers[1].macs, 4 * strided.layers[1].macs);
}

TEST(ModelCostTest, Errors) {
  ModelConfig bad = DefaultConfig(2);
  bad.layers.pop_back();
  EXPECT_THROW(ModelCost(bad, {1, 3, 32, 32}), Error);
  try {
    ModelCost(DefaultConfig(2), {1, 3, 30, 30});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
}

TEST(ModelCostTest, KeyValueAndTable) {
  const CostReport r = ModelCost(DefaultConfig(2), {1, 3, 32, 32});
  const std::string kv = r.ToKeyValue();
  EXPECT_NE(kv.find("total.macs=" + std::to_string(r.total_macs) + "\n"), std::string::npos);
  EXPECT_NE(kv.find("layer.L01.sepconv_relu.macs="), std::string::npos);
  const std::string table = r.ToTable();
  EXPECT_NE(table.find("L22.softmax"), std::string::npos);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), static_cast<long>(r.layers.size() + 2));
}

}  // namespace
}  // namespace segmini
