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
#include <cmath>
#include <cstring>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.h"
#include "segmini/dataset.h"
#include "segmini/training.h"

namespace segmini {
namespace {

using testing::RandomTensor;
using testing::Rng;

std::vector<LabelMap> RandomTargets(int n, int h, int w, int classes, Rng& rng) {
  std::vector<LabelMap> out;
  for (int i = 0; i < n; ++i) {
    LabelMap m(h, w);
    for (int& l : m.labels) l = rng.Int(0, classes - 1);
    out.push_back(m);
  }
  return out;
}

TEST(CrossEntropyTest, PerfectPredictionIsZero) {
  const Tensor p = Tensor::FromValues({1, 2, 1, 2}, {1, 0, 0, 1});
  LabelMap t(1, 2);
  t.labels = {0, 1};
  EXPECT_EQ(CrossEntropyPixelwise(p, std::span(&t, 1)).loss, 0.0);
}

TEST(CrossEntropyTest, UniformIsLn2) {
  const Tensor p = Tensor::FromValues({1, 2, 1, 3}, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  LabelMap t(1, 3);
  t.labels = {0, 1, 1};
  EXPECT_NEAR(CrossEntropyPixelwise(p, std::span(&t, 1)).loss, std::numbers::ln2, 1e-7);
}

TEST(CrossEntropyTest, GradientIsPMinusOneHot) {
  const Tensor p = Tensor::FromValues({1, 2, 1, 2}, {0.25, 0.5, 0.75, 0.5});
  LabelMap t(1, 2);
  t.labels = {0, 1};
  const auto r = CrossEntropyPixelwise(p, std::span(&t, 1));
  EXPECT_FLOAT_EQ(r.grad_logits.at(0, 0, 0, 0), -0.75f / 2);
  EXPECT_FLOAT_EQ(r.grad_logits.at(0, 1, 0, 0), 0.75f / 2);
}

TEST(CrossEntropyTest, ClassWeightsScale) {
  const Tensor p = Tensor::FromValues({1, 2, 1, 1}, {0.5, 0.5});
  LabelMap t(1, 1, 1);
  const std::vector<double> w = {1.0, 3.0};
  EXPECT_NEAR(CrossEntropyPixelwise(p, std::span(&t, 1), w).loss, 3 * std::numbers::ln2, 1e-7);
}

TEST(CrossEntropyTest, Errors) {
  const Tensor p = Tensor::Zeros({1, 2, 1, 1});
  LabelMap bad(1, 1, 2);
  try {
    CrossEntropyPixelwise(p, std::span(&bad, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
  LabelMap wrong(2, 1);
  try {
    CrossEntropyPixelwise(p, std::span(&wrong, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
}

// Gradient of the loss with respect to probs, then the softmax Jacobian.
TEST(CrossEntropyTest, FusedEqualsComposed) {
  Rng rng(4);
  const TensorD logits = RandomTensor<double>({2, 3, 4, 5}, rng, -3.0, 3.0);
  const auto targets = RandomTargets(2, 4, 5, 3, rng);
  const std::vector<double> weights = {0.5, 1.0, 2.0};
  OpCache<double> cache;
  const TensorD p = SoftmaxPixelwise(logits, &cache);
  const auto fused = CrossEntropyPixelwise(p, std::span<const LabelMap>(targets), weights);

  TensorD dprobs(p.shape());
  const double pixels = 2.0 * 4 * 5;
  for (int n = 0; n < 2; ++n) {
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 5; ++x) {
        const int t = targets[n].at(y, x);
        dprobs.at(n, t, y, x) = -weights[t] / (p.at(n, t, y, x) * pixels);
      }
    }
  }
  const TensorD composed = Backward(OpKind::kSoftmax, cache, dprobs).input;
  EXPECT_LT(MaxAbsDiff(fused.grad_logits, composed), 1e-6);
}

TEST(CrossEntropyTest, LossNonNegativeProperty) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Tensor p = SoftmaxPixelwise(RandomTensor<float>({1, 3, 3, 3}, rng, -5.0, 5.0));
    const auto t = RandomTargets(1, 3, 3, 3, rng);
    EXPECT_GT(CrossEntropyPixelwise(p, std::span<const LabelMap>(t)).loss, 0.0);
  }
}

TEST(SgdTest, Examples) {
  std::vector<float> p = {1.0f};
  std::vector<float> v = {0.0f};
  const std::vector<float> g = {1.0f};
  SgdStep(p, g, v, 0.1, 0.0);
  EXPECT_FLOAT_EQ(p[0], 0.9f);

  std::vector<float> q = {2.0f, -3.0f};
  std::vector<float> vq = {0.0f, 0.0f};
  const std::vector<float> zero = {0.0f, 0.0f};
  SgdStep(q, zero, vq, 0.1, 0.9);
  EXPECT_EQ(q, (std::vector<float>{2.0f, -3.0f}));

  std::vector<float> r = {0.0f};
  std::vector<float> vr = {0.0f};
  SgdStep(r, g, vr, 0.1, 0.9);
  EXPECT_FLOAT_EQ(r[0], -0.1f);
  const float before = r[0];
  SgdStep(r, g, vr, 0.1, 0.9);
  EXPECT_NEAR(r[0] - before, -0.19, 1e-6);
}

TEST(SgdTest, SizeMismatch) {
  std::vector<float> p(2), g(3), v(2);
  try {
    SgdStep(p, g, v, 0.1, 0.9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
}

TEST(SplitTest, NinetyTen) {
  const DatasetSplit s = SplitDataset(50, 3);
  EXPECT_EQ(s.train.size(), 45u);
  EXPECT_EQ(s.holdout.size(), 5u);
  EXPECT_TRUE(std::is_sorted(s.holdout.begin(), s.holdout.end()));
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.holdout.begin(), s.holdout.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(SplitDataset(50, 3).holdout, s.holdout);
  EXPECT_TRUE(SplitDataset(5, 3).holdout.empty());
}

Hyperparams Quick(int epochs) {
  Hyperparams h;
  h.epochs = epochs;
  h.batch_size = 4;
  h.seed = 11;
  return h;
}

TEST(TrainTest, DeterministicReplay) {
  const Dataset data = SynthDataset(SceneKind::kBall, 12, 16, 16, 1);
  const Model init = InitModel(DefaultConfig(2, DownsampleMode::kMaxPool, {2, 4, 4, 4}), 5);
  const TrainResult a = Train(init, data, Quick(2));
  const TrainResult b = Train(init, data, Quick(2));
  ASSERT_EQ(a.report.epochs.size(), 2u);
  EXPECT_EQ(a.report.epochs, b.report.epochs);
  EXPECT_EQ(SerializeModel(a.model), SerializeModel(b.model));
  EXPECT_NE(SerializeModel(a.model), SerializeModel(init));
  EXPECT_EQ(a.report.train_count + a.report.holdout_count, 12u);
  for (const auto& e : a.report.epochs) {
    EXPECT_GE(e.mean_loss, 0.0);
    EXPECT_GE(e.pixel_accuracy, 0.0);
    EXPECT_LE(e.pixel_accuracy, 1.0);
    for (double iou : e.class_iou) EXPECT_TRUE(iou >= 0.0 && iou <= 1.0);
  }
}

TEST(TrainTest, ZeroLearningRateKeepsTrainableArrays) {
  const Dataset data = SynthDataset(SceneKind::kBall, 6, 16, 16, 2);
  const Model init = InitModel(DefaultConfig(2, DownsampleMode::kMaxPool, {2, 4, 4, 4}), 5);
  Hyperparams h = Quick(1);
  h.learning_rate = 0.0;
  const TrainResult r = Train(init, data, h);
  const auto before = init.TrainableArrays();
  const auto after = r.model.TrainableArrays();
  ASSERT_EQ(before.size(), after.size());
  for (std::size_t a = 0; a < before.size(); ++a) {
    ASSERT_EQ(before[a].size(), after[a].size());
    EXPECT_EQ(std::memcmp(before[a].data(), after[a].data(), before[a].size_bytes()), 0) << a;
  }
}

// With the head zeroed every pixel predicts (0.5, 0.5), so the first epoch
// (lr 0) averages exactly ln 2.
TEST(TrainTest, UniformHeadGivesLn2) {
  const Dataset data = SynthDataset(SceneKind::kBall, 8, 32, 32, 3);
  Model m = InitModel(DefaultConfig(2), 1);
  for (auto it = m.layers.rbegin(); it != m.layers.rend(); ++it) {
    if (auto* sep = std::get_if<SepConvWeights<float>>(&*it)) {
      for (float& v : sep->pointwise.weights.values()) v = 0.0f;
      break;
    }
  }
  Hyperparams h = Quick(1);
  h.learning_rate = 0.0;
  const TrainResult r = Train(m, data, h);
  EXPECT_NEAR(r.report.epochs[0].mean_loss, std::numbers::ln2, 1e-6);
}

// Untrained, the reported epoch loss is the plain average of per-batch
// cross-entropies (lr 0 keeps the model fixed between batches).
TEST(TrainTest, FirstEpochLossMatchesDirectEvaluation) {
  const Dataset data = SynthDataset(SceneKind::kBall, 8, 32, 32, 3);
  const Model m = InitModel(DefaultConfig(2), 1);
  Hyperparams h = Quick(1);
  h.learning_rate = 0.0;
  h.batch_size = 8;
  const TrainResult r = Train(m, data, h);
  const DatasetSplit split = SplitDataset(data.size(), h.seed);
  Tensor batch({static_cast<int>(split.train.size()), 3, 32, 32});
  std::vector<LabelMap> targets;
  for (std::size_t b = 0; b < split.train.size(); ++b) {
    const auto src = data.samples[split.train[b]].image.values();
    std::copy(src.begin(), src.end(), batch.values().begin() + b * src.size());
    targets.push_back(data.samples[split.train[b]].mask);
  }
  const double direct = CrossEntropyPixelwise(Forward(m, batch, Mode::kTrain).probs,
                                              std::span<const LabelMap>(targets))
                            .loss;
  EXPECT_NEAR(r.report.epochs[0].mean_loss, direct, 1e-6);
  EXPECT_GT(direct, 0.0);
}

TEST(TrainTest, EmptyDatasetIsDataError) {
  Dataset empty;
  try {
    Train(InitModel(DefaultConfig(2), 1), empty, Quick(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}

TEST(TrainTest, CallbackSeesEveryEpoch) {
  const Dataset data = SynthDataset(SceneKind::kBall, 4, 8, 8, 4);
  std::vector<int> seen;
  Train(InitModel(DefaultConfig(2, DownsampleMode::kMaxPool, {2, 4, 4, 4}), 1), data, Quick(3),
        [&](int epoch, const EpochStats&) { seen.push_back(epoch); });
  EXPECT_EQ(seen, (std::vector<int>{1, 2, 3}));
}

TEST(GradCheckTest, RelativeErrorDefinition) {
  EXPECT_EQ(RelativeError(1.0, 1.0), 0.0);
  EXPECT_NEAR(RelativeError(1.0, -1.0), 2.0, 1e-12);
  EXPECT_NEAR(RelativeError(0.0, 1e-9), 1e-3, 1e-12);
}

// Tiny default-shaped models, batch 4 of 8x8 images. The step is small
// enough that truncation error from train-mode batchnorm curvature stays well
// under the tolerance; the acceptance suite runs the nominal 1e-3 step.
GradCheckResult TinyCheck(DownsampleMode mode, int classes, std::uint64_t seed) {
  Rng rng(seed);
  const Model m = InitModel(DefaultConfig(classes, mode, {2, 4, 4, 4}), seed + 100);
  const Tensor x = RandomTensor<float>({4, 3, 8, 8}, rng, 0.0, 1.0);
  const auto t = RandomTargets(4, 8, 8, classes, rng);
  std::vector<double> w(classes, 1.0);
  w.back() = 3.0;
  const GradCheckResult r = GradCheck(m, x, std::span<const LabelMap>(t), 1e-5, w);
  std::size_t trainable = 0;
  for (const auto& a : m.TrainableArrays()) trainable += a.size();
  EXPECT_EQ(r.checked, trainable);
  return r;
}

TEST(GradCheckTest, TinyDefaultModel) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto r = TinyCheck(DownsampleMode::kMaxPool, 2, seed);
    EXPECT_LT(r.max_relative_error, 1e-3)
        << "seed " << seed << " array " << r.worst_array << " index " << r.worst_index
        << " analytic " << r.worst_analytic << " numeric " << r.worst_numeric;
  }
}

TEST(GradCheckTest, TinyStridedModel) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto r = TinyCheck(DownsampleMode::kStridedConv, 3, seed);
    EXPECT_LT(r.max_relative_error, 1e-3)
        << "seed " << seed << " array " << r.worst_array << " index " << r.worst_index;
  }
}

TEST(GradCheckTest, KinkCrossingsAreRedifferenced) {
  // |x| at x = 0.0005: a 1e-3 step straddles the kink, a 1e-4 step does not.
  std::vector<double> x = {0.0005};
  bool flipped = false;
  auto loss = [&] {
    flipped = x[0] <= 0.0;
    return std::abs(x[0]);
  };
  const auto r = CompareGradients(loss, {std::span<double>(x)}, {{1.0}}, 1e-3,
                                  [&] { return flipped; });
  EXPECT_EQ(r.refined, 1u);
  EXPECT_NEAR(r.min_epsilon, 1e-4, 1e-12);
  EXPECT_LT(r.max_relative_error, 1e-9);
  const auto naive = CompareGradients(loss, {std::span<double>(x)}, {{1.0}}, 1e-3);
  EXPECT_NEAR(naive.max_relative_error, 0.5, 1e-9);
}

struct LinearCase {
  TensorD x;
  ConvParams<double> pw;
  std::vector<LabelMap> targets;

  double Loss() const {
    const TensorD p = SoftmaxPixelwise(PointwiseConv2d(x, pw));
    return CrossEntropyPixelwise(p, std::span<const LabelMap>(targets)).loss;
  }
  std::vector<std::vector<double>> Grads() const {
    OpCache<double> cache;
    const TensorD p = SoftmaxPixelwise(PointwiseConv2d(x, pw, &cache));
    const auto ce = CrossEntropyPixelwise(p, std::span<const LabelMap>(targets));
    return Backward(OpKind::kPointwise, cache, ce.grad_logits).params;
  }
};

LinearCase MakeLinearCase() {
  Rng rng(31);
  return {RandomTensor<double>({2, 3, 4, 4}, rng),
          {RandomTensor<double>({3, 3, 1, 1}, rng), testing::RandomVector<double>(3, rng), 1,
           Padding::kSame},
          RandomTargets(2, 4, 4, 3, rng)};
}

TEST(GradCheckTest, PointwiseSoftmaxIsTight) {
  LinearCase c = MakeLinearCase();
  const auto r = CompareGradients([&] { return c.Loss(); },
                                  {c.pw.weights.values(), c.pw.bias}, c.Grads(), 1e-3);
  EXPECT_EQ(r.checked, 12u);
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(GradCheckTest, SignFlipIsDetected) {
  LinearCase c = MakeLinearCase();
  auto grads = c.Grads();
  for (auto& g : grads) {
    for (double& v : g) v = -v;
  }
  const auto r = CompareGradients([&] { return c.Loss(); },
                                  {c.pw.weights.values(), c.pw.bias}, grads, 1e-3);
  EXPECT_NEAR(r.max_relative_error, 2.0, 1e-3);
}

}  // namespace
}  // namespace segmini
