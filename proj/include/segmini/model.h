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

#ifndef SEGMINI_MODEL_H_
#define SEGMINI_MODEL_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "segmini/label_map.h"
#include "segmini/nn_ops.h"
#include "segmini/tensor.h"

namespace segmini {

enum class LayerKind { kSepConvRelu, kMaxPool, kBatchNorm, kUpsample, kSoftmax };
enum class DownsampleMode { kMaxPool, kStridedConv };

const char* LayerKindName(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kBatchNorm;
  // Only meaningful for kSepConvRelu.
  int channels_out = 0;
  int kernel_size = 3;
  int stride = 1;

  static LayerSpec SepConvRelu(int channels, int kernel = 3, int stride = 1) {
    return {LayerKind::kSepConvRelu, channels, kernel, stride};
  }
  static LayerSpec Of(LayerKind kind) { return {kind, 0, 3, 1}; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Declarative layer chain. Text form (one key=value per line, '#' comments):
//
//   input_channels=3
//   class_count=2
//   downsample_mode=maxpool
//   layer=batchnorm
//   layer=sepconv_relu channels=8 kernel=3 stride=1
//   layer=maxpool
//   ...
//   layer=softmax
struct ModelConfig {
  int input_channels = 3;
  int class_count = 2;
  DownsampleMode downsample_mode = DownsampleMode::kMaxPool;
  std::vector<LayerSpec> layers;

  std::string ToText() const;
  // Throws kConfig on syntax errors. Semantic checks live in Validate().
  static ModelConfig FromText(std::string_view text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

using EncoderWidths = std::array<int, 4>;
inline constexpr EncoderWidths kDefaultWidths = {8, 16, 32, 64};

// The E1-E4 / D1-D4 encoder-decoder:
//   BN | E1-E3: SepConv+ReLU, MaxPool, BN | E4: SepConv+ReLU, BN
//   D1: SepConv+ReLU, BN | D2-D3: UpSample, SepConv+ReLU, BN
//   D4: UpSample, SepConv+ReLU(class_count) | SoftMax
// With kStridedConv each [SepConv, MaxPool] pair becomes one stride-2
// SepConv. Decoder widths mirror the encoder: w3, w2, w1.
ModelConfig DefaultConfig(int class_count,
                          DownsampleMode mode = DownsampleMode::kMaxPool,
                          const EncoderWidths& widths = kDefaultWidths);

// Every violated invariant, one message each. Empty means valid.
std::vector<std::string> Validate(const ModelConfig& config);
void ValidateOrThrow(const ModelConfig& config);

// Number of 2x spatial reductions along the chain.
int DownsampleCount(const ModelConfig& config);
// Channel count after each layer, preceded by input_channels.
std::vector<int> ChannelLadder(const ModelConfig& config);
std::string LayerName(const ModelConfig& config, std::size_t index);

template <typename T>
struct SepConvWeights {
  ConvParams<T> depthwise;  // (C_in, 1, k, k), no bias, carries the stride
  ConvParams<T> pointwise;  // (C_out, C_in, 1, 1) + bias
};

template <typename T>
using LayerParams =
    std::variant<std::monostate, SepConvWeights<T>, BatchNormParams<T>>;

template <typename T>
struct BasicModel {
  ModelConfig config;
  std::vector<LayerParams<T>> layers;

  // Gradient-bearing arrays in layer order: sepconv {dw weights, pw weights,
  // pw bias}; batchnorm {gamma, beta}.
  std::vector<std::span<T>> TrainableArrays();
  std::vector<std::span<const T>> TrainableArrays() const;
  // Everything that is serialized: trainable arrays plus batchnorm running
  // mean and variance after beta.
  std::vector<std::span<T>> AllArrays();
  std::vector<std::span<const T>> AllArrays() const;
  std::size_t ParameterCount() const;

  template <typename U>
  BasicModel<U> Cast() const;
};

using Model = BasicModel<float>;

// Weights uniform in +-sqrt(6 / fan_in) from a seeded mt19937_64; biases and
// beta 0, gamma 1, running statistics (0, 1). Throws kConfig if invalid.
Model InitModel(const ModelConfig& config, std::uint64_t seed);

template <typename T>
struct TraceStep {
  OpKind kind;
  std::size_t layer;
  OpCache<T> cache;
};

template <typename T>
struct ForwardPass {
  BasicTensor<T> probs;
  // Train mode only: one entry per executed op, in execution order.
  std::vector<TraceStep<T>> trace;
  // Train mode only: updated running statistics, indexed by layer (empty
  // vectors for non-batchnorm layers).
  std::vector<std::vector<T>> running_mean;
  std::vector<std::vector<T>> running_var;
};

// Throws kShape when the image channels mismatch or its spatial dims are not
// divisible by 2^DownsampleCount (the message names the divisor).
template <typename T>
ForwardPass<T> Forward(const BasicModel<T>& model, const BasicTensor<T>& image,
                       Mode mode);

template <typename T>
void CommitRunningStats(BasicModel<T>& model, const ForwardPass<T>& pass);

// Gradients for TrainableArrays() given dLoss/dlogits (the softmax input).
template <typename T>
std::vector<std::vector<T>> BackwardFromLogits(const BasicModel<T>& model,
                                               const ForwardPass<T>& pass,
                                               const BasicTensor<T>& grad_logits);

// Per-pixel argmax, ties to the lowest class. Requires batch 1.
template <typename T>
LabelMap PredictLabels(const BasicTensor<T>& probs);
template <typename T>
std::vector<LabelMap> PredictLabelsBatch(const BasicTensor<T>& probs);

// Binary model file: "BBSEG1\0", version byte, u32 config-text length,
// config text, then u32 count + little-endian f32 values per array in
// AllArrays() order.
std::string SerializeModel(const Model& model);
Model DeserializeModel(std::string_view bytes);
void SaveModel(const Model& model, const std::string& path);
Model LoadModel(const std::string& path);

}  // namespace segmini

#endif  // SEGMINI_MODEL_H_
