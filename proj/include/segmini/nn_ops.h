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

#ifndef SEGMINI_NN_OPS_H_
#define SEGMINI_NN_OPS_H_

#include <cstdint>
#include <variant>
#include <vector>

#include "segmini/tensor.h"

namespace segmini {

enum class Padding { kSame, kValid };
enum class Mode { kTrain, kInfer };

enum class OpKind {
  kConvFull,
  kDepthwise,
  kPointwise,
  kSeparable,
  kRelu,
  kMaxPool,
  kBatchNorm,
  kUpsample,
  kSoftmax,
};

const char* OpKindName(OpKind kind);

// Weights are (out, in, k, k) for full convolution, (in, 1, k, k) for
// depthwise and (out, in, 1, 1) for pointwise. An empty bias means the stage
// has no bias term; otherwise it holds one value per output channel.
// "Same" padding pads (k - 1) / 2 zeros on every side, so the output is
// ceil(in / stride) for odd k.
template <typename T>
struct ConvParams {
  BasicTensor<T> weights;
  std::vector<T> bias;
  int stride = 1;
  Padding padding = Padding::kSame;

  int kernel_size() const { return weights.shape().h; }
  int out_channels() const { return weights.shape().n; }
};

template <typename T>
struct BatchNormParams {
  std::vector<T> gamma;
  std::vector<T> beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T eps = T(1e-5);
  T momentum = T(0.9);

  static BatchNormParams Identity(int channels);
  int channels() const { return static_cast<int>(gamma.size()); }
  void Validate() const;

  template <typename U>
  BatchNormParams<U> Cast() const;
};

// Flat input index of the winning element for every pooled output element.
struct PoolIndices {
  Shape input_shape;
  std::vector<std::int64_t> index;
};

// Output spatial extent of a convolution along one axis.
int ConvOutputSize(int in, int kernel, int stride, Padding padding);

// --- Forward-state caches -------------------------------------------------

template <typename T>
struct ConvCache {
  OpKind kind = OpKind::kConvFull;
  BasicTensor<T> input;
  ConvParams<T> params;
  Shape output_shape;
};

template <typename T>
struct SeparableCache {
  ConvCache<T> depthwise;
  ConvCache<T> pointwise;
};

template <typename T>
struct ReluCache {
  BasicTensor<T> input;
};

struct MaxPoolCache {
  PoolIndices indices;
  Shape output_shape;
};

template <typename T>
struct BatchNormCache {
  Mode mode = Mode::kInfer;
  BasicTensor<T> normalized;
  std::vector<T> inv_std;
  std::vector<T> gamma;
};

struct UpsampleCache {
  Shape input_shape;
};

template <typename T>
struct SoftmaxCache {
  BasicTensor<T> probs;
};

template <typename T>
using OpCache =
    std::variant<std::monostate, ConvCache<T>, SeparableCache<T>, ReluCache<T>,
                 MaxPoolCache, BatchNormCache<T>, UpsampleCache,
                 SoftmaxCache<T>>;

// Gradient w.r.t. the op input plus one flat array per trainable parameter.
// Parameter order: conv {weights, bias?}; separable {dw weights, dw bias?,
// pw weights, pw bias?}; batchnorm {gamma, beta}; others none.
template <typename T>
struct OpGrads {
  BasicTensor<T> input;
  std::vector<std::vector<T>> params;
};

// --- Forward ops ------------------------------------------------------------

template <typename T>
BasicTensor<T> Conv2dFull(const BasicTensor<T>& input, const ConvParams<T>& p,
                          OpCache<T>* cache = nullptr);

template <typename T>
BasicTensor<T> DepthwiseConv2d(const BasicTensor<T>& input,
                               const ConvParams<T>& p,
                               OpCache<T>* cache = nullptr);

template <typename T>
BasicTensor<T> PointwiseConv2d(const BasicTensor<T>& input,
                               const ConvParams<T>& p,
                               OpCache<T>* cache = nullptr);

// Depthwise stage (carries the stride) followed by the pointwise stage.
template <typename T>
BasicTensor<T> SeparableConv2d(const BasicTensor<T>& input,
                               const ConvParams<T>& depthwise,
                               const ConvParams<T>& pointwise,
                               OpCache<T>* cache = nullptr);

template <typename T>
BasicTensor<T> Relu(const BasicTensor<T>& input, OpCache<T>* cache = nullptr);

template <typename T>
struct MaxPoolResult {
  BasicTensor<T> output;
  PoolIndices indices;
};

// Disjoint 2x2 windows; ties go to the first element in row-major window
// order. Odd H or W is a shape error.
template <typename T>
MaxPoolResult<T> MaxPool2x2(const BasicTensor<T>& input,
                            OpCache<T>* cache = nullptr);

template <typename T>
struct BatchNormResult {
  BasicTensor<T> output;
  // Running statistics after this call. Unchanged in infer mode.
  std::vector<T> running_mean;
  std::vector<T> running_var;
};

// Train mode normalizes with biased batch statistics over (n, h, w) and
// blends them into the running statistics:
//   running = momentum * running + (1 - momentum) * batch.
template <typename T>
BatchNormResult<T> BatchNorm(const BasicTensor<T>& input,
                             const BatchNormParams<T>& p, Mode mode,
                             OpCache<T>* cache = nullptr);

template <typename T>
BasicTensor<T> UpsampleNearest2x(const BasicTensor<T>& input,
                                 OpCache<T>* cache = nullptr);

// Channel-wise softmax at every pixel (max-subtracted).
template <typename T>
BasicTensor<T> SoftmaxPixelwise(const BasicTensor<T>& logits,
                                OpCache<T>* cache = nullptr);

// --- Backward ---------------------------------------------------------------

// Throws kState when the cache was not produced by a forward call of `kind`
// or when grad_output does not match the cached output shape.
template <typename T>
OpGrads<T> Backward(OpKind kind, const OpCache<T>& cache,
                    const BasicTensor<T>& grad_output);

}  // namespace segmini

#endif  // SEGMINI_NN_OPS_H_
