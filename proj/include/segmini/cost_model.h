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

#ifndef SEGMINI_COST_MODEL_H_
#define SEGMINI_COST_MODEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "segmini/model.h"
#include "segmini/nn_ops.h"
#include "segmini/tensor.h"

namespace segmini {

enum class ConvVariant { kFull, kDepthwise, kPointwise, kSeparable };

// Multiply-accumulates of one convolution over the whole batch, padding
// taps included:
//   full       Ho*Wo*Cout*Cin*k^2
//   depthwise  Ho*Wo*Cin*k^2            (out_channels ignored)
//   pointwise  Ho*Wo*Cin*Cout           (k ignored)
//   separable  depthwise + pointwise, stride applied in the depthwise stage
std::uint64_t ConvMacs(const Shape& input, int out_channels, int kernel,
                       int stride, Padding padding, ConvVariant variant);

// MAC ratio separable/full at stride 1: 1/c_out + 1/k^2.
double SeparableRatio(int c_out, int kernel);

struct LayerCost {
  std::string name;
  std::uint64_t macs = 0;
  std::uint64_t params = 0;
  // Bias adds, ReLU and max-pool comparisons, batchnorm scale+shift and
  // softmax exponentials; none of these are multiply-accumulates.
  std::uint64_t other_ops = 0;
  Shape output;
  // Same layer built from a full convolution (equal to macs/params for
  // layers without a convolution).
  std::uint64_t full_macs = 0;
  std::uint64_t full_params = 0;
  // macs / full_macs for convolution layers, 0 otherwise.
  double separable_vs_full = 0.0;
};

struct CostReport {
  std::vector<LayerCost> layers;
  std::uint64_t total_macs = 0;
  std::uint64_t total_params = 0;
  std::uint64_t total_other_ops = 0;
  std::uint64_t total_full_macs = 0;
  std::uint64_t total_full_params = 0;

  std::string ToTable() const;
  std::string ToKeyValue() const;
};

// Throws kConfig for invalid configs and kShape when the input does not fit
// the chain (channels or divisibility).
CostReport ModelCost(const ModelConfig& config, const Shape& input);

}  // namespace segmini

#endif  // SEGMINI_COST_MODEL_H_
