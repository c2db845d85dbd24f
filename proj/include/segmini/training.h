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

#ifndef SEGMINI_TRAINING_H_
#define SEGMINI_TRAINING_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "segmini/dataset.h"
#include "segmini/label_map.h"
#include "segmini/model.h"
#include "segmini/tensor.h"

namespace segmini {

struct Hyperparams {
  double learning_rate = 0.01;
  double momentum = 0.9;
  int batch_size = 4;
  int epochs = 1;
  std::uint64_t seed = 0;
  // Empty means weight 1 for every class.
  std::vector<double> class_weights;

  void Validate(int class_count) const;
};

struct EpochStats {
  double mean_loss = 0.0;
  double pixel_accuracy = 0.0;
  std::vector<double> class_iou;

  friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t train_count = 0;
  std::size_t holdout_count = 0;
  double seconds = 0.0;
};

template <typename T>
struct CrossEntropyResult {
  double loss = 0.0;
  BasicTensor<T> grad_logits;
};

// loss = sum_pixels w[y] * -log p[y] / pixel_count and
// dloss/dlogits = (p - onehot(y)) * w[y] / pixel_count, the fused
// softmax + cross-entropy gradient. Throws kData for labels >= class count
// and kShape when target sizes disagree with probs.
template <typename T>
CrossEntropyResult<T> CrossEntropyPixelwise(const BasicTensor<T>& probs,
                                            std::span<const LabelMap> targets,
                                            std::span<const double> class_weights = {});

// Momentum SGD on one parameter array: v = momentum * v - lr * g; p += v.
void SgdStep(std::span<float> params, std::span<const float> grads,
             std::span<float> velocity, double learning_rate, double momentum);

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;  // ascending
};

// Seeded shuffle, then the first count/10 indices are held out.
DatasetSplit SplitDataset(std::size_t count, std::uint64_t seed);

struct TrainResult {
  Model model;
  TrainReport report;
};

// Shuffled mini-batch SGD. Holdout metrics are computed in infer mode after
// every epoch; when the holdout split is empty the training images are used.
// `on_epoch` receives the 1-based epoch number.
TrainResult Train(Model model, const Dataset& data, const Hyperparams& hyper,
                  const std::function<void(int, const EpochStats&)>& on_epoch = {});

// --- Gradient checking --------------------------------------------------------

// |analytic - numeric| / max(|analytic|, |numeric|, floor). The floor keeps
// gradients that are zero up to rounding from dominating the ratio.
inline constexpr double kRelativeErrorFloor = 1e-6;
double RelativeError(double analytic, double numeric,
                     double floor = kRelativeErrorFloor);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_array = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  // Parameters whose nominal perturbation crossed a kink and were
  // re-differenced with a smaller step, and the smallest step used.
  std::size_t refined = 0;
  double min_epsilon = 0.0;
  // Parameters sitting exactly on a kink at every step down to
  // kMinKinkEpsilon. Their derivative does not exist and they are skipped.
  std::size_t on_kink = 0;
  // Per array: ||analytic - numeric|| / max(||analytic||, ||numeric||).
  double max_array_relative_error = 0.0;
  std::size_t worst_norm_array = 0;
};

// Reports whether the most recent loss evaluation switched a ReLU or max-pool
// branch relative to the unperturbed parameters.
using KinkProbe = std::function<bool()>;
inline constexpr double kMinKinkEpsilon = 1e-7;

// Central differences (f(x + eps) - f(x - eps)) / 2 eps for every scalar in
// `params`, compared with `analytic` (same layout). `loss` must read the
// current parameter values. When `crossed` reports a kink for either side,
// the step shrinks tenfold (down to kMinKinkEpsilon) and the difference is
// retaken, since a central difference across a kink measures neither side.
GradCheckResult CompareGradients(const std::function<double()>& loss,
                                 const std::vector<std::span<double>>& params,
                                 const std::vector<std::vector<double>>& analytic,
                                 double epsilon, const KinkProbe& crossed = {});

// Analytic model gradients (train-mode forward, fused softmax-CE, backward)
// against central differences, everything in 64-bit.
GradCheckResult GradCheck(const Model& model, const Tensor& images,
                          std::span<const LabelMap> targets, double epsilon,
                          std::span<const double> class_weights = {});

// The analytic half of GradCheck: 64-bit loss and trainable-array gradients.
struct ModelGradients {
  double loss = 0.0;
  std::vector<std::vector<double>> grads;
};
ModelGradients ComputeGradients(const BasicModel<double>& model,
                                const TensorD& images,
                                std::span<const LabelMap> targets,
                                std::span<const double> class_weights = {});

}  // namespace segmini

#endif  // SEGMINI_TRAINING_H_
