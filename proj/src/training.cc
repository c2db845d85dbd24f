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

#include "segmini/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "segmini/metrics.h"

namespace segmini {
namespace {

template <typename T>
std::span<const T> AsConstSpan(const std::vector<T>& v) {
  return {v.data(), v.size()};
}

Tensor StackImages(const Dataset& data, std::span<const std::size_t> idx) {
  const Shape first = data.samples[idx[0]].image.shape();
  Tensor batch(Shape{static_cast<int>(idx.size()), first.c, first.h, first.w});
  const std::size_t per = first.ElementCount();
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const Tensor& img = data.samples[idx[b]].image;
    if (img.shape() != first) {
      Fail(ErrorKind::kData, "images in one batch must share a size");
    }
    std::copy(img.data(), img.data() + per, batch.data() + b * per);
  }
  return batch;
}

EvalResult EvaluateSubset(const Model& model, const Dataset& data,
                          std::span<const std::size_t> idx) {
  std::vector<LabelMap> pred;
  std::vector<LabelMap> target;
  for (std::size_t i : idx) {
    const auto pass = Forward(model, data.samples[i].image, Mode::kInfer);
    pred.push_back(PredictLabels(pass.probs));
    target.push_back(data.samples[i].mask);
  }
  return Evaluate(pred, target, data.class_count);
}

}  // namespace

void Hyperparams::Validate(int class_count) const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    Fail(ErrorKind::kConfig, "learning rate must be finite and non-negative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    Fail(ErrorKind::kConfig, "momentum must lie in [0, 1)");
  }
  if (batch_size < 1) Fail(ErrorKind::kConfig, "batch size must be >= 1");
  if (epochs < 1) Fail(ErrorKind::kConfig, "epochs must be >= 1");
  if (!class_weights.empty()) {
    if (static_cast<int>(class_weights.size()) != class_count) {
      Fail(ErrorKind::kConfig, "need one class weight per class");
    }
    for (double w : class_weights) {
      if (!(w > 0.0)) Fail(ErrorKind::kConfig, "class weights must be positive");
    }
  }
}

template <typename T>
CrossEntropyResult<T> CrossEntropyPixelwise(const BasicTensor<T>& probs,
                                            std::span<const LabelMap> targets,
                                            std::span<const double> class_weights) {
  const Shape& s = probs.shape();
  if (static_cast<int>(targets.size()) != s.n) {
    Fail(ErrorKind::kShape, "cross entropy: " + std::to_string(targets.size()) +
                                " targets for batch " + std::to_string(s.n));
  }
  if (!class_weights.empty() && static_cast<int>(class_weights.size()) != s.c) {
    Fail(ErrorKind::kData, "cross entropy: class weight count differs from class count");
  }
  const std::size_t plane = s.PlaneSize();
  const double pixels = static_cast<double>(plane) * s.n;
  CrossEntropyResult<T> r{0.0, probs};
  double total = 0.0;
  for (int n = 0; n < s.n; ++n) {
    const LabelMap& t = targets[n];
    if (t.h != s.h || t.w != s.w) {
      Fail(ErrorKind::kShape, "cross entropy: target size differs from prediction");
    }
    for (std::size_t i = 0; i < plane; ++i) {
      const int y = t.labels[i];
      if (y < 0 || y >= s.c) {
        Fail(ErrorKind::kData, "label " + std::to_string(y) + " outside [0, " +
                                   std::to_string(s.c) + ")");
      }
      const double w = class_weights.empty() ? 1.0 : class_weights[y];
      const double p = std::max(static_cast<double>(probs.plane(n, y)[i]),
                                std::numeric_limits<double>::min());
      total += w * -std::log(p);
      const T scale = static_cast<T>(w / pixels);
      for (int c = 0; c < s.c; ++c) {
        T& g = r.grad_logits.plane(n, c)[i];
        g = (g - (c == y ? T{1} : T{0})) * scale;
      }
    }
  }
  r.loss = total / pixels;
  return r;
}

void SgdStep(std::span<float> params, std::span<const float> grads,
             std::span<float> velocity, double learning_rate, double momentum) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    Fail(ErrorKind::kShape, "sgd: parameter, gradient and velocity sizes differ");
  }
  const float lr = static_cast<float>(learning_rate);
  const float mu = static_cast<float>(momentum);
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = mu * velocity[i] - lr * grads[i];
    params[i] += velocity[i];
  }
}

DatasetSplit SplitDataset(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = count; i > 1; --i) {
    std::swap(order[i - 1], order[rng() % i]);
  }
  const std::size_t holdout = count / 10;
  DatasetSplit split;
  split.holdout.assign(order.begin(), order.begin() + holdout);
  split.train.assign(order.begin() + holdout, order.end());
  std::sort(split.holdout.begin(), split.holdout.end());
  return split;
}

TrainResult Train(Model model, const Dataset& data, const Hyperparams& hyper,
                  const std::function<void(int, const EpochStats&)>& on_epoch) {
  if (data.empty()) Fail(ErrorKind::kData, "training dataset is empty");
  ValidateOrThrow(model.config);
  hyper.Validate(model.config.class_count);
  data.Validate();
  if (data.class_count != model.config.class_count) {
    Fail(ErrorKind::kData, "dataset has " + std::to_string(data.class_count) +
                               " classes, model expects " +
                               std::to_string(model.config.class_count));
  }
  const auto start = std::chrono::steady_clock::now();
  DatasetSplit split = SplitDataset(data.size(), hyper.seed);
  const std::vector<std::size_t>& eval_idx =
      split.holdout.empty() ? split.train : split.holdout;

  std::vector<std::vector<float>> velocity;
  for (auto arr : model.TrainableArrays()) velocity.emplace_back(arr.size(), 0.0f);

  std::mt19937_64 rng(hyper.seed ^ 0x5eb5eed5eb5eedULL);
  TrainResult result;
  result.report.train_count = split.train.size();
  result.report.holdout_count = split.holdout.size();
  std::vector<std::size_t> order = split.train;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng() % i]);
    }
    double loss_sum = 0.0;
    double pixel_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), b + hyper.batch_size);
      std::span<const std::size_t> idx(order.data() + b, end - b);
      const Tensor images = StackImages(data, idx);
      std::vector<LabelMap> targets;
      for (std::size_t i : idx) targets.push_back(data.samples[i].mask);

      const ForwardPass<float> pass = Forward(model, images, Mode::kTrain);
      const auto ce = CrossEntropyPixelwise(pass.probs, AsConstSpan(targets),
                                            AsConstSpan(hyper.class_weights));
      const auto grads = BackwardFromLogits(model, pass, ce.grad_logits);
      auto arrays = model.TrainableArrays();
      for (std::size_t a = 0; a < arrays.size(); ++a) {
        SgdStep(arrays[a], grads[a], velocity[a], hyper.learning_rate, hyper.momentum);
      }
      CommitRunningStats(model, pass);
      const double pixels = static_cast<double>(images.shape().ElementCount()) /
                            images.shape().c;
      loss_sum += ce.loss * pixels;
      pixel_sum += pixels;
    }
    const EvalResult eval = EvaluateSubset(model, data, eval_idx);
    EpochStats stats{loss_sum / pixel_sum, eval.pixel_accuracy, eval.class_iou};
    if (on_epoch) on_epoch(epoch + 1, stats);
    result.report.epochs.push_back(std::move(stats));
  }
  result.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.model = std::move(model);
  return result;
}

namespace {

// Which branch every piecewise-linear op took: ReLU signs and max-pool
// winners. Equal patterns mean the loss is smooth between the two points.
struct KinkPattern {
  std::vector<bool> relu;
  std::vector<std::int64_t> pool;
  friend bool operator==(const KinkPattern&, const KinkPattern&) = default;
};

KinkPattern PatternOf(const ForwardPass<double>& pass) {
  KinkPattern k;
  for (const TraceStep<double>& step : pass.trace) {
    if (const auto* relu = std::get_if<ReluCache<double>>(&step.cache)) {
      for (double v : relu->input.values()) k.relu.push_back(v > 0.0);
    } else if (const auto* pool = std::get_if<MaxPoolCache>(&step.cache)) {
      k.pool.insert(k.pool.end(), pool->indices.index.begin(), pool->indices.index.end());
    }
  }
  return k;
}

}  // namespace

double RelativeError(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult CompareGradients(const std::function<double()>& loss,
                                 const std::vector<std::span<double>>& params,
                                 const std::vector<std::vector<double>>& analytic,
                                 double epsilon, const KinkProbe& crossed) {
  if (params.size() != analytic.size()) {
    Fail(ErrorKind::kShape, "grad check: analytic gradient layout differs from parameters");
  }
  GradCheckResult r;
  r.min_epsilon = epsilon;
  for (std::size_t a = 0; a < params.size(); ++a) {
    if (params[a].size() != analytic[a].size()) {
      Fail(ErrorKind::kShape, "grad check: analytic array " + std::to_string(a) +
                                  " has the wrong length");
    }
    double diff2 = 0.0;
    double analytic2 = 0.0;
    double numeric2 = 0.0;
    for (std::size_t i = 0; i < params[a].size(); ++i) {
      double& p = params[a][i];
      const double saved = p;
      double eps = epsilon;
      double numeric = 0.0;
      for (int shrink = 0;; ++shrink) {
        p = saved + eps;
        const double up = loss();
        bool kink = crossed && crossed();
        p = saved - eps;
        const double down = loss();
        kink = kink || (crossed && crossed());
        numeric = (up - down) / (2.0 * eps);
        if (!kink) break;
        if (eps / 10.0 < kMinKinkEpsilon) {
          // Sits on a kink: no derivative exists, so there is nothing to compare.
          ++r.on_kink;
          numeric = analytic[a][i];
          break;
        }
        if (shrink == 0) ++r.refined;
        eps /= 10.0;
      }
      p = saved;
      r.min_epsilon = std::min(r.min_epsilon, eps);
      diff2 += (analytic[a][i] - numeric) * (analytic[a][i] - numeric);
      analytic2 += analytic[a][i] * analytic[a][i];
      numeric2 += numeric * numeric;
      const double err = RelativeError(analytic[a][i], numeric);
      ++r.checked;
      if (!(err <= r.max_relative_error)) {
        r.max_relative_error = err;
        r.worst_array = a;
        r.worst_index = i;
        r.worst_analytic = analytic[a][i];
        r.worst_numeric = numeric;
      }
    }
    const double norm_err = std::sqrt(diff2) /
                            std::max({std::sqrt(analytic2), std::sqrt(numeric2),
                                      kRelativeErrorFloor});
    if (!(norm_err <= r.max_array_relative_error)) {
      r.max_array_relative_error = norm_err;
      r.worst_norm_array = a;
    }
  }
  return r;
}

ModelGradients ComputeGradients(const BasicModel<double>& model,
                                const TensorD& images,
                                std::span<const LabelMap> targets,
                                std::span<const double> class_weights) {
  const ForwardPass<double> pass = Forward(model, images, Mode::kTrain);
  const auto ce = CrossEntropyPixelwise(pass.probs, targets, class_weights);
  return {ce.loss, BackwardFromLogits(model, pass, ce.grad_logits)};
}

GradCheckResult GradCheck(const Model& model, const Tensor& images,
                          std::span<const LabelMap> targets, double epsilon,
                          std::span<const double> class_weights) {
  BasicModel<double> m = model.Cast<double>();
  const TensorD x = images.Cast<double>();
  const ModelGradients analytic = ComputeGradients(m, x, targets, class_weights);
  const KinkPattern base = PatternOf(Forward(m, x, Mode::kTrain));
  KinkPattern last;
  auto loss = [&] {
    const ForwardPass<double> pass = Forward(m, x, Mode::kTrain);
    last = PatternOf(pass);
    return CrossEntropyPixelwise(pass.probs, targets, class_weights).loss;
  };
  auto crossed = [&] { return !(last == base); };
  return CompareGradients(loss, m.TrainableArrays(), analytic.grads, epsilon, crossed);
}

template CrossEntropyResult<float> CrossEntropyPixelwise(
    const Tensor&, std::span<const LabelMap>, std::span<const double>);
template CrossEntropyResult<double> CrossEntropyPixelwise(
    const TensorD&, std::span<const LabelMap>, std::span<const double>);

}  // namespace segmini
