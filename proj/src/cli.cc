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

#include "segmini/cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "segmini/cost_model.h"
#include "segmini/dataset.h"
#include "segmini/image_io.h"
#include "segmini/lut.h"
#include "segmini/metrics.h"
#include "segmini/model.h"
#include "segmini/parallel.h"
#include "segmini/training.h"

namespace segmini::cli {
namespace {

struct Size {
  int h = 0;
  int w = 0;
};

Size ParseSize(const std::string& text) {
  const auto x = text.find('x');
  int h = 0;
  int w = 0;
  try {
    std::size_t used_h = 0;
    std::size_t used_w = 0;
    if (x == std::string::npos) throw std::invalid_argument(text);
    h = std::stoi(text.substr(0, x), &used_h);
    w = std::stoi(text.substr(x + 1), &used_w);
    if (used_h != x || used_w != text.size() - x - 1) throw std::invalid_argument(text);
  } catch (const std::logic_error&) {
    Fail(ErrorKind::kUsage, "--size expects HxW, got '" + text + "'");
  }
  if (h < 1 || w < 1) Fail(ErrorKind::kUsage, "--size dimensions must be positive");
  return {h, w};
}

ModelConfig ConfigFromFlag(const std::string& flag, int classes, const std::string& mode) {
  if (flag == "default") {
    return DefaultConfig(classes, mode == "strided_conv" ? DownsampleMode::kStridedConv
                                                         : DownsampleMode::kMaxPool);
  }
  ModelConfig config = ModelConfig::FromText(ReadFileBytes(flag));
  ValidateOrThrow(config);
  return config;
}

std::vector<double> ParseWeights(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::logic_error&) {
      Fail(ErrorKind::kUsage, "bad class weight '" + item + "'");
    }
  }
  return out;
}

void PrintEpoch(std::ostream& out, const std::string& prefix, const EpochStats& s) {
  out << prefix << "loss=" << s.mean_loss << " " << prefix
      << "pixel_accuracy=" << s.pixel_accuracy;
  for (std::size_t c = 0; c < s.class_iou.size(); ++c) {
    out << " " << prefix << "iou." << c << "=" << s.class_iou[c];
  }
  out << "\n";
}

Tensor Overlay(const Tensor& image, const LabelMap& labels) {
  static constexpr float kPalette[][3] = {
      {1, 0, 1}, {1, 1, 0}, {0, 1, 1}, {1, 0.5f, 0}, {0, 0.5f, 1}, {1, 0, 0}};
  Tensor out = image;
  for (int y = 0; y < labels.h; ++y) {
    for (int x = 0; x < labels.w; ++x) {
      const int l = labels.at(y, x);
      if (l == 0) continue;
      const float* tint = kPalette[(l - 1) % 6];
      for (int c = 0; c < 3; ++c) {
        float& v = out.at(0, c, y, x);
        v = 0.5f * v + 0.5f * tint[c];
      }
    }
  }
  return out;
}

int ExitFor(ErrorKind kind) {
  return kind == ErrorKind::kUsage ? kExitUsage : kExitData;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (const char* env = std::getenv("SEGMINI_THREADS")) {
    SetThreadCount(std::max(1, std::atoi(env)));
  }
  CLI::App app{"segmini: minimal semantic segmentation engine", "segmini"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string kind;
  int count = 0;
  std::string size_text;
  std::uint64_t seed = 0;
  std::string out_dir;
  synth->add_option("--kind", kind, "ball | goal")->required()->check(CLI::IsMember({"ball", "goal"}));
  synth->add_option("--n", count, "Number of images")->required()->check(CLI::NonNegativeNumber);
  synth->add_option("--size", size_text, "HxW")->required();
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--out", out_dir, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a model on a dataset directory");
  std::string data_dir;
  std::string config_flag = "default";
  int classes = 0;
  Hyperparams hyper;
  hyper.epochs = 10;
  std::string weights_text;
  std::string model_path;
  std::string downsample = "maxpool";
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--config", config_flag, "Config file or 'default'");
  train->add_option("--classes", classes, "Class count (default: from dataset)");
  train->add_option("--downsample", downsample, "maxpool | strided_conv (default config only)")
      ->check(CLI::IsMember({"maxpool", "strided_conv"}));
  train->add_option("--epochs", hyper.epochs);
  train->add_option("--lr", hyper.learning_rate);
  train->add_option("--momentum", hyper.momentum);
  train->add_option("--batch", hyper.batch_size);
  train->add_option("--seed", hyper.seed);
  train->add_option("--class-weights", weights_text, "Comma-separated per-class weights");
  train->add_option("--out", model_path, "Model output path")->required();

  // infer
  auto* infer = app.add_subcommand("infer", "Segment one PPM image");
  std::string image_path;
  std::string mask_path;
  std::string overlay_path;
  infer->add_option("--model", model_path)->required();
  infer->add_option("--image", image_path)->required();
  infer->add_option("--out-mask", mask_path)->required();
  infer->add_option("--out-overlay", overlay_path);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a model on a dataset directory");
  std::uint64_t holdout_seed = 0;
  eval->add_option("--model", model_path)->required();
  eval->add_option("--data", data_dir)->required();
  auto* holdout_opt = eval->add_option("--holdout-seed", holdout_seed,
                                       "Evaluate only the holdout split train used with this seed");

  // cost
  auto* cost = app.add_subcommand("cost", "Print the analytic cost report");
  int cost_classes = 2;
  cost->add_option("--config", config_flag, "Config file or 'default'");
  cost->add_option("--size", size_text, "HxW")->required();
  cost->add_option("--classes", cost_classes, "Class count for the default config");
  cost->add_option("--downsample", downsample, "maxpool | strided_conv (default config only)")
      ->check(CLI::IsMember({"maxpool", "strided_conv"}));

  // bench
  auto* bench = app.add_subcommand("bench", "Time inference on random frames");
  int iters = 10;
  bench->add_option("--model", model_path)->required();
  bench->add_option("--size", size_text, "HxW")->required();
  bench->add_option("--iters", iters)->check(CLI::PositiveNumber);

  // lut
  auto* lut = app.add_subcommand("lut", "Segment an image with an HSV lookup table");
  std::string thresholds_path;
  lut->add_option("--thresholds", thresholds_path)->required();
  lut->add_option("--image", image_path)->required();
  lut->add_option("--out-mask", mask_path)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      const Size size = ParseSize(size_text);
      const Dataset data = SynthDataset(kind == "ball" ? SceneKind::kBall : SceneKind::kGoal,
                                        count, size.h, size.w, seed);
      SaveDataset(data, out_dir);
      out << "images=" << data.size() << "\nout=" << out_dir << "\n";
    } else if (train->parsed()) {
      const Dataset data = LoadDataset(data_dir);
      if (classes == 0) classes = data.class_count;
      if (classes != data.class_count) {
        Fail(ErrorKind::kData, "--classes " + std::to_string(classes) +
                                   " but dataset has " + std::to_string(data.class_count));
      }
      if (!weights_text.empty()) hyper.class_weights = ParseWeights(weights_text);
      const ModelConfig config = ConfigFromFlag(config_flag, classes, downsample);
      out << std::setprecision(6) << std::fixed;
      auto result = Train(InitModel(config, hyper.seed), data, hyper,
                          [&out](int epoch, const EpochStats& s) {
                            out << "epoch=" << epoch << " ";
                            PrintEpoch(out, "", s);
                          });
      SaveModel(result.model, model_path);
      out << std::defaultfloat << std::setprecision(std::numeric_limits<double>::max_digits10);
      out << "train_count=" << result.report.train_count << "\n";
      out << "holdout_count=" << result.report.holdout_count << "\n";
      const EpochStats& last = result.report.epochs.back();
      out << "final.loss=" << last.mean_loss << "\n";
      out << "final.pixel_accuracy=" << last.pixel_accuracy << "\n";
      for (std::size_t c = 0; c < last.class_iou.size(); ++c) {
        out << "final.iou." << c << "=" << last.class_iou[c] << "\n";
      }
      out << "seconds=" << result.report.seconds << "\n";
    } else if (infer->parsed()) {
      const Model model = LoadModel(model_path);
      const Tensor image = LoadPpm(image_path);
      const LabelMap labels = PredictLabels(Forward(model, image, Mode::kInfer).probs);
      SaveMask(labels, mask_path);
      if (!overlay_path.empty()) SavePpm(Overlay(image, labels), overlay_path);
      out << "size=" << labels.h << "x" << labels.w << "\n";
    } else if (eval->parsed()) {
      const Model model = LoadModel(model_path);
      const Dataset data = LoadDataset(data_dir);
      std::vector<std::size_t> idx;
      if (holdout_opt->count() > 0) {
        idx = SplitDataset(data.size(), holdout_seed).holdout;
        if (idx.empty()) idx = SplitDataset(data.size(), holdout_seed).train;
      } else {
        for (std::size_t i = 0; i < data.size(); ++i) idx.push_back(i);
      }
      std::vector<LabelMap> pred;
      std::vector<LabelMap> target;
      for (std::size_t i : idx) {
        pred.push_back(PredictLabels(Forward(model, data.samples[i].image, Mode::kInfer).probs));
        target.push_back(data.samples[i].mask);
      }
      out << "images=" << idx.size() << "\n";
      out << Evaluate(pred, target, model.config.class_count).ToKeyValue();
    } else if (cost->parsed()) {
      const Size size = ParseSize(size_text);
      const ModelConfig config = ConfigFromFlag(config_flag, cost_classes, downsample);
      const CostReport report =
          ModelCost(config, Shape{1, config.input_channels, size.h, size.w});
      out << report.ToTable() << "\n" << report.ToKeyValue();
    } else if (bench->parsed()) {
      const Size size = ParseSize(size_text);
      const Model model = LoadModel(model_path);
      Tensor frame(Shape{1, model.config.input_channels, size.h, size.w});
      std::mt19937_64 rng(0);
      for (float& v : frame.values()) v = static_cast<float>(rng() >> 40) / (1 << 24);
      std::vector<double> ms;
      Forward(model, frame, Mode::kInfer);  // warm-up
      for (int i = 0; i < iters; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Forward(model, frame, Mode::kInfer);
        ms.push_back(std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0).count());
      }
      double mean = 0.0;
      for (double v : ms) mean += v;
      mean /= ms.size();
      std::sort(ms.begin(), ms.end());
      const std::size_t p95 = std::min(ms.size() - 1,
                                       static_cast<std::size_t>(std::ceil(0.95 * ms.size())) - 1);
      out << std::setprecision(3) << std::fixed;
      out << "iters=" << iters << "\nmean_ms=" << mean << "\np95_ms=" << ms[p95] << "\n";
    } else if (lut->parsed()) {
      const Lut table = Lut::Build(HsvThresholds::Load(thresholds_path));
      const LabelMap labels = SegmentLut(LoadPpm(image_path), table);
      SaveMask(labels, mask_path);
      out << "size=" << labels.h << "x" << labels.w << "\n";
    }
  } catch (const Error& e) {
    err << "error: " << ErrorKindName(e.kind()) << ": " << e.what() << "\n";
    return ExitFor(e.kind());
  } catch (const std::exception& e) {
    err << "error: data: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace segmini::cli
