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

#include "segmini/cost_model.h"

#include <cstdio>
#include <sstream>

namespace segmini {

std::uint64_t ConvMacs(const Shape& input, int out_channels, int kernel,
                       int stride, Padding padding, ConvVariant variant) {
  using U = std::uint64_t;
  const U n = input.n;
  const U cin = input.c;
  const U cout = out_channels;
  const U k2 = static_cast<U>(kernel) * kernel;
  auto out_pixels = [&](int k) {
    return static_cast<U>(ConvOutputSize(input.h, k, stride, padding)) *
           static_cast<U>(ConvOutputSize(input.w, k, stride, padding));
  };
  switch (variant) {
    case ConvVariant::kFull:
      return n * out_pixels(kernel) * cout * cin * k2;
    case ConvVariant::kDepthwise:
      return n * out_pixels(kernel) * cin * k2;
    case ConvVariant::kPointwise:
      return n * out_pixels(1) * cin * cout;
    case ConvVariant::kSeparable:
      return n * out_pixels(kernel) * (cin * k2 + cin * cout);
  }
  return 0;
}

double SeparableRatio(int c_out, int kernel) {
  return 1.0 / c_out + 1.0 / (static_cast<double>(kernel) * kernel);
}

CostReport ModelCost(const ModelConfig& config, const Shape& input) {
  ValidateOrThrow(config);
  input.Validate();
  if (input.c != config.input_channels) {
    Fail(ErrorKind::kShape, "input has " + std::to_string(input.c) +
                                " channels, config expects " +
                                std::to_string(config.input_channels));
  }
  const int divisor = 1 << DownsampleCount(config);
  if (input.h % divisor != 0 || input.w % divisor != 0) {
    Fail(ErrorKind::kShape, "input size must be divisible by " + std::to_string(divisor));
  }
  CostReport report;
  Shape s = input;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerSpec& l = config.layers[i];
    LayerCost cost;
    cost.name = LayerName(config, i);
    switch (l.kind) {
      case LayerKind::kSepConvRelu: {
        const std::uint64_t k2 = static_cast<std::uint64_t>(l.kernel_size) * l.kernel_size;
        const std::uint64_t cin = s.c;
        const std::uint64_t cout = l.channels_out;
        cost.macs = ConvMacs(s, l.channels_out, l.kernel_size, l.stride,
                             Padding::kSame, ConvVariant::kSeparable);
        cost.full_macs = ConvMacs(s, l.channels_out, l.kernel_size, l.stride,
                                  Padding::kSame, ConvVariant::kFull);
        cost.params = cin * k2 + cin * cout + cout;
        cost.full_params = cout * cin * k2 + cout;
        cost.separable_vs_full =
            static_cast<double>(cost.macs) / static_cast<double>(cost.full_macs);
        s = Shape{s.n, l.channels_out,
                  ConvOutputSize(s.h, l.kernel_size, l.stride, Padding::kSame),
                  ConvOutputSize(s.w, l.kernel_size, l.stride, Padding::kSame)};
        cost.other_ops = 2 * s.ElementCount();  // bias add + ReLU compare
        break;
      }
      case LayerKind::kMaxPool:
        s = Shape{s.n, s.c, s.h / 2, s.w / 2};
        cost.other_ops = 3 * s.ElementCount();
        break;
      case LayerKind::kBatchNorm:
        cost.params = 4 * static_cast<std::uint64_t>(s.c);
        cost.full_params = cost.params;
        cost.other_ops = 2 * s.ElementCount();
        break;
      case LayerKind::kUpsample:
        s = Shape{s.n, s.c, s.h * 2, s.w * 2};
        break;
      case LayerKind::kSoftmax:
        cost.other_ops = s.ElementCount();
        break;
    }
    if (l.kind != LayerKind::kSepConvRelu) cost.full_macs = cost.macs;
    cost.output = s;
    report.total_macs += cost.macs;
    report.total_params += cost.params;
    report.total_other_ops += cost.other_ops;
    report.total_full_macs += cost.full_macs;
    report.total_full_params += cost.full_params;
    report.layers.push_back(std::move(cost));
  }
  return report;
}

std::string CostReport::ToTable() const {
  std::ostringstream out;
  char line[200];
  std::snprintf(line, sizeof(line), "%-18s %-18s %12s %12s %10s %12s %8s\n",
                "layer", "output", "macs", "full_macs", "params", "other_ops", "ratio");
  out << line;
  for (const LayerCost& l : layers) {
    char ratio[16] = "-";
    if (l.separable_vs_full > 0) std::snprintf(ratio, sizeof(ratio), "%.4f", l.separable_vs_full);
    std::snprintf(line, sizeof(line), "%-18s %-18s %12llu %12llu %10llu %12llu %8s\n",
                  l.name.c_str(), l.output.ToString().c_str(),
                  static_cast<unsigned long long>(l.macs),
                  static_cast<unsigned long long>(l.full_macs),
                  static_cast<unsigned long long>(l.params),
                  static_cast<unsigned long long>(l.other_ops), ratio);
    out << line;
  }
  std::snprintf(line, sizeof(line), "%-18s %-18s %12llu %12llu %10llu %12llu %8.4f\n",
                "total", "", static_cast<unsigned long long>(total_macs),
                static_cast<unsigned long long>(total_full_macs),
                static_cast<unsigned long long>(total_params),
                static_cast<unsigned long long>(total_other_ops),
                total_full_macs ? static_cast<double>(total_macs) / total_full_macs : 0.0);
  out << line;
  return out.str();
}

std::string CostReport::ToKeyValue() const {
  std::ostringstream out;
  for (const LayerCost& l : layers) {
    out << "layer." << l.name << ".macs=" << l.macs << "\n";
    out << "layer." << l.name << ".full_macs=" << l.full_macs << "\n";
    out << "layer." << l.name << ".params=" << l.params << "\n";
    out << "layer." << l.name << ".other_ops=" << l.other_ops << "\n";
    out << "layer." << l.name << ".output=" << l.output.n << "x" << l.output.c
        << "x" << l.output.h << "x" << l.output.w << "\n";
  }
  out << "total.macs=" << total_macs << "\n";
  out << "total.full_macs=" << total_full_macs << "\n";
  out << "total.params=" << total_params << "\n";
  out << "total.full_params=" << total_full_params << "\n";
  out << "total.other_ops=" << total_other_ops << "\n";
  return out.str();
}

}  // namespace segmini
