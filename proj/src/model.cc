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

#include "segmini/model.h"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

namespace segmini {
namespace {

constexpr std::string_view kMagic("BBSEG1\0", 7);
constexpr std::uint8_t kFormatVersion = 1;

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int ParseInt(std::string_view key, std::string_view value) {
  std::string v(value);
  std::size_t used = 0;
  int out = 0;
  try {
    out = std::stoi(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    Fail(ErrorKind::kConfig, "bad integer for " + std::string(key) + ": '" + v + "'");
  }
  return out;
}

LayerKind ParseLayerKind(std::string_view name) {
  for (LayerKind k : {LayerKind::kSepConvRelu, LayerKind::kMaxPool,
                      LayerKind::kBatchNorm, LayerKind::kUpsample,
                      LayerKind::kSoftmax}) {
    if (name == LayerKindName(k)) return k;
  }
  Fail(ErrorKind::kConfig, "unknown layer kind '" + std::string(name) + "'");
}

LayerSpec ParseLayer(std::string_view value) {
  std::istringstream in{std::string(value)};
  std::string token;
  in >> token;
  LayerSpec spec = LayerSpec::Of(ParseLayerKind(token));
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      Fail(ErrorKind::kConfig, "expected key=value in layer line, got '" + token + "'");
    }
    const std::string key = token.substr(0, eq);
    const std::string val = token.substr(eq + 1);
    if (spec.kind != LayerKind::kSepConvRelu) {
      Fail(ErrorKind::kConfig, std::string(LayerKindName(spec.kind)) +
                                   " takes no attributes, got '" + key + "'");
    }
    if (key == "channels") {
      spec.channels_out = ParseInt(key, val);
    } else if (key == "kernel") {
      spec.kernel_size = ParseInt(key, val);
    } else if (key == "stride") {
      spec.stride = ParseInt(key, val);
    } else {
      Fail(ErrorKind::kConfig, "unknown layer attribute '" + key + "'");
    }
  }
  return spec;
}

template <typename T>
void AppendSpans(LayerParams<T>& layer, bool include_buffers,
                 std::vector<std::span<T>>& out) {
  if (auto* s = std::get_if<SepConvWeights<T>>(&layer)) {
    out.emplace_back(s->depthwise.weights.values());
    out.emplace_back(s->pointwise.weights.values());
    out.emplace_back(s->pointwise.bias);
  } else if (auto* b = std::get_if<BatchNormParams<T>>(&layer)) {
    out.emplace_back(b->gamma);
    out.emplace_back(b->beta);
    if (include_buffers) {
      out.emplace_back(b->running_mean);
      out.emplace_back(b->running_var);
    }
  }
}

template <typename T>
std::vector<std::span<const T>> AsConst(std::vector<std::span<T>> spans) {
  return {spans.begin(), spans.end()};
}

// Parameters shaped for the config, zero-filled (batchnorm at identity).
template <typename T>
std::vector<LayerParams<T>> AllocateParams(const ModelConfig& config) {
  std::vector<LayerParams<T>> layers;
  int channels = config.input_channels;
  for (const LayerSpec& spec : config.layers) {
    switch (spec.kind) {
      case LayerKind::kSepConvRelu: {
        SepConvWeights<T> w;
        const int k = spec.kernel_size;
        w.depthwise.weights = BasicTensor<T>(Shape{channels, 1, k, k});
        w.depthwise.stride = spec.stride;
        w.pointwise.weights =
            BasicTensor<T>(Shape{spec.channels_out, channels, 1, 1});
        w.pointwise.bias.assign(spec.channels_out, T{0});
        layers.emplace_back(std::move(w));
        channels = spec.channels_out;
        break;
      }
      case LayerKind::kBatchNorm:
        layers.emplace_back(BatchNormParams<T>::Identity(channels));
        break;
      default:
        layers.emplace_back(std::monostate{});
    }
  }
  return layers;
}

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view Take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      Fail(ErrorKind::kFormat, std::string("model file truncated reading ") + what);
    }
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t U32(const char* what) {
    auto b = Take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[i]);
    return v;
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const char* LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kSepConvRelu:
      return "sepconv_relu";
    case LayerKind::kMaxPool:
      return "maxpool";
    case LayerKind::kBatchNorm:
      return "batchnorm";
    case LayerKind::kUpsample:
      return "upsample";
    case LayerKind::kSoftmax:
      return "softmax";
  }
  return "unknown";
}

std::string ModelConfig::ToText() const {
  std::ostringstream out;
  out << "input_channels=" << input_channels << "\n";
  out << "class_count=" << class_count << "\n";
  out << "downsample_mode="
      << (downsample_mode == DownsampleMode::kMaxPool ? "maxpool" : "strided_conv")
      << "\n";
  for (const LayerSpec& l : layers) {
    out << "layer=" << LayerKindName(l.kind);
    if (l.kind == LayerKind::kSepConvRelu) {
      out << " channels=" << l.channels_out << " kernel=" << l.kernel_size
          << " stride=" << l.stride;
    }
    out << "\n";
  }
  return out.str();
}

ModelConfig ModelConfig::FromText(std::string_view text) {
  ModelConfig config;
  config.layers.clear();
  std::size_t start = 0;
  int line_no = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      Fail(ErrorKind::kConfig, "line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string_view key = Trim(line.substr(0, eq));
    const std::string_view value = Trim(line.substr(eq + 1));
    if (key == "input_channels") {
      config.input_channels = ParseInt(key, value);
    } else if (key == "class_count") {
      config.class_count = ParseInt(key, value);
    } else if (key == "downsample_mode") {
      if (value == "maxpool") {
        config.downsample_mode = DownsampleMode::kMaxPool;
      } else if (value == "strided_conv") {
        config.downsample_mode = DownsampleMode::kStridedConv;
      } else {
        Fail(ErrorKind::kConfig, "unknown downsample_mode '" + std::string(value) + "'");
      }
    } else if (key == "layer") {
      config.layers.push_back(ParseLayer(value));
    } else {
      Fail(ErrorKind::kConfig, "line " + std::to_string(line_no) +
                                   ": unknown key '" + std::string(key) + "'");
    }
  }
  return config;
}

ModelConfig DefaultConfig(int class_count, DownsampleMode mode,
                          const EncoderWidths& widths) {
  ModelConfig c;
  c.class_count = class_count;
  c.downsample_mode = mode;
  auto& L = c.layers;
  const auto bn = LayerSpec::Of(LayerKind::kBatchNorm);
  L.push_back(bn);
  for (int i = 0; i < 3; ++i) {
    if (mode == DownsampleMode::kMaxPool) {
      L.push_back(LayerSpec::SepConvRelu(widths[i]));
      L.push_back(LayerSpec::Of(LayerKind::kMaxPool));
    } else {
      L.push_back(LayerSpec::SepConvRelu(widths[i], 3, 2));
    }
    L.push_back(bn);
  }
  L.push_back(LayerSpec::SepConvRelu(widths[3]));
  L.push_back(bn);
  L.push_back(LayerSpec::SepConvRelu(widths[3]));
  L.push_back(bn);
  for (int i = 2; i >= 1; --i) {
    L.push_back(LayerSpec::Of(LayerKind::kUpsample));
    L.push_back(LayerSpec::SepConvRelu(widths[i]));
    L.push_back(bn);
  }
  L.push_back(LayerSpec::Of(LayerKind::kUpsample));
  L.push_back(LayerSpec::SepConvRelu(class_count));
  L.push_back(LayerSpec::Of(LayerKind::kSoftmax));
  return c;
}

std::vector<std::string> Validate(const ModelConfig& config) {
  std::vector<std::string> errors;
  if (config.input_channels < 1) errors.push_back("input_channels must be >= 1");
  if (config.class_count < 2) errors.push_back("class_count must be >= 2");
  if (config.layers.empty()) {
    errors.push_back("layer list is empty");
    return errors;
  }
  int downs = 0;
  int ups = 0;
  int channels = config.input_channels;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerSpec& l = config.layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" +
                              LayerKindName(l.kind) + "): ";
    switch (l.kind) {
      case LayerKind::kSepConvRelu:
        if (l.channels_out < 1) errors.push_back(where + "channels must be >= 1");
        if (l.kernel_size < 1 || l.kernel_size % 2 == 0) {
          errors.push_back(where + "kernel size must be odd");
        }
        if (l.stride != 1 && l.stride != 2) {
          errors.push_back(where + "stride must be 1 or 2");
        } else if (l.stride == 2) {
          ++downs;
          if (config.downsample_mode == DownsampleMode::kMaxPool) {
            errors.push_back(where + "stride-2 convolution in maxpool downsample mode");
          }
        }
        channels = l.channels_out;
        break;
      case LayerKind::kMaxPool:
        ++downs;
        if (config.downsample_mode == DownsampleMode::kStridedConv) {
          errors.push_back(where + "maxpool in strided_conv downsample mode");
        }
        break;
      case LayerKind::kUpsample:
        ++ups;
        break;
      case LayerKind::kSoftmax:
        if (i + 1 != config.layers.size()) {
          errors.push_back(where + "ordering: softmax must be the last layer");
        }
        break;
      case LayerKind::kBatchNorm:
        break;
    }
  }
  if (config.layers.back().kind != LayerKind::kSoftmax) {
    errors.push_back("ordering: final layer must be softmax");
  }
  if (downs != ups) {
    errors.push_back("resolution: " + std::to_string(downs) +
                     " downsampling steps but " + std::to_string(ups) +
                     " upsampling steps (net factor must be 1)");
  }
  if (channels != config.class_count) {
    errors.push_back("classes: " + std::to_string(channels) +
                     " channels enter softmax but class_count is " +
                     std::to_string(config.class_count));
  }
  return errors;
}

void ValidateOrThrow(const ModelConfig& config) {
  const auto errors = Validate(config);
  if (errors.empty()) return;
  std::string msg = "invalid model config";
  for (const auto& e : errors) msg += "; " + e;
  Fail(ErrorKind::kConfig, msg);
}

int DownsampleCount(const ModelConfig& config) {
  int downs = 0;
  for (const LayerSpec& l : config.layers) {
    if (l.kind == LayerKind::kMaxPool ||
        (l.kind == LayerKind::kSepConvRelu && l.stride == 2)) {
      ++downs;
    }
  }
  return downs;
}

std::vector<int> ChannelLadder(const ModelConfig& config) {
  std::vector<int> ladder{config.input_channels};
  for (const LayerSpec& l : config.layers) {
    ladder.push_back(l.kind == LayerKind::kSepConvRelu ? l.channels_out
                                                       : ladder.back());
  }
  return ladder;
}

std::string LayerName(const ModelConfig& config, std::size_t index) {
  std::string id = std::to_string(index);
  if (id.size() < 2) id = "0" + id;
  return "L" + id + "." + LayerKindName(config.layers.at(index).kind);
}

template <typename T>
std::vector<std::span<T>> BasicModel<T>::TrainableArrays() {
  std::vector<std::span<T>> out;
  for (auto& l : layers) AppendSpans(l, false, out);
  return out;
}

template <typename T>
std::vector<std::span<const T>> BasicModel<T>::TrainableArrays() const {
  return AsConst(const_cast<BasicModel*>(this)->TrainableArrays());
}

template <typename T>
std::vector<std::span<T>> BasicModel<T>::AllArrays() {
  std::vector<std::span<T>> out;
  for (auto& l : layers) AppendSpans(l, true, out);
  return out;
}

template <typename T>
std::vector<std::span<const T>> BasicModel<T>::AllArrays() const {
  return AsConst(const_cast<BasicModel*>(this)->AllArrays());
}

template <typename T>
std::size_t BasicModel<T>::ParameterCount() const {
  std::size_t total = 0;
  for (auto s : AllArrays()) total += s.size();
  return total;
}

template <typename T>
template <typename U>
BasicModel<U> BasicModel<T>::Cast() const {
  BasicModel<U> out;
  out.config = config;
  out.layers = AllocateParams<U>(config);
  auto src = AllArrays();
  auto dst = out.AllArrays();
  for (std::size_t i = 0; i < src.size(); ++i) {
    for (std::size_t j = 0; j < src[i].size(); ++j) {
      dst[i][j] = static_cast<U>(src[i][j]);
    }
  }
  return out;
}

Model InitModel(const ModelConfig& config, std::uint64_t seed) {
  ValidateOrThrow(config);
  Model model;
  model.config = config;
  model.layers = AllocateParams<float>(config);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](std::span<float> values, int fan_in) {
    const double limit = std::sqrt(6.0 / fan_in);
    for (float& v : values) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      v = static_cast<float>((2.0 * u - 1.0) * limit);
    }
  };
  for (auto& layer : model.layers) {
    if (auto* s = std::get_if<SepConvWeights<float>>(&layer)) {
      const int k = s->depthwise.kernel_size();
      fill(s->depthwise.weights.values(), k * k);
      fill(s->pointwise.weights.values(), s->pointwise.weights.shape().c);
    }
  }
  return model;
}

template <typename T>
ForwardPass<T> Forward(const BasicModel<T>& model, const BasicTensor<T>& image,
                       Mode mode) {
  const ModelConfig& config = model.config;
  const Shape& s = image.shape();
  if (s.c != config.input_channels) {
    Fail(ErrorKind::kShape, "image has " + std::to_string(s.c) +
                                " channels, model expects " +
                                std::to_string(config.input_channels));
  }
  const int divisor = 1 << DownsampleCount(config);
  if (s.h % divisor != 0 || s.w % divisor != 0) {
    Fail(ErrorKind::kShape, "image size " + std::to_string(s.h) + "x" +
                                std::to_string(s.w) +
                                " must be divisible by " + std::to_string(divisor));
  }
  const bool train = mode == Mode::kTrain;
  ForwardPass<T> pass;
  if (train) {
    pass.running_mean.resize(config.layers.size());
    pass.running_var.resize(config.layers.size());
  }
  auto record = [&](OpKind kind, std::size_t layer) -> OpCache<T>* {
    if (!train) return nullptr;
    pass.trace.push_back({kind, layer, {}});
    return &pass.trace.back().cache;
  };
  BasicTensor<T> x = image;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerParams<T>& params = model.layers[i];
    switch (config.layers[i].kind) {
      case LayerKind::kSepConvRelu: {
        const auto& w = std::get<SepConvWeights<T>>(params);
        x = SeparableConv2d(x, w.depthwise, w.pointwise,
                            record(OpKind::kSeparable, i));
        x = Relu(x, record(OpKind::kRelu, i));
        break;
      }
      case LayerKind::kMaxPool:
        x = MaxPool2x2(x, record(OpKind::kMaxPool, i)).output;
        break;
      case LayerKind::kBatchNorm: {
        auto r = BatchNorm(x, std::get<BatchNormParams<T>>(params), mode,
                           record(OpKind::kBatchNorm, i));
        x = std::move(r.output);
        if (train) {
          pass.running_mean[i] = std::move(r.running_mean);
          pass.running_var[i] = std::move(r.running_var);
        }
        break;
      }
      case LayerKind::kUpsample:
        x = UpsampleNearest2x(x, record(OpKind::kUpsample, i));
        break;
      case LayerKind::kSoftmax:
        x = SoftmaxPixelwise(x, record(OpKind::kSoftmax, i));
        break;
    }
  }
  pass.probs = std::move(x);
  return pass;
}

template <typename T>
void CommitRunningStats(BasicModel<T>& model, const ForwardPass<T>& pass) {
  if (pass.running_mean.size() != model.layers.size()) {
    Fail(ErrorKind::kState, "forward pass was not run in train mode for this model");
  }
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (auto* b = std::get_if<BatchNormParams<T>>(&model.layers[i])) {
      b->running_mean = pass.running_mean[i];
      b->running_var = pass.running_var[i];
    }
  }
}

template <typename T>
std::vector<std::vector<T>> BackwardFromLogits(const BasicModel<T>& model,
                                               const ForwardPass<T>& pass,
                                               const BasicTensor<T>& grad_logits) {
  if (pass.trace.empty() || pass.trace.back().kind != OpKind::kSoftmax) {
    Fail(ErrorKind::kState, "backward needs a train-mode forward trace ending in softmax");
  }
  // Offset of each layer's first trainable array.
  std::vector<std::size_t> first(model.layers.size() + 1, 0);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    std::size_t n = 0;
    if (std::holds_alternative<SepConvWeights<T>>(model.layers[i])) n = 3;
    if (std::holds_alternative<BatchNormParams<T>>(model.layers[i])) n = 2;
    first[i + 1] = first[i] + n;
  }
  std::vector<std::vector<T>> grads(first.back());
  BasicTensor<T> g = grad_logits;
  for (std::size_t s = pass.trace.size() - 1; s-- > 0;) {
    const TraceStep<T>& step = pass.trace[s];
    OpGrads<T> r = Backward(step.kind, step.cache, g);
    for (std::size_t j = 0; j < r.params.size(); ++j) {
      grads[first[step.layer] + j] = std::move(r.params[j]);
    }
    g = std::move(r.input);
  }
  return grads;
}

template <typename T>
std::vector<LabelMap> PredictLabelsBatch(const BasicTensor<T>& probs) {
  const Shape& s = probs.shape();
  std::vector<LabelMap> out;
  for (int n = 0; n < s.n; ++n) {
    LabelMap m(s.h, s.w);
    for (std::size_t i = 0; i < s.PlaneSize(); ++i) {
      int best = 0;
      T best_v = probs.plane(n, 0)[i];
      for (int c = 1; c < s.c; ++c) {
        if (probs.plane(n, c)[i] > best_v) {
          best_v = probs.plane(n, c)[i];
          best = c;
        }
      }
      m.labels[i] = best;
    }
    out.push_back(std::move(m));
  }
  return out;
}

template <typename T>
LabelMap PredictLabels(const BasicTensor<T>& probs) {
  if (probs.shape().n != 1) {
    Fail(ErrorKind::kShape, "predict_labels expects batch 1, got " +
                                probs.shape().ToString());
  }
  return std::move(PredictLabelsBatch(probs).front());
}

std::string SerializeModel(const Model& model) {
  std::string out(kMagic);
  out.push_back(static_cast<char>(kFormatVersion));
  const std::string text = model.config.ToText();
  PutU32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (auto arr : model.AllArrays()) {
    PutU32(out, static_cast<std::uint32_t>(arr.size()));
    for (float v : arr) PutU32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Model DeserializeModel(std::string_view bytes) {
  Reader in(bytes);
  if (in.Take(kMagic.size(), "magic") != kMagic) {
    Fail(ErrorKind::kFormat, "bad magic: not a segmini model file");
  }
  const auto version = static_cast<std::uint8_t>(in.Take(1, "version")[0]);
  if (version != kFormatVersion) {
    Fail(ErrorKind::kFormat, "unsupported model format version " + std::to_string(version));
  }
  const std::uint32_t text_len = in.U32("config length");
  ModelConfig config;
  try {
    config = ModelConfig::FromText(in.Take(text_len, "config text"));
    ValidateOrThrow(config);
  } catch (const Error& e) {
    Fail(ErrorKind::kFormat, std::string("embedded config: ") + e.what());
  }
  Model model;
  model.config = config;
  model.layers = AllocateParams<float>(config);
  for (auto arr : model.AllArrays()) {
    const std::uint32_t count = in.U32("array length");
    if (count != arr.size()) {
      Fail(ErrorKind::kFormat, "parameter array has " + std::to_string(count) +
                                   " values, config requires " +
                                   std::to_string(arr.size()));
    }
    for (float& v : arr) v = std::bit_cast<float>(in.U32("parameter values"));
  }
  if (!in.AtEnd()) {
    Fail(ErrorKind::kFormat, "trailing bytes after last parameter array");
  }
  return model;
}

void SaveModel(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kData, "cannot open '" + path + "' for writing");
  const std::string bytes = SerializeModel(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kData, "failed writing '" + path + "'");
}

Model LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kData, "cannot open model '" + path + "'");
  const std::string bytes{std::istreambuf_iterator<char>(in),
                          std::istreambuf_iterator<char>()};
  return DeserializeModel(bytes);
}

template struct BasicModel<float>;
template struct BasicModel<double>;
template BasicModel<double> BasicModel<float>::Cast<double>() const;
template BasicModel<float> BasicModel<double>::Cast<float>() const;

#define SEGMINI_INSTANTIATE(T)                                                  \
  template ForwardPass<T> Forward(const BasicModel<T>&, const BasicTensor<T>&, \
                                  Mode);                                       \
  template void CommitRunningStats(BasicModel<T>&, const ForwardPass<T>&);     \
  template std::vector<std::vector<T>> BackwardFromLogits(                     \
      const BasicModel<T>&, const ForwardPass<T>&, const BasicTensor<T>&);     \
  template LabelMap PredictLabels(const BasicTensor<T>&);                      \
  template std::vector<LabelMap> PredictLabelsBatch(const BasicTensor<T>&);

SEGMINI_INSTANTIATE(float)
SEGMINI_INSTANTIATE(double)
#undef SEGMINI_INSTANTIATE

}  // namespace segmini
