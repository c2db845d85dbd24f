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

#include "segmini/nn_ops.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "segmini/parallel.h"

namespace segmini {
namespace {

void CheckFinite(const char* op, std::span<const float> v) {
  for (float x : v) {
    if (!std::isfinite(x)) {
      Fail(ErrorKind::kData, std::string(op) + " produced a non-finite value");
    }
  }
}
void CheckFinite(const char* op, std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      Fail(ErrorKind::kData, std::string(op) + " produced a non-finite value");
    }
  }
}

int SamePad(int kernel) { return (kernel - 1) / 2; }
int PadFor(const ConvParams<float>& p) {
  return p.padding == Padding::kSame ? SamePad(p.kernel_size()) : 0;
}
int PadFor(const ConvParams<double>& p) {
  return p.padding == Padding::kSame ? SamePad(p.kernel_size()) : 0;
}

template <typename T>
void CheckConvCommon(const char* op, const ConvParams<T>& p) {
  const Shape& ws = p.weights.shape();
  if (ws.h != ws.w || ws.h % 2 == 0) {
    Fail(ErrorKind::kShape, std::string(op) + ": kernel must be square and odd, got " +
                                ws.ToString());
  }
  if (p.stride != 1 && p.stride != 2) {
    Fail(ErrorKind::kShape, std::string(op) + ": stride must be 1 or 2, got " +
                                std::to_string(p.stride));
  }
}

template <typename T>
void CheckBias(const char* op, const ConvParams<T>& p, int out_channels) {
  if (!p.bias.empty() && static_cast<int>(p.bias.size()) != out_channels) {
    Fail(ErrorKind::kShape, std::string(op) + ": bias length " +
                                std::to_string(p.bias.size()) +
                                " != output channels " +
                                std::to_string(out_channels));
  }
}

// Output positions ox in [lo, hi) whose tap at offset kx lands inside the
// input row: 0 <= ox * stride + kx - pad < in.
std::pair<int, int> ValidRange(int in, int out, int k_off, int pad,
                               int stride) {
  const int shift = k_off - pad;
  int lo = shift >= 0 ? 0 : (-shift + stride - 1) / stride;
  int hi = (in - 1 - shift) >= 0 ? (in - 1 - shift) / stride + 1 : 0;
  lo = std::min(lo, out);
  hi = std::clamp(hi, lo, out);
  return {lo, hi};
}

// cols[(c * k + ky) * k + kx][oy * wo + ox] = padded input tap.
template <typename T>
void Im2Col(const T* in, int channels, int h, int w, int k, int stride,
            int pad, int ho, int wo, T* cols) {
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < channels; ++c) {
    const T* src = in + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = cols + (static_cast<std::size_t>(c * k + ky) * k + kx) * plane;
        std::fill(dst, dst + plane, T{0});
        const auto [xlo, xhi] = ValidRange(w, wo, kx, pad, stride);
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          const T* row = src + static_cast<std::size_t>(iy) * w;
          T* out = dst + static_cast<std::size_t>(oy) * wo;
          for (int ox = xlo; ox < xhi; ++ox) {
            out[ox] = row[ox * stride + kx - pad];
          }
        }
      }
    }
  }
}

template <typename T>
void Col2Im(const T* cols, int channels, int h, int w, int k, int stride,
            int pad, int ho, int wo, T* in) {
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < channels; ++c) {
    T* dst = in + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src =
            cols + (static_cast<std::size_t>(c * k + ky) * k + kx) * plane;
        const auto [xlo, xhi] = ValidRange(w, wo, kx, pad, stride);
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          T* row = dst + static_cast<std::size_t>(iy) * w;
          const T* g = src + static_cast<std::size_t>(oy) * wo;
          for (int ox = xlo; ox < xhi; ++ox) {
            row[ox * stride + kx - pad] += g[ox];
          }
        }
      }
    }
  }
}

// out[o][p] = bias[o] + sum_q a[o][q] * b[q][p]
template <typename T>
void MatMulBias(const T* a, const T* b, const std::vector<T>& bias, int rows,
                int inner, std::size_t cols, T* out) {
  ParallelFor(rows, [&](int o) {
    T* dst = out + static_cast<std::size_t>(o) * cols;
    std::fill(dst, dst + cols, bias.empty() ? T{0} : bias[o]);
    const T* arow = a + static_cast<std::size_t>(o) * inner;
    for (int q = 0; q < inner; ++q) {
      const T coef = arow[q];
      const T* src = b + static_cast<std::size_t>(q) * cols;
      for (std::size_t p = 0; p < cols; ++p) dst[p] += coef * src[p];
    }
  });
}

template <typename T>
void StoreCache(OpCache<T>* cache, OpKind kind, const BasicTensor<T>& input,
                const ConvParams<T>& p, const Shape& out_shape) {
  if (cache == nullptr) return;
  *cache = ConvCache<T>{kind, input, p, out_shape};
}

}  // namespace

const char* OpKindName(OpKind kind) {
  switch (kind) {
    case OpKind::kConvFull:
      return "conv_full";
    case OpKind::kDepthwise:
      return "depthwise";
    case OpKind::kPointwise:
      return "pointwise";
    case OpKind::kSeparable:
      return "separable";
    case OpKind::kRelu:
      return "relu";
    case OpKind::kMaxPool:
      return "maxpool";
    case OpKind::kBatchNorm:
      return "batchnorm";
    case OpKind::kUpsample:
      return "upsample";
    case OpKind::kSoftmax:
      return "softmax";
  }
  return "unknown";
}

int ConvOutputSize(int in, int kernel, int stride, Padding padding) {
  const int pad = padding == Padding::kSame ? SamePad(kernel) : 0;
  const int span = in + 2 * pad - kernel;
  if (span < 0) {
    Fail(ErrorKind::kShape, "input extent " + std::to_string(in) +
                                " smaller than kernel " + std::to_string(kernel));
  }
  return span / stride + 1;
}

template <typename T>
BatchNormParams<T> BatchNormParams<T>::Identity(int channels) {
  BatchNormParams p;
  p.gamma.assign(channels, T{1});
  p.beta.assign(channels, T{0});
  p.running_mean.assign(channels, T{0});
  p.running_var.assign(channels, T{1});
  return p;
}

template <typename T>
void BatchNormParams<T>::Validate() const {
  const std::size_t c = gamma.size();
  if (beta.size() != c || running_mean.size() != c || running_var.size() != c) {
    Fail(ErrorKind::kShape, "batchnorm parameter arrays differ in length");
  }
  if (!(eps > 0)) Fail(ErrorKind::kConfig, "batchnorm eps must be positive");
  if (!(momentum > 0 && momentum < 1)) {
    Fail(ErrorKind::kConfig, "batchnorm momentum must lie in (0, 1)");
  }
  for (T v : running_var) {
    if (v < 0) Fail(ErrorKind::kConfig, "batchnorm running_var is negative");
  }
}

template <typename T>
template <typename U>
BatchNormParams<U> BatchNormParams<T>::Cast() const {
  auto conv = [](const std::vector<T>& v) {
    return std::vector<U>(v.begin(), v.end());
  };
  BatchNormParams<U> out;
  out.gamma = conv(gamma);
  out.beta = conv(beta);
  out.running_mean = conv(running_mean);
  out.running_var = conv(running_var);
  out.eps = static_cast<U>(eps);
  out.momentum = static_cast<U>(momentum);
  return out;
}

// --- Convolutions -------------------------------------------------------------

template <typename T>
BasicTensor<T> Conv2dFull(const BasicTensor<T>& input, const ConvParams<T>& p,
                          OpCache<T>* cache) {
  CheckConvCommon("conv2d_full", p);
  const Shape& in = input.shape();
  const Shape& ws = p.weights.shape();
  if (ws.c != in.c) {
    Fail(ErrorKind::kShape, "conv2d_full: input has " + std::to_string(in.c) +
                                " channels, weights expect " +
                                std::to_string(ws.c));
  }
  CheckBias("conv2d_full", p, ws.n);
  const int k = ws.h;
  const int pad = PadFor(p);
  const int ho = ConvOutputSize(in.h, k, p.stride, p.padding);
  const int wo = ConvOutputSize(in.w, k, p.stride, p.padding);
  BasicTensor<T> out(Shape{in.n, ws.n, ho, wo});
  const int inner = in.c * k * k;
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  std::vector<T> cols(static_cast<std::size_t>(inner) * plane);
  for (int n = 0; n < in.n; ++n) {
    Im2Col(input.plane(n, 0), in.c, in.h, in.w, k, p.stride, pad, ho, wo,
           cols.data());
    MatMulBias(p.weights.data(), cols.data(), p.bias, ws.n, inner, plane,
               out.plane(n, 0));
  }
  CheckFinite("conv2d_full", out.values());
  StoreCache(cache, OpKind::kConvFull, input, p, out.shape());
  return out;
}

template <typename T>
BasicTensor<T> DepthwiseConv2d(const BasicTensor<T>& input,
                               const ConvParams<T>& p, OpCache<T>* cache) {
  CheckConvCommon("depthwise_conv2d", p);
  const Shape& in = input.shape();
  const Shape& ws = p.weights.shape();
  if (ws.n != in.c || ws.c != 1) {
    Fail(ErrorKind::kShape, "depthwise_conv2d: expected weights (" +
                                std::to_string(in.c) + ",1,k,k), got " +
                                ws.ToString());
  }
  CheckBias("depthwise_conv2d", p, in.c);
  const int k = ws.h;
  const int pad = PadFor(p);
  const int s = p.stride;
  const int ho = ConvOutputSize(in.h, k, s, p.padding);
  const int wo = ConvOutputSize(in.w, k, s, p.padding);
  BasicTensor<T> out(Shape{in.n, in.c, ho, wo});
  ParallelFor(in.n * in.c, [&](int nc) {
    const int n = nc / in.c;
    const int c = nc % in.c;
    const T* src = input.plane(n, c);
    const T* filt = p.weights.plane(c, 0);
    T* dst = out.plane(n, c);
    if (!p.bias.empty()) std::fill(dst, dst + ho * wo, p.bias[c]);
    for (int oy = 0; oy < ho; ++oy) {
      T* orow = dst + static_cast<std::size_t>(oy) * wo;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * s + ky - pad;
        if (iy < 0 || iy >= in.h) continue;
        const T* irow = src + static_cast<std::size_t>(iy) * in.w;
        for (int kx = 0; kx < k; ++kx) {
          const T wv = filt[ky * k + kx];
          const auto [lo, hi] = ValidRange(in.w, wo, kx, pad, s);
          const int off = kx - pad;
          if (s == 1) {
            for (int ox = lo; ox < hi; ++ox) orow[ox] += wv * irow[ox + off];
          } else {
            for (int ox = lo; ox < hi; ++ox) orow[ox] += wv * irow[ox * s + off];
          }
        }
      }
    }
  });
  CheckFinite("depthwise_conv2d", out.values());
  StoreCache(cache, OpKind::kDepthwise, input, p, out.shape());
  return out;
}

template <typename T>
BasicTensor<T> PointwiseConv2d(const BasicTensor<T>& input,
                               const ConvParams<T>& p, OpCache<T>* cache) {
  CheckConvCommon("pointwise_conv2d", p);
  const Shape& in = input.shape();
  const Shape& ws = p.weights.shape();
  if (ws.c != in.c || ws.h != 1 || ws.w != 1) {
    Fail(ErrorKind::kShape, "pointwise_conv2d: expected weights (out," +
                                std::to_string(in.c) + ",1,1), got " +
                                ws.ToString());
  }
  CheckBias("pointwise_conv2d", p, ws.n);
  const int s = p.stride;
  const int ho = ConvOutputSize(in.h, 1, s, p.padding);
  const int wo = ConvOutputSize(in.w, 1, s, p.padding);
  BasicTensor<T> out(Shape{in.n, ws.n, ho, wo});
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  std::vector<T> gathered;
  for (int n = 0; n < in.n; ++n) {
    const T* src = input.plane(n, 0);
    if (s != 1) {
      gathered.resize(static_cast<std::size_t>(in.c) * plane);
      for (int c = 0; c < in.c; ++c) {
        for (int oy = 0; oy < ho; ++oy) {
          for (int ox = 0; ox < wo; ++ox) {
            gathered[c * plane + oy * wo + ox] =
                input.at(n, c, oy * s, ox * s);
          }
        }
      }
      src = gathered.data();
    }
    MatMulBias(p.weights.data(), src, p.bias, ws.n, in.c, plane,
               out.plane(n, 0));
  }
  CheckFinite("pointwise_conv2d", out.values());
  StoreCache(cache, OpKind::kPointwise, input, p, out.shape());
  return out;
}

template <typename T>
BasicTensor<T> SeparableConv2d(const BasicTensor<T>& input,
                               const ConvParams<T>& depthwise,
                               const ConvParams<T>& pointwise,
                               OpCache<T>* cache) {
  if (pointwise.stride != 1) {
    Fail(ErrorKind::kShape, "separable_conv2d: stride belongs to the depthwise stage");
  }
  if (depthwise.weights.shape().n != pointwise.weights.shape().c) {
    Fail(ErrorKind::kShape,
         "separable_conv2d: depthwise produces " +
             std::to_string(depthwise.weights.shape().n) +
             " channels, pointwise expects " +
             std::to_string(pointwise.weights.shape().c));
  }
  if (cache == nullptr) {
    return PointwiseConv2d(DepthwiseConv2d(input, depthwise), pointwise);
  }
  OpCache<T> dw_cache;
  OpCache<T> pw_cache;
  BasicTensor<T> mid = DepthwiseConv2d(input, depthwise, &dw_cache);
  BasicTensor<T> out = PointwiseConv2d(mid, pointwise, &pw_cache);
  *cache = SeparableCache<T>{std::get<ConvCache<T>>(std::move(dw_cache)),
                             std::get<ConvCache<T>>(std::move(pw_cache))};
  return out;
}

// --- Elementwise / pooling ------------------------------------------------------

template <typename T>
BasicTensor<T> Relu(const BasicTensor<T>& input, OpCache<T>* cache) {
  BasicTensor<T> out(input.shape());
  const T* src = input.data();
  T* dst = out.data();
  for (std::size_t i = 0; i < input.size(); ++i) {
    dst[i] = src[i] > T{0} ? src[i] : T{0};
  }
  CheckFinite("relu", out.values());
  if (cache != nullptr) *cache = ReluCache<T>{input};
  return out;
}

template <typename T>
MaxPoolResult<T> MaxPool2x2(const BasicTensor<T>& input, OpCache<T>* cache) {
  const Shape& in = input.shape();
  if (in.h % 2 != 0 || in.w % 2 != 0) {
    Fail(ErrorKind::kShape,
         "maxpool_2x2 requires even height and width, got " + in.ToString());
  }
  const int ho = in.h / 2;
  const int wo = in.w / 2;
  MaxPoolResult<T> r{BasicTensor<T>(Shape{in.n, in.c, ho, wo}),
                     PoolIndices{in, {}}};
  r.indices.index.resize(r.output.size());
  std::size_t o = 0;
  for (int n = 0; n < in.n; ++n) {
    for (int c = 0; c < in.c; ++c) {
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox, ++o) {
          std::size_t best = input.Index(n, c, 2 * oy, 2 * ox);
          T best_v = input.data()[best];
          for (int d = 1; d < 4; ++d) {
            const std::size_t idx =
                input.Index(n, c, 2 * oy + d / 2, 2 * ox + d % 2);
            if (input.data()[idx] > best_v) {
              best_v = input.data()[idx];
              best = idx;
            }
          }
          r.output.data()[o] = best_v;
          r.indices.index[o] = static_cast<std::int64_t>(best);
        }
      }
    }
  }
  CheckFinite("maxpool_2x2", r.output.values());
  if (cache != nullptr) *cache = MaxPoolCache{r.indices, r.output.shape()};
  return r;
}

template <typename T>
BatchNormResult<T> BatchNorm(const BasicTensor<T>& input,
                             const BatchNormParams<T>& p, Mode mode,
                             OpCache<T>* cache) {
  p.Validate();
  const Shape& s = input.shape();
  if (p.channels() != s.c) {
    Fail(ErrorKind::kShape, "batchnorm: input has " + std::to_string(s.c) +
                                " channels, parameters have " +
                                std::to_string(p.channels()));
  }
  const std::size_t plane = s.PlaneSize();
  const double count = static_cast<double>(plane) * s.n;
  BatchNormResult<T> r{BasicTensor<T>(s), p.running_mean, p.running_var};
  BasicTensor<T> normalized(s);
  std::vector<T> inv_std(s.c);
  for (int c = 0; c < s.c; ++c) {
    T mean_c;
    T var_c;
    if (mode == Mode::kTrain) {
      double sum = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const T* x = input.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) sum += x[i];
      }
      const double mean = sum / count;
      double sq = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const T* x = input.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = x[i] - mean;
          sq += d * d;
        }
      }
      mean_c = static_cast<T>(mean);
      var_c = static_cast<T>(sq / count);
      r.running_mean[c] = p.momentum * p.running_mean[c] + (1 - p.momentum) * mean_c;
      r.running_var[c] = p.momentum * p.running_var[c] + (1 - p.momentum) * var_c;
    } else {
      mean_c = p.running_mean[c];
      var_c = p.running_var[c];
    }
    inv_std[c] = T{1} / std::sqrt(var_c + p.eps);
    for (int n = 0; n < s.n; ++n) {
      const T* x = input.plane(n, c);
      T* xh = normalized.plane(n, c);
      T* y = r.output.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        xh[i] = (x[i] - mean_c) * inv_std[c];
        y[i] = p.gamma[c] * xh[i] + p.beta[c];
      }
    }
  }
  CheckFinite("batchnorm", r.output.values());
  if (cache != nullptr) {
    *cache = BatchNormCache<T>{mode, std::move(normalized), std::move(inv_std),
                               p.gamma};
  }
  return r;
}

template <typename T>
BasicTensor<T> UpsampleNearest2x(const BasicTensor<T>& input,
                                 OpCache<T>* cache) {
  const Shape& in = input.shape();
  BasicTensor<T> out(Shape{in.n, in.c, 2 * in.h, 2 * in.w});
  for (int n = 0; n < in.n; ++n) {
    for (int c = 0; c < in.c; ++c) {
      const T* src = input.plane(n, c);
      T* dst = out.plane(n, c);
      for (int y = 0; y < 2 * in.h; ++y) {
        const T* srow = src + static_cast<std::size_t>(y / 2) * in.w;
        T* drow = dst + static_cast<std::size_t>(y) * 2 * in.w;
        for (int x = 0; x < 2 * in.w; ++x) drow[x] = srow[x / 2];
      }
    }
  }
  if (cache != nullptr) *cache = UpsampleCache{in};
  return out;
}

template <typename T>
BasicTensor<T> SoftmaxPixelwise(const BasicTensor<T>& logits,
                                OpCache<T>* cache) {
  const Shape& s = logits.shape();
  const std::size_t plane = s.PlaneSize();
  BasicTensor<T> out(s);
  for (int n = 0; n < s.n; ++n) {
    for (std::size_t i = 0; i < plane; ++i) {
      T mx = logits.plane(n, 0)[i];
      for (int c = 1; c < s.c; ++c) mx = std::max(mx, logits.plane(n, c)[i]);
      T sum{0};
      for (int c = 0; c < s.c; ++c) {
        const T e = std::exp(logits.plane(n, c)[i] - mx);
        out.plane(n, c)[i] = e;
        sum += e;
      }
      for (int c = 0; c < s.c; ++c) out.plane(n, c)[i] /= sum;
    }
  }
  CheckFinite("softmax_pixelwise", out.values());
  if (cache != nullptr) *cache = SoftmaxCache<T>{out};
  return out;
}

// --- Backward -------------------------------------------------------------------

namespace {

void CheckGradShape(OpKind kind, const Shape& expected, const Shape& got) {
  if (expected != got) {
    Fail(ErrorKind::kState, std::string(OpKindName(kind)) +
                                " backward: grad_output shape " +
                                got.ToString() + " does not match cached output " +
                                expected.ToString());
  }
}

template <typename C, typename T>
const C& CacheAs(OpKind kind, const OpCache<T>& cache) {
  const C* c = std::get_if<C>(&cache);
  if (c == nullptr) {
    Fail(ErrorKind::kState, std::string(OpKindName(kind)) +
                                " backward: cache was not produced by this op");
  }
  return *c;
}

template <typename T>
std::vector<T> BiasGrad(const BasicTensor<T>& g) {
  const Shape& s = g.shape();
  std::vector<T> out(s.c, T{0});
  for (int c = 0; c < s.c; ++c) {
    double sum = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const T* src = g.plane(n, c);
      for (std::size_t i = 0; i < s.PlaneSize(); ++i) sum += src[i];
    }
    out[c] = static_cast<T>(sum);
  }
  return out;
}

template <typename T>
OpGrads<T> ConvFullBackward(const ConvCache<T>& cc, const BasicTensor<T>& g) {
  const ConvParams<T>& p = cc.params;
  const Shape& in = cc.input.shape();
  const Shape& ws = p.weights.shape();
  const int k = ws.h;
  const int pad = PadFor(p);
  const int ho = cc.output_shape.h;
  const int wo = cc.output_shape.w;
  const int inner = in.c * k * k;
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  OpGrads<T> r{BasicTensor<T>(in), {}};
  std::vector<T> gw(ws.ElementCount(), T{0});
  std::vector<T> cols(static_cast<std::size_t>(inner) * plane);
  std::vector<T> gcols(cols.size());
  for (int n = 0; n < in.n; ++n) {
    Im2Col(cc.input.plane(n, 0), in.c, in.h, in.w, k, p.stride, pad, ho, wo,
           cols.data());
    const T* gout = g.plane(n, 0);
    ParallelFor(ws.n, [&](int o) {
      const T* grow = gout + static_cast<std::size_t>(o) * plane;
      for (int q = 0; q < inner; ++q) {
        const T* crow = cols.data() + static_cast<std::size_t>(q) * plane;
        T acc{0};
        for (std::size_t i = 0; i < plane; ++i) acc += grow[i] * crow[i];
        gw[static_cast<std::size_t>(o) * inner + q] += acc;
      }
    });
    ParallelFor(inner, [&](int q) {
      T* dst = gcols.data() + static_cast<std::size_t>(q) * plane;
      std::fill(dst, dst + plane, T{0});
      for (int o = 0; o < ws.n; ++o) {
        const T wv = p.weights.data()[static_cast<std::size_t>(o) * inner + q];
        const T* grow = gout + static_cast<std::size_t>(o) * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] += wv * grow[i];
      }
    });
    Col2Im(gcols.data(), in.c, in.h, in.w, k, p.stride, pad, ho, wo,
           r.input.plane(n, 0));
  }
  r.params.push_back(std::move(gw));
  if (!p.bias.empty()) r.params.push_back(BiasGrad(g));
  return r;
}

template <typename T>
OpGrads<T> DepthwiseBackward(const ConvCache<T>& cc, const BasicTensor<T>& g) {
  const ConvParams<T>& p = cc.params;
  const Shape& in = cc.input.shape();
  const int k = p.kernel_size();
  const int pad = PadFor(p);
  const int s = p.stride;
  const int ho = cc.output_shape.h;
  const int wo = cc.output_shape.w;
  OpGrads<T> r{BasicTensor<T>(in), {}};
  std::vector<T> gw(p.weights.size(), T{0});
  ParallelFor(in.c, [&](int c) {
    const T* filt = p.weights.plane(c, 0);
    T* gfilt = gw.data() + static_cast<std::size_t>(c) * k * k;
    for (int n = 0; n < in.n; ++n) {
      const T* src = cc.input.plane(n, c);
      const T* gout = g.plane(n, c);
      T* gin = r.input.plane(n, c);
      for (int oy = 0; oy < ho; ++oy) {
        const T* grow = gout + static_cast<std::size_t>(oy) * wo;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * s + ky - pad;
          if (iy < 0 || iy >= in.h) continue;
          const T* irow = src + static_cast<std::size_t>(iy) * in.w;
          T* girow = gin + static_cast<std::size_t>(iy) * in.w;
          for (int kx = 0; kx < k; ++kx) {
            const T wv = filt[ky * k + kx];
            const auto [lo, hi] = ValidRange(in.w, wo, kx, pad, s);
            const int off = kx - pad;
            T acc{0};
            for (int ox = lo; ox < hi; ++ox) {
              const int ix = ox * s + off;
              acc += grow[ox] * irow[ix];
              girow[ix] += wv * grow[ox];
            }
            gfilt[ky * k + kx] += acc;
          }
        }
      }
    }
  });
  r.params.push_back(std::move(gw));
  if (!p.bias.empty()) r.params.push_back(BiasGrad(g));
  return r;
}

template <typename T>
OpGrads<T> PointwiseBackward(const ConvCache<T>& cc, const BasicTensor<T>& g) {
  const ConvParams<T>& p = cc.params;
  const Shape& in = cc.input.shape();
  const int out_c = p.out_channels();
  const int s = p.stride;
  const int ho = cc.output_shape.h;
  const int wo = cc.output_shape.w;
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  OpGrads<T> r{BasicTensor<T>(in), {}};
  std::vector<T> gw(p.weights.size(), T{0});
  std::vector<T> x(static_cast<std::size_t>(in.c) * plane);
  std::vector<T> gx(x.size());
  for (int n = 0; n < in.n; ++n) {
    for (int c = 0; c < in.c; ++c) {
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          x[c * plane + oy * wo + ox] = cc.input.at(n, c, oy * s, ox * s);
        }
      }
    }
    const T* gout = g.plane(n, 0);
    ParallelFor(out_c, [&](int o) {
      const T* grow = gout + static_cast<std::size_t>(o) * plane;
      for (int c = 0; c < in.c; ++c) {
        const T* xrow = x.data() + static_cast<std::size_t>(c) * plane;
        T acc{0};
        for (std::size_t i = 0; i < plane; ++i) acc += grow[i] * xrow[i];
        gw[static_cast<std::size_t>(o) * in.c + c] += acc;
      }
    });
    ParallelFor(in.c, [&](int c) {
      T* dst = gx.data() + static_cast<std::size_t>(c) * plane;
      std::fill(dst, dst + plane, T{0});
      for (int o = 0; o < out_c; ++o) {
        const T wv = p.weights.data()[static_cast<std::size_t>(o) * in.c + c];
        const T* grow = gout + static_cast<std::size_t>(o) * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] += wv * grow[i];
      }
    });
    for (int c = 0; c < in.c; ++c) {
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          r.input.at(n, c, oy * s, ox * s) += gx[c * plane + oy * wo + ox];
        }
      }
    }
  }
  r.params.push_back(std::move(gw));
  if (!p.bias.empty()) r.params.push_back(BiasGrad(g));
  return r;
}

template <typename T>
OpGrads<T> ConvBackward(OpKind kind, const OpCache<T>& cache,
                        const BasicTensor<T>& g) {
  const auto& cc = CacheAs<ConvCache<T>>(kind, cache);
  if (cc.kind != kind) {
    Fail(ErrorKind::kState, std::string(OpKindName(kind)) +
                                " backward given a " + OpKindName(cc.kind) +
                                " cache");
  }
  CheckGradShape(kind, cc.output_shape, g.shape());
  switch (kind) {
    case OpKind::kConvFull:
      return ConvFullBackward(cc, g);
    case OpKind::kDepthwise:
      return DepthwiseBackward(cc, g);
    default:
      return PointwiseBackward(cc, g);
  }
}

}  // namespace

template <typename T>
OpGrads<T> Backward(OpKind kind, const OpCache<T>& cache,
                    const BasicTensor<T>& grad_output) {
  switch (kind) {
    case OpKind::kConvFull:
    case OpKind::kDepthwise:
    case OpKind::kPointwise:
      return ConvBackward(kind, cache, grad_output);
    case OpKind::kSeparable: {
      const auto& sc = CacheAs<SeparableCache<T>>(kind, cache);
      CheckGradShape(kind, sc.pointwise.output_shape, grad_output.shape());
      OpGrads<T> pw = PointwiseBackward(sc.pointwise, grad_output);
      OpGrads<T> dw = DepthwiseBackward(sc.depthwise, pw.input);
      OpGrads<T> r{std::move(dw.input), std::move(dw.params)};
      for (auto& v : pw.params) r.params.push_back(std::move(v));
      return r;
    }
    case OpKind::kRelu: {
      const auto& rc = CacheAs<ReluCache<T>>(kind, cache);
      CheckGradShape(kind, rc.input.shape(), grad_output.shape());
      OpGrads<T> r{BasicTensor<T>(rc.input.shape()), {}};
      for (std::size_t i = 0; i < rc.input.size(); ++i) {
        r.input.data()[i] =
            rc.input.data()[i] > T{0} ? grad_output.data()[i] : T{0};
      }
      return r;
    }
    case OpKind::kMaxPool: {
      const auto& mc = CacheAs<MaxPoolCache>(kind, cache);
      CheckGradShape(kind, mc.output_shape, grad_output.shape());
      OpGrads<T> r{BasicTensor<T>(mc.indices.input_shape), {}};
      for (std::size_t i = 0; i < grad_output.size(); ++i) {
        r.input.data()[mc.indices.index[i]] += grad_output.data()[i];
      }
      return r;
    }
    case OpKind::kBatchNorm: {
      const auto& bc = CacheAs<BatchNormCache<T>>(kind, cache);
      const Shape& s = bc.normalized.shape();
      CheckGradShape(kind, s, grad_output.shape());
      const std::size_t plane = s.PlaneSize();
      const double m = static_cast<double>(plane) * s.n;
      OpGrads<T> r{BasicTensor<T>(s), {}};
      std::vector<T> ggamma(s.c);
      std::vector<T> gbeta(s.c);
      for (int c = 0; c < s.c; ++c) {
        double sum_g = 0.0;
        double sum_gx = 0.0;
        for (int n = 0; n < s.n; ++n) {
          const T* g = grad_output.plane(n, c);
          const T* xh = bc.normalized.plane(n, c);
          for (std::size_t i = 0; i < plane; ++i) {
            sum_g += g[i];
            sum_gx += static_cast<double>(g[i]) * xh[i];
          }
        }
        ggamma[c] = static_cast<T>(sum_gx);
        gbeta[c] = static_cast<T>(sum_g);
        const T scale = bc.gamma[c] * bc.inv_std[c];
        const T mean_g = static_cast<T>(sum_g / m);
        const T mean_gx = static_cast<T>(sum_gx / m);
        for (int n = 0; n < s.n; ++n) {
          const T* g = grad_output.plane(n, c);
          const T* xh = bc.normalized.plane(n, c);
          T* dx = r.input.plane(n, c);
          if (bc.mode == Mode::kTrain) {
            for (std::size_t i = 0; i < plane; ++i) {
              dx[i] = scale * (g[i] - mean_g - xh[i] * mean_gx);
            }
          } else {
            for (std::size_t i = 0; i < plane; ++i) dx[i] = scale * g[i];
          }
        }
      }
      r.params.push_back(std::move(ggamma));
      r.params.push_back(std::move(gbeta));
      return r;
    }
    case OpKind::kUpsample: {
      const auto& uc = CacheAs<UpsampleCache>(kind, cache);
      const Shape& in = uc.input_shape;
      CheckGradShape(kind, Shape{in.n, in.c, 2 * in.h, 2 * in.w},
                     grad_output.shape());
      OpGrads<T> r{BasicTensor<T>(in), {}};
      for (int n = 0; n < in.n; ++n) {
        for (int c = 0; c < in.c; ++c) {
          for (int y = 0; y < in.h; ++y) {
            for (int x = 0; x < in.w; ++x) {
              r.input.at(n, c, y, x) = grad_output.at(n, c, 2 * y, 2 * x) +
                                       grad_output.at(n, c, 2 * y, 2 * x + 1) +
                                       grad_output.at(n, c, 2 * y + 1, 2 * x) +
                                       grad_output.at(n, c, 2 * y + 1, 2 * x + 1);
            }
          }
        }
      }
      return r;
    }
    case OpKind::kSoftmax: {
      const auto& sc = CacheAs<SoftmaxCache<T>>(kind, cache);
      const Shape& s = sc.probs.shape();
      CheckGradShape(kind, s, grad_output.shape());
      OpGrads<T> r{BasicTensor<T>(s), {}};
      for (int n = 0; n < s.n; ++n) {
        for (std::size_t i = 0; i < s.PlaneSize(); ++i) {
          T dot{0};
          for (int c = 0; c < s.c; ++c) {
            dot += sc.probs.plane(n, c)[i] * grad_output.plane(n, c)[i];
          }
          for (int c = 0; c < s.c; ++c) {
            r.input.plane(n, c)[i] =
                sc.probs.plane(n, c)[i] * (grad_output.plane(n, c)[i] - dot);
          }
        }
      }
      return r;
    }
  }
  Fail(ErrorKind::kState, "unknown op kind");
}

#define SEGMINI_INSTANTIATE(T)                                                  \
  template struct BatchNormParams<T>;                                          \
  template BasicTensor<T> Conv2dFull(const BasicTensor<T>&,                    \
                                     const ConvParams<T>&, OpCache<T>*);       \
  template BasicTensor<T> DepthwiseConv2d(const BasicTensor<T>&,               \
                                          const ConvParams<T>&, OpCache<T>*);  \
  template BasicTensor<T> PointwiseConv2d(const BasicTensor<T>&,               \
                                          const ConvParams<T>&, OpCache<T>*);  \
  template BasicTensor<T> SeparableConv2d(                                     \
      const BasicTensor<T>&, const ConvParams<T>&, const ConvParams<T>&,       \
      OpCache<T>*);                                                            \
  template BasicTensor<T> Relu(const BasicTensor<T>&, OpCache<T>*);            \
  template MaxPoolResult<T> MaxPool2x2(const BasicTensor<T>&, OpCache<T>*);    \
  template BatchNormResult<T> BatchNorm(const BasicTensor<T>&,                 \
                                        const BatchNormParams<T>&, Mode,       \
                                        OpCache<T>*);                          \
  template BasicTensor<T> UpsampleNearest2x(const BasicTensor<T>&,             \
                                            OpCache<T>*);                      \
  template BasicTensor<T> SoftmaxPixelwise(const BasicTensor<T>&,              \
                                           OpCache<T>*);                       \
  template OpGrads<T> Backward(OpKind, const OpCache<T>&, const BasicTensor<T>&);

SEGMINI_INSTANTIATE(float)
SEGMINI_INSTANTIATE(double)
#undef SEGMINI_INSTANTIATE

template BatchNormParams<double> BatchNormParams<float>::Cast<double>() const;
template BatchNormParams<float> BatchNormParams<double>::Cast<float>() const;
template BatchNormParams<float> BatchNormParams<float>::Cast<float>() const;

}  // namespace segmini
