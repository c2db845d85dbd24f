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

#include "segmini/image_io.h"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

namespace segmini {
namespace {

struct PnmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t payload_offset = 0;
};

// Parses "<magic> <w> <h> <maxval>" with '#' comments; exactly one
// whitespace byte separates maxval from the raster.
PnmHeader ParseHeader(std::string_view bytes, std::string_view magic) {
  if (bytes.size() < 2 || bytes.substr(0, 2) != magic) {
    Fail(ErrorKind::kFormat, "expected binary " + std::string(magic) + " magic");
  }
  std::size_t pos = 2;
  auto next_int = [&](const char* what) {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    long value = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > (1L << 24)) Fail(ErrorKind::kFormat, std::string(what) + " too large");
      ++pos;
    }
    if (pos == start) Fail(ErrorKind::kFormat, std::string("missing ") + what + " in header");
    return static_cast<int>(value);
  };
  PnmHeader h;
  h.width = next_int("width");
  h.height = next_int("height");
  h.maxval = next_int("maxval");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    Fail(ErrorKind::kFormat, "header not terminated by whitespace");
  }
  h.payload_offset = pos + 1;
  if (h.width < 1 || h.height < 1) Fail(ErrorKind::kFormat, "image has zero extent");
  return h;
}

std::uint8_t ToByte(float v) {
  return static_cast<std::uint8_t>(std::lround(v * 255.0f));
}

}  // namespace

Tensor DecodePpm(std::string_view bytes) {
  const PnmHeader h = ParseHeader(bytes, "P6");
  if (h.maxval != 255) {
    Fail(ErrorKind::kFormat, "only maxval 255 is supported, got " + std::to_string(h.maxval));
  }
  const std::size_t need = static_cast<std::size_t>(h.width) * h.height * 3;
  if (bytes.size() - h.payload_offset < need) {
    Fail(ErrorKind::kFormat, "truncated P6 payload");
  }
  if (bytes.size() - h.payload_offset > need) {
    Fail(ErrorKind::kFormat, "trailing bytes after P6 payload");
  }
  Tensor out(Shape{1, 3, h.height, h.width});
  const auto* px = reinterpret_cast<const unsigned char*>(bytes.data() + h.payload_offset);
  for (int y = 0; y < h.height; ++y) {
    for (int x = 0; x < h.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(0, c, y, x) = static_cast<float>(*px++) / 255.0f;
      }
    }
  }
  return out;
}

std::string EncodePpm(const Tensor& image) {
  const Shape& s = image.shape();
  if (s.n != 1 || s.c != 3) {
    Fail(ErrorKind::kShape, "PPM output needs a 1x3xHxW tensor, got " + s.ToString());
  }
  std::string out = "P6\n" + std::to_string(s.w) + " " + std::to_string(s.h) + "\n255\n";
  out.reserve(out.size() + s.ElementCount());
  for (int y = 0; y < s.h; ++y) {
    for (int x = 0; x < s.w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = image.at(0, c, y, x);
        if (!(v >= 0.0f && v <= 1.0f)) {
          Fail(ErrorKind::kData, "pixel value outside [0, 1] cannot be written as PPM");
        }
        out.push_back(static_cast<char>(ToByte(v)));
      }
    }
  }
  return out;
}

LabelMap DecodePgm(std::string_view bytes) {
  const PnmHeader h = ParseHeader(bytes, "P5");
  if (h.maxval < 1 || h.maxval > 255) {
    Fail(ErrorKind::kFormat, "P5 maxval must be in [1, 255]");
  }
  const std::size_t need = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() - h.payload_offset < need) {
    Fail(ErrorKind::kFormat, "truncated P5 payload");
  }
  if (bytes.size() - h.payload_offset > need) {
    Fail(ErrorKind::kFormat, "trailing bytes after P5 payload");
  }
  LabelMap m(h.height, h.width);
  const auto* px = reinterpret_cast<const unsigned char*>(bytes.data() + h.payload_offset);
  for (std::size_t i = 0; i < need; ++i) m.labels[i] = px[i];
  return m;
}

std::string EncodePgm(const LabelMap& mask) {
  std::string out = "P5\n" + std::to_string(mask.w) + " " + std::to_string(mask.h) + "\n255\n";
  for (int v : mask.labels) {
    if (v < 0 || v > 255) Fail(ErrorKind::kData, "label outside [0, 255] cannot be written as PGM");
    out.push_back(static_cast<char>(v));
  }
  return out;
}

std::string ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kData, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFileBytes(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kData, "cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kData, "failed writing '" + path + "'");
}

Tensor LoadPpm(const std::string& path) { return DecodePpm(ReadFileBytes(path)); }
void SavePpm(const Tensor& image, const std::string& path) {
  WriteFileBytes(path, EncodePpm(image));
}
LabelMap LoadMask(const std::string& path) { return DecodePgm(ReadFileBytes(path)); }
void SaveMask(const LabelMap& mask, const std::string& path) {
  WriteFileBytes(path, EncodePgm(mask));
}

}  // namespace segmini
