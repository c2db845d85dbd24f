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

#include "segmini/lut.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "segmini/image_io.h"

namespace segmini {
namespace {

void ParseRange(const std::string& token, char key, double* lo, double* hi) {
  if (token.size() < 3 || token[0] != key || token[1] != '=') {
    Fail(ErrorKind::kFormat, std::string("expected ") + key + "=<lo>:<hi>, got '" + token + "'");
  }
  const auto colon = token.find(':');
  if (colon == std::string::npos) {
    Fail(ErrorKind::kFormat, "range '" + token + "' lacks ':'");
  }
  try {
    std::size_t used = 0;
    const std::string a = token.substr(2, colon - 2);
    const std::string b = token.substr(colon + 1);
    *lo = std::stod(a, &used);
    if (used != a.size()) throw std::invalid_argument(a);
    *hi = std::stod(b, &used);
    if (used != b.size()) throw std::invalid_argument(b);
  } catch (const std::logic_error&) {
    Fail(ErrorKind::kFormat, "bad number in range '" + token + "'");
  }
}

int Bin(double x, int bins) {
  return std::clamp(static_cast<int>(std::floor(x * bins)), 0, bins - 1);
}

}  // namespace

Hsv RgbToHsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = r8 / 255.0;
  const double g = g8 / 255.0;
  const double b = b8 / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta > 0.0) {
    double h;
    if (mx == r) {
      h = 60.0 * std::fmod((g - b) / delta, 6.0);
    } else if (mx == g) {
      h = 60.0 * ((b - r) / delta + 2.0);
    } else {
      h = 60.0 * ((r - g) / delta + 4.0);
    }
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    out.h = h;
  }
  return out;
}

bool ClassThreshold::Contains(const Hsv& hsv) const {
  const bool hue = h_lo <= h_hi ? (hsv.h >= h_lo && hsv.h <= h_hi)
                                : (hsv.h >= h_lo || hsv.h <= h_hi);
  return hue && hsv.s >= s_lo && hsv.s <= s_hi && hsv.v >= v_lo && hsv.v <= v_hi;
}

int HsvThresholds::ClassCount() const {
  int count = 2;
  for (const auto& c : classes) count = std::max(count, c.id + 1);
  return count;
}

int HsvThresholds::Classify(const Hsv& hsv) const {
  for (const auto& c : classes) {
    if (c.Contains(hsv)) return c.id;
  }
  return 0;
}

void HsvThresholds::Validate() const {
  for (const auto& c : classes) {
    const std::string who = "threshold class '" + c.name + "': ";
    if (c.id < 0 || c.id > 255) Fail(ErrorKind::kData, who + "id must be in [0, 255]");
    if (c.h_lo < 0 || c.h_lo > 360 || c.h_hi < 0 || c.h_hi > 360) {
      Fail(ErrorKind::kData, who + "hue bounds must lie in [0, 360]");
    }
    for (double x : {c.s_lo, c.s_hi, c.v_lo, c.v_hi}) {
      if (x < 0 || x > 1) Fail(ErrorKind::kData, who + "s and v bounds must lie in [0, 1]");
    }
    if (c.s_lo > c.s_hi || c.v_lo > c.v_hi) {
      Fail(ErrorKind::kData, who + "s and v ranges must have lo <= hi");
    }
  }
}

HsvThresholds HsvThresholds::Parse(std::string_view text) {
  HsvThresholds t;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    std::string word;
    if (!(tokens >> word)) continue;
    const std::string where = "thresholds line " + std::to_string(line_no) + ": ";
    if (word != "class") Fail(ErrorKind::kFormat, where + "expected 'class'");
    ClassThreshold c;
    std::string id, h, s, v, extra;
    if (!(tokens >> id >> c.name >> h >> s >> v) || (tokens >> extra)) {
      Fail(ErrorKind::kFormat, where + "expected 'class <id> <name> h=.. s=.. v=..'");
    }
    try {
      std::size_t used = 0;
      c.id = std::stoi(id, &used);
      if (used != id.size()) throw std::invalid_argument(id);
    } catch (const std::logic_error&) {
      Fail(ErrorKind::kFormat, where + "bad class id '" + id + "'");
    }
    ParseRange(h, 'h', &c.h_lo, &c.h_hi);
    ParseRange(s, 's', &c.s_lo, &c.s_hi);
    ParseRange(v, 'v', &c.v_lo, &c.v_hi);
    t.classes.push_back(std::move(c));
  }
  t.Validate();
  return t;
}

HsvThresholds HsvThresholds::Load(const std::string& path) {
  return Parse(ReadFileBytes(path));
}

std::size_t Lut::BinIndex(const Hsv& hsv) {
  const int h = std::clamp(static_cast<int>(std::floor(hsv.h)), 0, kHueBins - 1);
  const int s = Bin(hsv.s, kSatBins);
  const int v = Bin(hsv.v, kValBins);
  return (static_cast<std::size_t>(h) * kSatBins + s) * kValBins + v;
}

Lut Lut::Build(const HsvThresholds& thresholds) {
  thresholds.Validate();
  Lut lut;
  lut.class_count_ = thresholds.ClassCount();
  lut.table_.resize(static_cast<std::size_t>(kHueBins) * kSatBins * kValBins);
  std::size_t i = 0;
  for (int h = 0; h < kHueBins; ++h) {
    for (int s = 0; s < kSatBins; ++s) {
      for (int v = 0; v < kValBins; ++v, ++i) {
        const Hsv center{h + 0.5, (s + 0.5) / kSatBins, (v + 0.5) / kValBins};
        lut.table_[i] = static_cast<std::uint8_t>(thresholds.Classify(center));
      }
    }
  }
  return lut;
}

LabelMap SegmentLut(const Tensor& image, const Lut& lut) {
  const Shape& s = image.shape();
  if (s.n != 1 || s.c != 3) {
    Fail(ErrorKind::kShape, "segment_lut expects a 1x3xHxW image, got " + s.ToString());
  }
  auto byte = [](float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
  };
  LabelMap out(s.h, s.w);
  const float* r = image.plane(0, 0);
  const float* g = image.plane(0, 1);
  const float* b = image.plane(0, 2);
  for (std::size_t i = 0; i < s.PlaneSize(); ++i) {
    out.labels[i] = lut.Lookup(RgbToHsv(byte(r[i]), byte(g[i]), byte(b[i])));
  }
  return out;
}

}  // namespace segmini
