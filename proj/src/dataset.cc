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

#include "segmini/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "segmini/image_io.h"

namespace segmini {
namespace {

class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : engine_(seed) {}
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  bool Chance(double p) { return Uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

struct Rgb {
  double r, g, b;
};

class Canvas {
 public:
  Canvas(int h, int w) : h_(h), w_(w), px_(static_cast<std::size_t>(h) * w) {}

  int h() const { return h_; }
  int w() const { return w_; }
  Rgb& at(int y, int x) { return px_[static_cast<std::size_t>(y) * w_ + x]; }

  Tensor ToTensor() const {
    Tensor t(Shape{1, 3, h_, w_});
    for (int y = 0; y < h_; ++y) {
      for (int x = 0; x < w_; ++x) {
        const Rgb& p = px_[static_cast<std::size_t>(y) * w_ + x];
        // Quantize to 8 bits so a PPM round trip reproduces the tensor.
        auto q = [](double v) {
          return static_cast<float>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)) / 255.0f;
        };
        t.at(0, 0, y, x) = q(p.r);
        t.at(0, 1, y, x) = q(p.g);
        t.at(0, 2, y, x) = q(p.b);
      }
    }
    return t;
  }

 private:
  int h_;
  int w_;
  std::vector<Rgb> px_;
};

void PaintField(Canvas& canvas, SceneRng& rng, int y_from) {
  const Rgb base{rng.Uniform(0.05, 0.2), rng.Uniform(0.4, 0.65), rng.Uniform(0.05, 0.2)};
  const double top_light = rng.Uniform(0.85, 1.15);
  const double bottom_light = rng.Uniform(0.85, 1.15);
  for (int y = y_from; y < canvas.h(); ++y) {
    const double t = static_cast<double>(y) / canvas.h();
    const double light = top_light + (bottom_light - top_light) * t;
    for (int x = 0; x < canvas.w(); ++x) {
      const double n = rng.Uniform(-0.04, 0.04);
      canvas.at(y, x) = {base.r * light + n, base.g * light + n, base.b * light + n};
    }
  }
}

// White line through (px, py) at the given angle.
void PaintLine(Canvas& canvas, SceneRng& rng, double px, double py,
               double angle, double half_width) {
  const double nx = -std::sin(angle);
  const double ny = std::cos(angle);
  const double level = rng.Uniform(0.8, 0.95);
  for (int y = 0; y < canvas.h(); ++y) {
    for (int x = 0; x < canvas.w(); ++x) {
      const double d = (x + 0.5 - px) * nx + (y + 0.5 - py) * ny;
      if (std::abs(d) <= half_width) {
        const double n = rng.Uniform(-0.03, 0.03);
        canvas.at(y, x) = {level + n, level + n, level + n};
      }
    }
  }
}

void PaintRect(Canvas& canvas, int y0, int y1, int x0, int x1, Rgb color,
               SceneRng& rng, LabelMap* mask = nullptr, int label = 0) {
  for (int y = std::max(0, y0); y < std::min(canvas.h(), y1); ++y) {
    for (int x = std::max(0, x0); x < std::min(canvas.w(), x1); ++x) {
      const double n = rng.Uniform(-0.03, 0.03);
      canvas.at(y, x) = {color.r + n, color.g + n, color.b + n};
      if (mask != nullptr) mask->at(y, x) = label;
    }
  }
}

Sample BallScene(int h, int w, SceneRng& rng) {
  Canvas canvas(h, w);
  LabelMap mask(h, w, 0);
  PaintField(canvas, rng, 0);
  const int m = std::min(h, w);
  if (rng.Chance(0.4)) {
    PaintLine(canvas, rng, rng.Uniform(0, w), rng.Uniform(0, h),
              rng.Uniform(0, std::numbers::pi), std::max(0.75, m / 48.0));
  }
  if (rng.Chance(0.3)) {
    const int bw = static_cast<int>(rng.Uniform(m / 10.0, m / 5.0)) + 1;
    const int bh = static_cast<int>(rng.Uniform(m / 5.0, m / 2.5)) + 1;
    const int x0 = static_cast<int>(rng.Uniform(0, w - bw));
    const int y0 = static_cast<int>(rng.Uniform(0, h - bh));
    const double g = rng.Uniform(0.1, 0.3);
    PaintRect(canvas, y0, y0 + bh, x0, x0 + bw, {g, g, g * 1.1}, rng);
  }
  const double r_min = std::max(1.5, m / 16.0);
  const double r_max = std::max(r_min, m / 5.0);
  const double r = rng.Uniform(r_min, r_max);
  const double cx = rng.Uniform(r, w - r);
  const double cy = rng.Uniform(r, h - r);
  struct Patch {
    double x, y, r;
  };
  std::vector<Patch> patches;
  const double phase = rng.Uniform(0, 2 * std::numbers::pi);
  for (int i = 0; i < 3; ++i) {
    const double a = phase + i * 2 * std::numbers::pi / 3;
    patches.push_back({cx + 0.5 * r * std::cos(a), cy + 0.5 * r * std::sin(a), 0.3 * r});
  }
  const double white = rng.Uniform(0.85, 1.0);
  const double dark = rng.Uniform(0.05, 0.2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      if (dx * dx + dy * dy > r * r) continue;
      double level = white;
      for (const Patch& p : patches) {
        const double ex = x + 0.5 - p.x;
        const double ey = y + 0.5 - p.y;
        if (ex * ex + ey * ey <= p.r * p.r) level = dark;
      }
      // Darken toward the rim so the disc reads as a sphere.
      level *= 1.0 - 0.25 * (dx * dx + dy * dy) / (r * r);
      const double n = rng.Uniform(-0.03, 0.03);
      canvas.at(y, x) = {level + n, level + n, level + n};
      mask.at(y, x) = 1;
    }
  }
  return {canvas.ToTensor(), std::move(mask)};
}

// The released goal-post annotations mark "the bottom of the goalposts"
// without saying whether that is a point or a region; a post-wide square is
// used here.
Sample GoalScene(int h, int w, SceneRng& rng) {
  Canvas canvas(h, w);
  LabelMap mask(h, w, 0);
  const int horizon = static_cast<int>(rng.Uniform(0.25, 0.45) * h);
  const Rgb wall{rng.Uniform(0.3, 0.5), rng.Uniform(0.3, 0.5), rng.Uniform(0.45, 0.7)};
  PaintRect(canvas, 0, horizon, 0, w, wall, rng);
  PaintField(canvas, rng, horizon);
  const int post_w = std::max(2, static_cast<int>(rng.Uniform(w / 24.0, w / 12.0)));
  const int bottom = static_cast<int>(rng.Uniform(horizon + 0.15 * h, 0.85 * h));
  const int left = static_cast<int>(rng.Uniform(0.08, 0.35) * w);
  const int right = static_cast<int>(rng.Uniform(0.6, 0.88) * w) - post_w;
  const double level = rng.Uniform(0.85, 1.0);
  const Rgb white{level, level, level};
  if (rng.Chance(0.5)) {
    const int y = static_cast<int>(rng.Uniform(bottom + 2, h));
    PaintRect(canvas, y, y + std::max(1, post_w / 2), 0, w, white, rng);
  }
  const int top = rng.Chance(0.5) ? 0 : static_cast<int>(rng.Uniform(0, horizon / 2.0));
  if (top > 0) PaintRect(canvas, top, top + post_w, left, right + post_w, white, rng);
  for (int x0 : {left, right}) {
    PaintRect(canvas, top, bottom - post_w, x0, x0 + post_w, white, rng);
    PaintRect(canvas, bottom - post_w, bottom, x0, x0 + post_w, white, rng, &mask, 1);
  }
  return {canvas.ToTensor(), std::move(mask)};
}

std::string NumberedName(const char* prefix, std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%05zu.%s", prefix, i, ext);
  return buf;
}

}  // namespace

void Dataset::Validate() const {
  if (class_count < 1) Fail(ErrorKind::kData, "class_count must be positive");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    const Shape& is = s.image.shape();
    if (is.n != 1 || is.c != 3 || is.h != s.mask.h || is.w != s.mask.w) {
      Fail(ErrorKind::kData, "sample " + std::to_string(i) + ": image " +
                                 is.ToString() + " does not match mask " +
                                 std::to_string(s.mask.h) + "x" + std::to_string(s.mask.w));
    }
    for (int v : s.mask.labels) {
      if (v < 0 || v >= class_count) {
        Fail(ErrorKind::kData, "sample " + std::to_string(i) + ": label " +
                                   std::to_string(v) + " >= class_count " +
                                   std::to_string(class_count));
      }
    }
  }
}

Sample MakeSample(Tensor image, LabelMap mask) {
  const Shape& s = image.shape();
  if (s.h != mask.h || s.w != mask.w) {
    Fail(ErrorKind::kData, "mask " + std::to_string(mask.h) + "x" + std::to_string(mask.w) +
                               " does not match image " + std::to_string(s.h) + "x" +
                               std::to_string(s.w));
  }
  return {std::move(image), std::move(mask)};
}

Dataset SynthDataset(SceneKind kind, int count, int h, int w, std::uint64_t seed) {
  if (h < 8 || w < 8 || h % 8 != 0 || w % 8 != 0) {
    Fail(ErrorKind::kShape, "synthetic images need dimensions divisible by 8, got " +
                                std::to_string(h) + "x" + std::to_string(w));
  }
  if (count < 0) Fail(ErrorKind::kData, "negative image count");
  Dataset data;
  data.class_count = 2;
  data.class_names = {"background", kind == SceneKind::kBall ? "ball" : "goalpost"};
  data.samples.reserve(count);
  for (int i = 0; i < count; ++i) {
    SceneRng rng(seed ^ static_cast<std::uint64_t>(i));
    data.samples.push_back(kind == SceneKind::kBall ? BallScene(h, w, rng)
                                                    : GoalScene(h, w, rng));
  }
  return data;
}

void SaveDataset(const Dataset& data, const std::string& dir) {
  data.Validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) Fail(ErrorKind::kData, "cannot create directory '" + dir + "'");
  const std::filesystem::path root(dir);
  for (std::size_t i = 0; i < data.size(); ++i) {
    SavePpm(data.samples[i].image, (root / NumberedName("img", i, "ppm")).string());
    SaveMask(data.samples[i].mask, (root / NumberedName("msk", i, "pgm")).string());
  }
  std::ostringstream manifest;
  manifest << "class_count=" << data.class_count << "\nnames=";
  for (std::size_t i = 0; i < data.class_names.size(); ++i) {
    manifest << (i ? "," : "") << data.class_names[i];
  }
  manifest << "\ncount=" << data.size() << "\n";
  WriteFileBytes((root / "dataset.txt").string(), manifest.str());
}

Dataset LoadDataset(const std::string& dir) {
  const std::filesystem::path root(dir);
  std::istringstream manifest(ReadFileBytes((root / "dataset.txt").string()));
  Dataset data;
  long count = -1;
  data.class_count = -1;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) Fail(ErrorKind::kFormat, "manifest line without '='");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "class_count") {
        data.class_count = std::stoi(value);
      } else if (key == "count") {
        count = std::stol(value);
      } else if (key == "names") {
        std::istringstream names(value);
        std::string name;
        while (std::getline(names, name, ',')) data.class_names.push_back(name);
      } else {
        Fail(ErrorKind::kFormat, "unknown manifest key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      Fail(ErrorKind::kFormat, "bad manifest value for '" + key + "'");
    }
  }
  if (data.class_count < 1 || count < 0) {
    Fail(ErrorKind::kFormat, "manifest must define class_count and count");
  }
  for (long i = 0; i < count; ++i) {
    Tensor image = LoadPpm((root / NumberedName("img", i, "ppm")).string());
    LabelMap mask = LoadMask((root / NumberedName("msk", i, "pgm")).string());
    data.samples.push_back(MakeSample(std::move(image), std::move(mask)));
  }
  data.Validate();
  return data;
}

}  // namespace segmini
