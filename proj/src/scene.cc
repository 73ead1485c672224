// Copyright 2026 The t2i-mia Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "t2i_mia/synthdata/scene.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <tuple>

#include "t2i_mia/core/error.h"
#include "t2i_mia/core/rng.h"
#include "t2i_mia/core/vocabulary.h"

namespace t2i_mia {
namespace {

constexpr int kPixels = kImageHeight * kImageWidth;
// Below half the smallest object/background palette distance (purple on
// gray, about 0.39).
constexpr double kObjectThreshold = 0.19;

struct Anchor {
  double x;
  double y;
};

Anchor AnchorOf(Position p) {
  switch (p) {
    case Position::kCenter:
      return {16.0, 16.0};
    case Position::kTopLeft:
      return {8.0, 8.0};
    case Position::kTopRight:
      return {24.0, 8.0};
    case Position::kBottomLeft:
      return {8.0, 24.0};
    case Position::kBottomRight:
      return {24.0, 24.0};
  }
  return {16.0, 16.0};
}

double RadiusOf(Size s) {
  switch (s) {
    case Size::kSmall:
      return 4.0;
    case Size::kMedium:
      return 5.5;
    case Size::kLarge:
      return 7.0;
  }
  return 4.0;
}

bool Inside(Shape shape, double dx, double dy, double r) {
  const bool in_box = std::abs(dx) <= r && std::abs(dy) <= r;
  switch (shape) {
    case Shape::kCircle:
      return dx * dx + dy * dy <= r * r;
    case Shape::kSquare:
      return in_box;
    case Shape::kTriangle:
      // Apex up; y grows downward.
      return in_box && std::abs(dx) <= (dy + r) / 2.0;
    case Shape::kCross:
      return in_box && (std::abs(dx) <= r / 3.0 || std::abs(dy) <= r / 3.0);
  }
  return false;
}

struct Template {
  Shape shape;
  Size size;
  Position position;
  std::vector<std::uint8_t> mask;
  int count = 0;
};

const std::vector<Template>& Templates() {
  static const std::vector<Template> templates = [] {
    std::vector<Template> out;
    for (int s = 0; s < kNumShapes; ++s) {
      for (int z = 0; z < kNumSizes; ++z) {
        for (int p = 0; p < kNumPositions; ++p) {
          const auto shape = static_cast<Shape>(s);
          const auto size = static_cast<Size>(z);
          const auto pos = static_cast<Position>(p);
          for (const auto& [dx, dy] : ValidOffsets(shape, size, pos)) {
            Template t{shape, size, pos, ShapeMask(shape, size, pos, dx, dy), 0};
            for (const auto m : t.mask) t.count += m;
            out.push_back(std::move(t));
          }
        }
      }
    }
    return out;
  }();
  return templates;
}

// Pixel region a shape at `p` must stay inside: the quadrant for corners,
// the image minus its border for the center.
bool InRegion(Position p, int x, int y) {
  const int last = kImageWidth - 1;
  if (x < 1 || y < 1 || x >= last || y >= last) return false;
  const int half = kImageWidth / 2;
  switch (p) {
    case Position::kCenter:
      return true;
    case Position::kTopLeft:
      return x < half && y < half;
    case Position::kTopRight:
      return x >= half && y < half;
    case Position::kBottomLeft:
      return x < half && y >= half;
    case Position::kBottomRight:
      return x >= half && y >= half;
  }
  return false;
}

double RgbDistance(const std::array<double, 3>& a, const Rgb& b) {
  double sq = 0.0;
  for (int c = 0; c < 3; ++c) sq += (a[c] - b[c]) * (a[c] - b[c]);
  return std::sqrt(sq);
}

std::array<double, 3> PixelRgb(const ImageSample& img, int y, int x) {
  return {img.at(0, y, x), img.at(1, y, x), img.at(2, y, x)};
}

struct ObjectMask {
  Background background = Background::kWhite;
  double background_distance = 0.0;
  std::vector<std::uint8_t> mask;
  int count = 0;
  std::array<double, 3> mean{0.0, 0.0, 0.0};
};

ObjectMask DetectObject(const ImageSample& img) {
  if (img.height() != kImageHeight || img.width() != kImageWidth ||
      img.channels() != kImageChannels) {
    throw Error("scene analysis expects a 32x32x3 image");
  }
  ObjectMask out;
  std::array<double, 3> border{0.0, 0.0, 0.0};
  int n_border = 0;
  for (int y = 0; y < kImageHeight; ++y) {
    for (int x = 0; x < kImageWidth; ++x) {
      if (y != 0 && x != 0 && y != kImageHeight - 1 && x != kImageWidth - 1) {
        continue;
      }
      const auto p = PixelRgb(img, y, x);
      for (int c = 0; c < 3; ++c) border[c] += p[c];
      ++n_border;
    }
  }
  for (double& v : border) v /= n_border;
  double best = std::numeric_limits<double>::infinity();
  for (int b = 0; b < kNumBackgrounds; ++b) {
    const double d = RgbDistance(border, BackgroundRgb(static_cast<Background>(b)));
    if (d < best) {
      best = d;
      out.background = static_cast<Background>(b);
    }
  }
  out.background_distance = best;

  const Rgb bg = BackgroundRgb(out.background);
  out.mask.assign(kPixels, 0);
  for (int y = 0; y < kImageHeight; ++y) {
    for (int x = 0; x < kImageWidth; ++x) {
      const auto p = PixelRgb(img, y, x);
      if (RgbDistance(p, bg) > kObjectThreshold) {
        out.mask[static_cast<std::size_t>(y) * kImageWidth + x] = 1;
        ++out.count;
        for (int c = 0; c < 3; ++c) out.mean[c] += p[c];
      }
    }
  }
  if (out.count > 0) {
    for (double& v : out.mean) v /= out.count;
  }
  return out;
}

double Iou(const std::vector<std::uint8_t>& mask, int mask_count,
           const Template& t) {
  int inter = 0;
  for (int i = 0; i < kPixels; ++i) inter += mask[i] & t.mask[i];
  const int uni = mask_count + t.count - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

}  // namespace

std::vector<std::uint8_t> ShapeMask(Shape shape, Size size, Position position,
                                    int dx, int dy) {
  Anchor a = AnchorOf(position);
  a.x += dx;
  a.y += dy;
  const double r = RadiusOf(size);
  std::vector<std::uint8_t> mask(kPixels, 0);
  for (int y = 0; y < kImageHeight; ++y) {
    for (int x = 0; x < kImageWidth; ++x) {
      if (Inside(shape, x + 0.5 - a.x, y + 0.5 - a.y, r)) {
        mask[static_cast<std::size_t>(y) * kImageWidth + x] = 1;
      }
    }
  }
  return mask;
}

std::vector<std::pair<int, int>> ValidOffsets(Shape shape, Size size,
                                              Position position) {
  std::vector<std::pair<int, int>> out;
  for (int dy = -kMaxOffset; dy <= kMaxOffset; ++dy) {
    for (int dx = -kMaxOffset; dx <= kMaxOffset; ++dx) {
      const auto mask = ShapeMask(shape, size, position, dx, dy);
      bool ok = true;
      for (int i = 0; i < kPixels && ok; ++i) {
        ok = !mask[i] || InRegion(position, i % kImageWidth, i / kImageWidth);
      }
      if (ok) out.emplace_back(dx, dy);
    }
  }
  return out;
}

SceneDetail DetailOf(const SceneSpec& spec) {
  Rng rng(DeriveSeed(RngSeed{0x5ce11e}, static_cast<std::uint64_t>(SceneIndex(spec))));
  const auto offsets = ValidOffsets(spec.shape, spec.size, spec.position);
  SceneDetail d;
  std::tie(d.dx, d.dy) = offsets[rng.Index(offsets.size())];
  for (float& s : d.shade) {
    s = static_cast<float>(static_cast<int>(rng.Index(3)) - 1) * kShadeStep;
  }
  return d;
}

ImageSample RenderSample(const SceneSpec& spec, std::string id,
                         Origin origin) {
  const SceneDetail d = DetailOf(spec);
  const auto mask = ShapeMask(spec.shape, spec.size, spec.position, d.dx, d.dy);
  Rgb fg = ColorRgb(spec.color);
  for (int c = 0; c < 3; ++c) fg[c] = std::clamp(fg[c] + d.shade[c], 0.0f, 1.0f);
  const Rgb bg = BackgroundRgb(spec.background);
  std::vector<float> pixels(static_cast<std::size_t>(kImageChannels) * kPixels);
  for (int c = 0; c < kImageChannels; ++c) {
    for (int i = 0; i < kPixels; ++i) {
      pixels[static_cast<std::size_t>(c) * kPixels + i] = mask[i] ? fg[c] : bg[c];
    }
  }
  return ImageSample(std::move(id), origin, kImageHeight, kImageWidth,
                     kImageChannels, std::move(pixels), spec);
}

Caption CanonicalCaption(const SceneSpec& spec) {
  const auto id = [](std::string_view word) { return *Vocabulary::Id(word); };
  return Caption({id("a"), id(SizeName(spec.size)), id(ColorName(spec.color)),
                  id(ShapeName(spec.shape)), id("at"), id("the"),
                  id(PositionName(spec.position)), id("on"),
                  id(BackgroundName(spec.background))});
}

std::optional<SceneSpec> SceneFromCaption(const Caption& caption) {
  const auto& t = caption.tokens();
  if (t.size() != 9) return std::nullopt;
  const auto word = [&](std::size_t i) { return Vocabulary::Word(t[i]); };
  if (word(0) != "a" || word(4) != "at" || word(5) != "the" ||
      word(7) != "on") {
    return std::nullopt;
  }
  const auto find = [](std::string_view w, int n, auto name_of,
                       auto& out) -> bool {
    for (int i = 0; i < n; ++i) {
      using E = std::remove_reference_t<decltype(out)>;
      if (name_of(static_cast<E>(i)) == w) {
        out = static_cast<E>(i);
        return true;
      }
    }
    return false;
  };
  SceneSpec s;
  if (!find(word(1), kNumSizes, SizeName, s.size) ||
      !find(word(2), kNumColors, ColorName, s.color) ||
      !find(word(3), kNumShapes, ShapeName, s.shape) ||
      !find(word(6), kNumPositions, PositionName, s.position) ||
      !find(word(8), kNumBackgrounds, BackgroundName, s.background)) {
    return std::nullopt;
  }
  return s;
}

SceneAnalysis AnalyzeScene(const ImageSample& image) {
  const ObjectMask obj = DetectObject(image);
  SceneAnalysis out;
  out.scene.background = obj.background;
  out.background_distance = obj.background_distance;
  out.object_pixels = obj.count;
  if (obj.count == 0) {
    out.confidence = 0.0;
    return out;
  }
  double best_color = std::numeric_limits<double>::infinity();
  for (int c = 0; c < kNumColors; ++c) {
    const double d = RgbDistance(obj.mean, ColorRgb(static_cast<Color>(c)));
    if (d < best_color) {
      best_color = d;
      out.scene.color = static_cast<Color>(c);
    }
  }
  out.color_distance = best_color;
  double best_iou = -1.0;
  for (const Template& t : Templates()) {
    const double iou = Iou(obj.mask, obj.count, t);
    if (iou > best_iou) {
      best_iou = iou;
      out.scene.shape = t.shape;
      out.scene.size = t.size;
      out.scene.position = t.position;
    }
  }
  out.shape_iou = best_iou;
  const double color_penalty =
      std::min(1.0, out.color_distance + out.background_distance);
  out.confidence = best_iou * (1.0 - color_penalty);
  return out;
}

double ShapeScore(const ImageSample& image, Shape shape) {
  const ObjectMask obj = DetectObject(image);
  if (obj.count == 0) return 0.0;
  double best = 0.0;
  for (const Template& t : Templates()) {
    if (t.shape == shape) best = std::max(best, Iou(obj.mask, obj.count, t));
  }
  return best;
}

}  // namespace t2i_mia
