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

#include "t2i_mia/core/scene_spec.h"

#include <algorithm>
#include <string>
#include <vector>

#include "t2i_mia/core/error.h"
#include "t2i_mia/core/vocabulary.h"

namespace t2i_mia {
namespace {

constexpr std::array<std::string_view, kNumShapes> kShapeNames = {
    "circle", "square", "triangle", "cross"};
constexpr std::array<std::string_view, kNumColors> kColorNames = {
    "red", "green", "blue", "yellow", "orange", "purple", "cyan", "magenta"};
constexpr std::array<std::string_view, kNumSizes> kSizeNames = {
    "small", "medium", "large"};
constexpr std::array<std::string_view, kNumPositions> kPositionNames = {
    "center", "top-left", "top-right", "bottom-left", "bottom-right"};
constexpr std::array<std::string_view, kNumBackgrounds> kBackgroundNames = {
    "white", "black", "gray", "beige"};

constexpr std::array<std::string_view, 4> kFunctionWords = {"a", "at", "the",
                                                            "on"};

const std::vector<std::string_view>& Words() {
  static const std::vector<std::string_view> words = [] {
    std::vector<std::string_view> w(kFunctionWords.begin(),
                                    kFunctionWords.end());
    w.insert(w.end(), kShapeNames.begin(), kShapeNames.end());
    w.insert(w.end(), kColorNames.begin(), kColorNames.end());
    w.insert(w.end(), kSizeNames.begin(), kSizeNames.end());
    w.insert(w.end(), kPositionNames.begin(), kPositionNames.end());
    w.insert(w.end(), kBackgroundNames.begin(), kBackgroundNames.end());
    return w;
  }();
  return words;
}

}  // namespace

int SceneIndex(const SceneSpec& s) {
  int index = static_cast<int>(s.shape);
  index = index * kNumColors + static_cast<int>(s.color);
  index = index * kNumSizes + static_cast<int>(s.size);
  index = index * kNumPositions + static_cast<int>(s.position);
  index = index * kNumBackgrounds + static_cast<int>(s.background);
  return index;
}

SceneSpec SceneFromIndex(int index) {
  if (index < 0 || index >= kNumSceneSpecs) {
    throw Error("scene index out of range: " + std::to_string(index));
  }
  SceneSpec s;
  s.background = static_cast<Background>(index % kNumBackgrounds);
  index /= kNumBackgrounds;
  s.position = static_cast<Position>(index % kNumPositions);
  index /= kNumPositions;
  s.size = static_cast<Size>(index % kNumSizes);
  index /= kNumSizes;
  s.color = static_cast<Color>(index % kNumColors);
  index /= kNumColors;
  s.shape = static_cast<Shape>(index);
  return s;
}

std::string_view ShapeName(Shape s) {
  return kShapeNames[static_cast<int>(s)];
}
std::string_view ColorName(Color c) {
  return kColorNames[static_cast<int>(c)];
}
std::string_view SizeName(Size s) { return kSizeNames[static_cast<int>(s)]; }
std::string_view PositionName(Position p) {
  return kPositionNames[static_cast<int>(p)];
}
std::string_view BackgroundName(Background b) {
  return kBackgroundNames[static_cast<int>(b)];
}

Rgb ColorRgb(Color c) {
  static constexpr std::array<Rgb, kNumColors> kRgb = {{
      {0.90f, 0.10f, 0.10f},  // red
      {0.10f, 0.70f, 0.20f},  // green
      {0.15f, 0.25f, 0.90f},  // blue
      {0.95f, 0.90f, 0.10f},  // yellow
      {1.00f, 0.55f, 0.05f},  // orange
      {0.55f, 0.20f, 0.75f},  // purple
      {0.10f, 0.85f, 0.90f},  // cyan
      {0.90f, 0.20f, 0.70f},  // magenta
  }};
  return kRgb[static_cast<int>(c)];
}

Rgb BackgroundRgb(Background b) {
  static constexpr std::array<Rgb, kNumBackgrounds> kRgb = {{
      {1.00f, 1.00f, 1.00f},  // white
      {0.00f, 0.00f, 0.00f},  // black
      {0.50f, 0.50f, 0.50f},  // gray
      {0.90f, 0.85f, 0.70f},  // beige
  }};
  return kRgb[static_cast<int>(b)];
}

int Vocabulary::size() { return static_cast<int>(Words().size()); }

std::string_view Vocabulary::Word(int id) {
  if (!Contains(id)) {
    throw Error("token id outside vocabulary: " + std::to_string(id));
  }
  return Words()[static_cast<std::size_t>(id)];
}

std::optional<int> Vocabulary::Id(std::string_view word) {
  const auto& w = Words();
  const auto it = std::find(w.begin(), w.end(), word);
  if (it == w.end()) return std::nullopt;
  return static_cast<int>(it - w.begin());
}

}  // namespace t2i_mia
