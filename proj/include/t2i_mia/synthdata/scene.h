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

#ifndef T2I_MIA_SYNTHDATA_SCENE_H_
#define T2I_MIA_SYNTHDATA_SCENE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "t2i_mia/core/scene_spec.h"
#include "t2i_mia/core/types.h"

namespace t2i_mia {

// Binary occupancy mask (row-major, kImageHeight x kImageWidth) of a shape,
// shifted by (dx, dy) pixels from its anchor.
std::vector<std::uint8_t> ShapeMask(Shape shape, Size size, Position position,
                                    int dx = 0, int dy = 0);

// Offsets within +-kMaxOffset that keep the shape off the image border and,
// for corner positions, inside its quadrant. Always contains (0, 0).
inline constexpr int kMaxOffset = 2;
std::vector<std::pair<int, int>> ValidOffsets(Shape shape, Size size,
                                              Position position);

// Per-scene rendering detail the caption does not name: a small shift of
// the shape and a shade offset of its color. Derived from a fixed hash of
// the scene, so rendering stays a function of the SceneSpec alone.
inline constexpr float kShadeStep = 0.06f;
struct SceneDetail {
  int dx = 0;
  int dy = 0;
  // Each entry is -kShadeStep, 0 or +kShadeStep.
  std::array<float, 3> shade{0.0f, 0.0f, 0.0f};
};
SceneDetail DetailOf(const SceneSpec& spec);

// Deterministic 32x32x3 rendering of `spec`, including DetailOf(spec).
// Shapes never touch the image border, so border pixels are always
// background.
ImageSample RenderSample(const SceneSpec& spec, std::string id = "",
                         Origin origin = Origin::kMember);

// "a <size> <color> <shape> at the <position> on <background>".
Caption CanonicalCaption(const SceneSpec& spec);

// Inverse of CanonicalCaption; nullopt for any other token sequence.
std::optional<SceneSpec> SceneFromCaption(const Caption& caption);

struct SceneAnalysis {
  SceneSpec scene;
  // IoU of the detected object mask with the best shape template.
  double shape_iou = 0.0;
  // RGB distance of the mean object color to the matched palette color.
  double color_distance = 0.0;
  double background_distance = 0.0;
  int object_pixels = 0;
  // In [0, 1]; 1 for an exact rendering.
  double confidence = 0.0;
};

// Recovers the most likely SceneSpec from pixels alone (the scene metadata of
// `image` is never read). Background comes from the border pixels, the
// object color from the mean of the non-background pixels (nearest palette
// entry), and shape, size and position from the best-IoU template over every
// shape, size, position and valid offset.
SceneAnalysis AnalyzeScene(const ImageSample& image);

// Predicate score in [0, 1] for "image contains `shape`": the best IoU of the
// object mask with any template of that shape (any offset).
double ShapeScore(const ImageSample& image, Shape shape);

}  // namespace t2i_mia

#endif  // T2I_MIA_SYNTHDATA_SCENE_H_
