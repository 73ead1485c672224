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

#ifndef T2I_MIA_CORE_TYPES_H_
#define T2I_MIA_CORE_TYPES_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "t2i_mia/core/scene_spec.h"

namespace t2i_mia {

inline constexpr int kImageHeight = 32;
inline constexpr int kImageWidth = 32;
inline constexpr int kImageChannels = 3;
inline constexpr int kDefaultEmbeddingDim = 64;

enum class Origin : std::uint8_t { kMember, kLocalNonmember, kGenerated };

std::string_view OriginName(Origin origin);
Origin OriginFromName(std::string_view name);

enum class MembershipLabel : std::uint8_t { kNonmember = 0, kMember = 1 };

// A fixed-size raster image with values in [0, 1], stored channel-major
// (index = (c * height + y) * width + x). Immutable after construction.
class ImageSample {
 public:
  // Throws Error if any pixel is outside [0, 1] (or NaN) or if the pixel
  // count disagrees with the shape.
  ImageSample(std::string id, Origin origin, int height, int width,
              int channels, std::vector<float> pixels,
              std::optional<SceneSpec> scene = std::nullopt);

  const std::string& id() const { return id_; }
  Origin origin() const { return origin_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::span<const float> pixels() const { return pixels_; }
  const std::optional<SceneSpec>& scene() const { return scene_; }

  float at(int c, int y, int x) const {
    return pixels_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }

  // Same pixels with the id and scene metadata removed, used wherever a
  // component must work from pixels alone.
  ImageSample StripMetadata() const;

  ImageSample WithIdentity(std::string id, Origin origin) const;

  bool SameShape(const ImageSample& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  friend bool operator==(const ImageSample&, const ImageSample&) = default;

 private:
  std::string id_;
  Origin origin_;
  int height_;
  int width_;
  int channels_;
  std::vector<float> pixels_;
  std::optional<SceneSpec> scene_;
};

// A caption over the closed synthetic vocabulary.
class Caption {
 public:
  // Throws Error on any token id outside the vocabulary or an empty sequence.
  explicit Caption(std::vector<int> tokens);

  // Whitespace-separated words; throws Error on unknown words.
  static Caption Parse(std::string_view text);

  const std::vector<int>& tokens() const { return tokens_; }
  const std::string& text() const { return text_; }

  friend bool operator==(const Caption&, const Caption&) = default;

 private:
  std::vector<int> tokens_;
  std::string text_;
};

enum class Modality : std::uint8_t { kImage, kText };

std::string_view ModalityName(Modality m);

// A unit-norm embedding. The constructor rejects vectors whose Euclidean
// norm differs from 1 by more than kNormTolerance.
class EmbeddingVector {
 public:
  static constexpr double kNormTolerance = 1e-6;

  EmbeddingVector(std::vector<float> values, Modality modality);

  // Scales `raw` to unit norm (accumulating in double) and constructs.
  static EmbeddingVector Normalize(std::span<const double> raw,
                                   Modality modality);

  const std::vector<float>& values() const { return values_; }
  int dim() const { return static_cast<int>(values_.size()); }
  Modality modality() const { return modality_; }

  friend bool operator==(const EmbeddingVector&,
                         const EmbeddingVector&) = default;

 private:
  std::vector<float> values_;
  Modality modality_;
};

double CosineSimilarity(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace t2i_mia

#endif  // T2I_MIA_CORE_TYPES_H_
