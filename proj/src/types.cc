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

#include "t2i_mia/core/types.h"

#include <cmath>
#include <sstream>

#include "t2i_mia/core/error.h"
#include "t2i_mia/core/vocabulary.h"

namespace t2i_mia {

std::string_view OriginName(Origin origin) {
  switch (origin) {
    case Origin::kMember:
      return "member";
    case Origin::kLocalNonmember:
      return "local_nonmember";
    case Origin::kGenerated:
      return "generated";
  }
  return "unknown";
}

Origin OriginFromName(std::string_view name) {
  if (name == "member") return Origin::kMember;
  if (name == "local_nonmember") return Origin::kLocalNonmember;
  if (name == "generated") return Origin::kGenerated;
  throw Error("unknown origin: " + std::string(name));
}

std::string_view ModalityName(Modality m) {
  return m == Modality::kImage ? "image" : "text";
}

ImageSample::ImageSample(std::string id, Origin origin, int height, int width,
                         int channels, std::vector<float> pixels,
                         std::optional<SceneSpec> scene)
    : id_(std::move(id)),
      origin_(origin),
      height_(height),
      width_(width),
      channels_(channels),
      pixels_(std::move(pixels)),
      scene_(scene) {
  if (height_ <= 0 || width_ <= 0 || channels_ <= 0) {
    throw Error("image dimensions must be positive");
  }
  const auto expected = static_cast<std::size_t>(height_) * width_ * channels_;
  if (pixels_.size() != expected) {
    throw Error("image '" + id_ + "' has " + std::to_string(pixels_.size()) +
                " values, expected " + std::to_string(expected));
  }
  for (const float v : pixels_) {
    // Written so that NaN also fails.
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw Error("image '" + id_ + "' has pixel value " + std::to_string(v) +
                  " outside [0, 1]");
    }
  }
}

ImageSample ImageSample::StripMetadata() const {
  return ImageSample("", origin_, height_, width_, channels_, pixels_,
                     std::nullopt);
}

ImageSample ImageSample::WithIdentity(std::string id, Origin origin) const {
  return ImageSample(std::move(id), origin, height_, width_, channels_,
                     pixels_, scene_);
}

Caption::Caption(std::vector<int> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw Error("caption has no tokens");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!Vocabulary::Contains(tokens_[i])) {
      throw Error("caption token " + std::to_string(tokens_[i]) +
                  " outside vocabulary");
    }
    if (i > 0) text_ += ' ';
    text_ += Vocabulary::Word(tokens_[i]);
  }
}

Caption Caption::Parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<int> tokens;
  std::string word;
  while (in >> word) {
    const auto id = Vocabulary::Id(word);
    if (!id) throw Error("unknown word in caption: '" + word + "'");
    tokens.push_back(*id);
  }
  return Caption(std::move(tokens));
}

EmbeddingVector::EmbeddingVector(std::vector<float> values, Modality modality)
    : values_(std::move(values)), modality_(modality) {
  if (values_.empty()) throw Error("embedding has zero dimension");
  double sq = 0.0;
  for (const float v : values_) sq += static_cast<double>(v) * v;
  const double norm = std::sqrt(sq);
  if (!(std::abs(norm - 1.0) <= kNormTolerance)) {
    throw Error("embedding norm " + std::to_string(norm) + " is not 1");
  }
}

EmbeddingVector EmbeddingVector::Normalize(std::span<const double> raw,
                                           Modality modality) {
  double sq = 0.0;
  for (const double v : raw) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error("cannot normalize a zero or non-finite vector");
  }
  std::vector<float> values(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    values[i] = static_cast<float>(raw[i] / norm);
  }
  return EmbeddingVector(std::move(values), modality);
}

double CosineSimilarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw Error("cosine similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    const double x = a.values()[i], y = b.values()[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  return dot / std::sqrt(na * nb);
}

}  // namespace t2i_mia
