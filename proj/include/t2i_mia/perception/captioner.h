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

#ifndef T2I_MIA_PERCEPTION_CAPTIONER_H_
#define T2I_MIA_PERCEPTION_CAPTIONER_H_

#include <string_view>

#include "t2i_mia/core/rng.h"
#include "t2i_mia/core/types.h"

namespace t2i_mia {

enum class CaptionerKind : std::uint8_t {
  kProceduralOracle,
  kNoisyOracle,
  kExternalAdapter
};

std::string_view CaptionerKindName(CaptionerKind kind);
CaptionerKind CaptionerKindFromName(std::string_view name);

struct CaptionResult {
  Caption caption;
  // Confidence of the underlying scene analysis, in [0, 1].
  double confidence = 0.0;
  // Set when the image was not recognizable and the caption is a fallback.
  bool flagged = false;
};

// Captions images from pixels alone by analyzing the rendered scene. The
// noisy variant then replaces each of the five attributes, independently
// with probability noise_rate, by a different value drawn uniformly. Its
// randomness is keyed on the pixel content, so captioning stays a pure
// function of the image.
class Captioner {
 public:
  static constexpr double kFlagBelowConfidence = 0.5;

  static Captioner ProceduralOracle();
  static Captioner NoisyOracle(double noise_rate, RngSeed seed);
  // Always throws Error: no adapter ships in this build.
  static Captioner ExternalAdapter(std::string_view name);

  CaptionerKind kind() const { return kind_; }
  double noise_rate() const { return noise_rate_; }

  CaptionResult Describe(const ImageSample& image) const;

 private:
  Captioner(CaptionerKind kind, double noise_rate, RngSeed seed)
      : kind_(kind), noise_rate_(noise_rate), seed_(seed) {}

  CaptionerKind kind_;
  double noise_rate_;
  RngSeed seed_;
};

}  // namespace t2i_mia

#endif  // T2I_MIA_PERCEPTION_CAPTIONER_H_
