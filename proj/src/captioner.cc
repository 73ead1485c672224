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

#include "t2i_mia/perception/captioner.h"

#include <cstring>
#include <string>

#include "t2i_mia/core/error.h"
#include "t2i_mia/synthdata/scene.h"

namespace t2i_mia {
namespace {

template <typename E>
void Perturb(E& value, int count, double rate, Rng& rng) {
  if (!rng.Bernoulli(rate)) return;
  // A uniformly chosen value other than the current one.
  int v = static_cast<int>(rng.Index(static_cast<std::size_t>(count - 1)));
  if (v >= static_cast<int>(value)) ++v;
  value = static_cast<E>(v);
}

std::uint64_t PixelHash(const ImageSample& image) {
  const auto px = image.pixels();
  return HashBytes(std::string_view(reinterpret_cast<const char*>(px.data()),
                                    px.size() * sizeof(float)));
}

}  // namespace

std::string_view CaptionerKindName(CaptionerKind kind) {
  switch (kind) {
    case CaptionerKind::kProceduralOracle:
      return "procedural_oracle";
    case CaptionerKind::kNoisyOracle:
      return "noisy_oracle";
    case CaptionerKind::kExternalAdapter:
      return "external_adapter";
  }
  throw Error("unknown captioner kind");
}

CaptionerKind CaptionerKindFromName(std::string_view name) {
  for (const auto k : {CaptionerKind::kProceduralOracle,
                       CaptionerKind::kNoisyOracle,
                       CaptionerKind::kExternalAdapter}) {
    if (CaptionerKindName(k) == name) return k;
  }
  throw Error("unknown captioner kind '" + std::string(name) + "'");
}

Captioner Captioner::ProceduralOracle() {
  return Captioner(CaptionerKind::kProceduralOracle, 0.0, RngSeed{0});
}

Captioner Captioner::NoisyOracle(double noise_rate, RngSeed seed) {
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
    throw Error("noise rate must be in [0, 1]");
  }
  return Captioner(CaptionerKind::kNoisyOracle, noise_rate, seed);
}

Captioner Captioner::ExternalAdapter(std::string_view name) {
  throw Error("external captioner adapter '" + std::string(name) +
              "' is not available in this build");
}

CaptionResult Captioner::Describe(const ImageSample& image) const {
  const SceneAnalysis analysis = AnalyzeScene(image.StripMetadata());
  SceneSpec scene = analysis.scene;
  if (kind_ == CaptionerKind::kNoisyOracle && noise_rate_ > 0.0) {
    Rng rng(DeriveSeed(seed_, PixelHash(image)));
    Perturb(scene.shape, kNumShapes, noise_rate_, rng);
    Perturb(scene.color, kNumColors, noise_rate_, rng);
    Perturb(scene.size, kNumSizes, noise_rate_, rng);
    Perturb(scene.position, kNumPositions, noise_rate_, rng);
    Perturb(scene.background, kNumBackgrounds, noise_rate_, rng);
  }
  return {CanonicalCaption(scene), analysis.confidence,
          analysis.confidence < kFlagBelowConfidence};
}

}  // namespace t2i_mia
