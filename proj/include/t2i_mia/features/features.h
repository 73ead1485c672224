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

#ifndef T2I_MIA_FEATURES_FEATURES_H_
#define T2I_MIA_FEATURES_FEATURES_H_

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "t2i_mia/core/types.h"
#include "t2i_mia/perception/embedder.h"

namespace t2i_mia {

enum class PairwiseOpKind : std::uint8_t {
  kL1,
  kL2,
  kHadamard,
  kAverage,
  kConcatenation,
};

inline constexpr std::array<PairwiseOpKind, 5> kAllPairwiseOps = {
    PairwiseOpKind::kL1, PairwiseOpKind::kL2, PairwiseOpKind::kHadamard,
    PairwiseOpKind::kAverage, PairwiseOpKind::kConcatenation};

std::string_view PairwiseOpName(PairwiseOpKind op);
PairwiseOpKind PairwiseOpFromName(std::string_view name);

// Element-wise combination of two embeddings. L2 is the per-coordinate
// squared difference, not a scalar norm. Concatenation is [u, v] (length 2d);
// the rest have length d. Throws Error on a dimension mismatch.
std::vector<float> PairwiseOp(std::span<const float> u,
                              std::span<const float> v, PairwiseOpKind op);
std::vector<float> PairwiseOp(const EmbeddingVector& u, const EmbeddingVector& v,
                              PairwiseOpKind op);
// Output length of `op` on d-dimensional inputs.
int PairwiseOpDim(PairwiseOpKind op, int d);

enum class AttackKind : std::uint8_t { kIP, kIS, kIIP, kIIS, kIII, kIV };

inline constexpr std::array<AttackKind, 6> kAllAttackKinds = {
    AttackKind::kIP,  AttackKind::kIS,  AttackKind::kIIP,
    AttackKind::kIIS, AttackKind::kIII, AttackKind::kIV};

// "I-P", "I-S", "II-P", "II-S", "III", "IV".
std::string_view AttackKindName(AttackKind kind);
AttackKind AttackKindFromName(std::string_view name);
bool IsPixelLevel(AttackKind kind);

// Channel-major map, same layout as ImageSample pixels.
struct PixelMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> values;

  friend bool operator==(const PixelMap&, const PixelMap&) = default;
};

struct AttackFeature {
  AttackKind kind = AttackKind::kIP;
  std::optional<PixelMap> pixel_payload;
  std::vector<std::vector<float>> vector_payload;
  std::optional<MembershipLabel> label;
  // Ids of the query and generated images the feature came from.
  std::string query_id;
  std::string generated_id;

  // Throws Error if the payloads do not fit `kind`: pixel kinds carry only a
  // pixel map, I-S/II-S/III exactly one vector, IV exactly three.
  void Validate() const;

  friend bool operator==(const AttackFeature&, const AttackFeature&) = default;
};

// The generated image itself.
AttackFeature FeatureIP(const ImageSample& generated);
// Embedding of the generated image.
AttackFeature FeatureIS(const ImageSample& generated, const Embedder& emb);
// |query - generated| per pixel. Throws Error on a shape mismatch.
AttackFeature FeatureIIP(const ImageSample& query, const ImageSample& generated);
// op(embed(query), embed(generated)).
AttackFeature FeatureIIS(const ImageSample& query, const ImageSample& generated,
                         const Embedder& emb,
                         PairwiseOpKind op = PairwiseOpKind::kConcatenation);
// op(embed(generated), embed_text(caption)).
AttackFeature FeatureIII(const ImageSample& generated, const Caption& caption,
                         const Embedder& emb,
                         PairwiseOpKind op = PairwiseOpKind::kConcatenation);
// [generated embedding, II-S payload, III payload].
AttackFeature FeatureIV(const ImageSample& query, const ImageSample& generated,
                        const Caption& caption, const Embedder& emb,
                        PairwiseOpKind op_same = PairwiseOpKind::kConcatenation,
                        PairwiseOpKind op_cross = PairwiseOpKind::kConcatenation);

struct FeatureOps {
  PairwiseOpKind same = PairwiseOpKind::kConcatenation;
  PairwiseOpKind cross = PairwiseOpKind::kConcatenation;
};

// Every requested kind for one query, computing each embedding once.
// Results are identical to calling the single-kind extractors.
std::vector<AttackFeature> ExtractFeatures(std::span<const AttackKind> kinds,
                                           const ImageSample& query,
                                           const ImageSample& generated,
                                           const Caption& caption,
                                           const Embedder& emb,
                                           const FeatureOps& ops = {});

nlohmann::json FeatureToJson(const AttackFeature& f);
AttackFeature FeatureFromJson(const nlohmann::json& j);

// JSON lines, one feature per line, float payloads as base64 float32.
void WriteFeatureCache(const std::filesystem::path& path,
                       std::span<const AttackFeature> features);
std::vector<AttackFeature> ReadFeatureCache(const std::filesystem::path& path);

}  // namespace t2i_mia

#endif  // T2I_MIA_FEATURES_FEATURES_H_
