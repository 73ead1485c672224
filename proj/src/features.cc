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

#include "t2i_mia/features/features.h"

#include <cmath>
#include <fstream>

#include "t2i_mia/core/error.h"
#include "t2i_mia/core/serialize.h"

namespace t2i_mia {
namespace {

constexpr std::array<std::string_view, 5> kOpNames = {
    "l1", "l2", "hadamard", "average", "concatenation"};
constexpr std::array<std::string_view, 6> kKindNames = {"I-P",  "I-S", "II-P",
                                                        "II-S", "III", "IV"};

AttackFeature VectorFeature(AttackKind kind, std::vector<float> v,
                            const ImageSample& query,
                            const ImageSample& generated) {
  AttackFeature f;
  f.kind = kind;
  f.vector_payload.push_back(std::move(v));
  f.query_id = query.id();
  f.generated_id = generated.id();
  return f;
}

std::vector<float> Values(const EmbeddingVector& e) { return e.values(); }

}  // namespace

std::string_view PairwiseOpName(PairwiseOpKind op) {
  return kOpNames[static_cast<std::size_t>(op)];
}

PairwiseOpKind PairwiseOpFromName(std::string_view name) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i) {
    if (kOpNames[i] == name) return static_cast<PairwiseOpKind>(i);
  }
  throw Error("unknown pairwise op '" + std::string(name) + "'");
}

int PairwiseOpDim(PairwiseOpKind op, int d) {
  return op == PairwiseOpKind::kConcatenation ? 2 * d : d;
}

std::vector<float> PairwiseOp(std::span<const float> u,
                              std::span<const float> v, PairwiseOpKind op) {
  if (u.size() != v.size()) {
    throw Error("pairwise op on vectors of dimension " +
                std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
  const std::size_t d = u.size();
  std::vector<float> out(op == PairwiseOpKind::kConcatenation ? 2 * d : d);
  for (std::size_t i = 0; i < d; ++i) {
    switch (op) {
      case PairwiseOpKind::kL1:
        out[i] = std::abs(u[i] - v[i]);
        break;
      case PairwiseOpKind::kL2:
        out[i] = (u[i] - v[i]) * (u[i] - v[i]);
        break;
      case PairwiseOpKind::kHadamard:
        out[i] = u[i] * v[i];
        break;
      case PairwiseOpKind::kAverage:
        out[i] = (u[i] + v[i]) / 2.0f;
        break;
      case PairwiseOpKind::kConcatenation:
        out[i] = u[i];
        out[d + i] = v[i];
        break;
    }
  }
  return out;
}

std::vector<float> PairwiseOp(const EmbeddingVector& u, const EmbeddingVector& v,
                              PairwiseOpKind op) {
  return PairwiseOp(std::span<const float>(u.values()),
                    std::span<const float>(v.values()), op);
}

std::string_view AttackKindName(AttackKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

AttackKind AttackKindFromName(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<AttackKind>(i);
  }
  throw Error("unknown attack kind '" + std::string(name) + "'");
}

bool IsPixelLevel(AttackKind kind) {
  return kind == AttackKind::kIP || kind == AttackKind::kIIP;
}

void AttackFeature::Validate() const {
  const std::string name(AttackKindName(kind));
  if (IsPixelLevel(kind)) {
    if (!pixel_payload || !vector_payload.empty()) {
      throw Error(name + " feature must carry exactly a pixel payload");
    }
    const auto& p = *pixel_payload;
    if (static_cast<std::size_t>(p.channels) * p.height * p.width !=
            p.values.size() ||
        p.values.empty()) {
      throw Error(name + " pixel payload has an inconsistent shape");
    }
    return;
  }
  const std::size_t want = kind == AttackKind::kIV ? 3 : 1;
  if (pixel_payload || vector_payload.size() != want) {
    throw Error(name + " feature must carry " + std::to_string(want) +
                " vector payload(s)");
  }
  for (const auto& v : vector_payload) {
    if (v.empty()) throw Error(name + " feature has an empty vector");
  }
}

AttackFeature FeatureIP(const ImageSample& generated) {
  AttackFeature f;
  f.kind = AttackKind::kIP;
  f.pixel_payload = PixelMap{
      generated.channels(), generated.height(), generated.width(),
      std::vector<float>(generated.pixels().begin(), generated.pixels().end())};
  f.generated_id = generated.id();
  return f;
}

AttackFeature FeatureIS(const ImageSample& generated, const Embedder& emb) {
  AttackFeature f;
  f.kind = AttackKind::kIS;
  f.vector_payload.push_back(Values(emb.EmbedImage(generated)));
  f.generated_id = generated.id();
  return f;
}

AttackFeature FeatureIIP(const ImageSample& query, const ImageSample& generated) {
  if (!query.SameShape(generated)) {
    throw Error("II-P needs query and generated images of the same shape");
  }
  const auto q = query.pixels();
  const auto g = generated.pixels();
  PixelMap map{query.channels(), query.height(), query.width(),
               std::vector<float>(q.size())};
  for (std::size_t i = 0; i < q.size(); ++i) map.values[i] = std::abs(q[i] - g[i]);
  AttackFeature f;
  f.kind = AttackKind::kIIP;
  f.pixel_payload = std::move(map);
  f.query_id = query.id();
  f.generated_id = generated.id();
  return f;
}

AttackFeature FeatureIIS(const ImageSample& query, const ImageSample& generated,
                         const Embedder& emb, PairwiseOpKind op) {
  return VectorFeature(
      AttackKind::kIIS,
      PairwiseOp(emb.EmbedImage(query), emb.EmbedImage(generated), op), query,
      generated);
}

AttackFeature FeatureIII(const ImageSample& generated, const Caption& caption,
                         const Embedder& emb, PairwiseOpKind op) {
  AttackFeature f;
  f.kind = AttackKind::kIII;
  f.vector_payload.push_back(
      PairwiseOp(emb.EmbedImage(generated), emb.EmbedText(caption), op));
  f.generated_id = generated.id();
  return f;
}

AttackFeature FeatureIV(const ImageSample& query, const ImageSample& generated,
                        const Caption& caption, const Embedder& emb,
                        PairwiseOpKind op_same, PairwiseOpKind op_cross) {
  const std::vector<AttackKind> kinds = {AttackKind::kIV};
  return ExtractFeatures(kinds, query, generated, caption, emb,
                         {op_same, op_cross})
      .front();
}

std::vector<AttackFeature> ExtractFeatures(std::span<const AttackKind> kinds,
                                           const ImageSample& query,
                                           const ImageSample& generated,
                                           const Caption& caption,
                                           const Embedder& emb,
                                           const FeatureOps& ops) {
  std::optional<EmbeddingVector> eq, eg, et;
  auto gen = [&]() -> const EmbeddingVector& {
    if (!eg) eg = emb.EmbedImage(generated);
    return *eg;
  };
  auto same = [&] {
    if (!eq) eq = emb.EmbedImage(query);
    return PairwiseOp(*eq, gen(), ops.same);
  };
  auto cross = [&] {
    if (!et) et = emb.EmbedText(caption);
    return PairwiseOp(gen(), *et, ops.cross);
  };
  std::vector<AttackFeature> out;
  for (const AttackKind kind : kinds) {
    AttackFeature f;
    switch (kind) {
      case AttackKind::kIP:
        f = FeatureIP(generated);
        break;
      case AttackKind::kIIP:
        f = FeatureIIP(query, generated);
        break;
      case AttackKind::kIS:
        f = VectorFeature(kind, Values(gen()), query, generated);
        f.query_id.clear();
        break;
      case AttackKind::kIIS:
        f = VectorFeature(kind, same(), query, generated);
        break;
      case AttackKind::kIII:
        f = VectorFeature(kind, cross(), query, generated);
        f.query_id.clear();
        break;
      case AttackKind::kIV:
        f = VectorFeature(kind, Values(gen()), query, generated);
        f.vector_payload.push_back(same());
        f.vector_payload.push_back(cross());
        break;
    }
    out.push_back(std::move(f));
  }
  return out;
}

nlohmann::json FeatureToJson(const AttackFeature& f) {
  f.Validate();
  nlohmann::json j;
  j["kind"] = AttackKindName(f.kind);
  if (f.pixel_payload) {
    const auto& p = *f.pixel_payload;
    j["pixels"] = {{"channels", p.channels},
                   {"height", p.height},
                   {"width", p.width},
                   {"data", EncodeFloat32(p.values)}};
  }
  if (!f.vector_payload.empty()) {
    nlohmann::json vs = nlohmann::json::array();
    for (const auto& v : f.vector_payload) vs.push_back(EncodeFloat32(v));
    j["vectors"] = std::move(vs);
  }
  j["label"] = f.label ? nlohmann::json(f.label == MembershipLabel::kMember
                                            ? "member"
                                            : "nonmember")
                       : nlohmann::json(nullptr);
  j["query_id"] = f.query_id;
  j["generated_id"] = f.generated_id;
  return j;
}

AttackFeature FeatureFromJson(const nlohmann::json& j) {
  AttackFeature f;
  try {
    f.kind = AttackKindFromName(j.at("kind").get<std::string>());
    if (j.contains("pixels")) {
      const auto& p = j.at("pixels");
      f.pixel_payload = PixelMap{p.at("channels").get<int>(),
                                 p.at("height").get<int>(),
                                 p.at("width").get<int>(),
                                 DecodeFloat32(p.at("data").get<std::string>())};
    }
    if (j.contains("vectors")) {
      for (const auto& v : j.at("vectors")) {
        f.vector_payload.push_back(DecodeFloat32(v.get<std::string>()));
      }
    }
    const auto& label = j.at("label");
    if (!label.is_null()) {
      const auto s = label.get<std::string>();
      if (s != "member" && s != "nonmember") {
        throw Error("bad feature label '" + s + "'");
      }
      f.label = s == "member" ? MembershipLabel::kMember
                              : MembershipLabel::kNonmember;
    }
    f.query_id = j.at("query_id").get<std::string>();
    f.generated_id = j.at("generated_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed feature record: ") + e.what());
  }
  f.Validate();
  return f;
}

void WriteFeatureCache(const std::filesystem::path& path,
                       std::span<const AttackFeature> features) {
  std::string text;
  for (const auto& f : features) text += FeatureToJson(f).dump() + "\n";
  WriteFileBytes(path, text);
}

std::vector<AttackFeature> ReadFeatureCache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open feature cache " + path.string());
  std::vector<AttackFeature> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " +
                  e.what());
    }
    out.push_back(FeatureFromJson(j));
  }
  return out;
}

}  // namespace t2i_mia
