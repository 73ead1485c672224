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

#include "t2i_mia/synthdata/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "json.hpp"
#include "t2i_mia/core/error.h"
#include "t2i_mia/core/serialize.h"
#include "t2i_mia/synthdata/scene.h"

namespace t2i_mia {
namespace {

std::string SampleId(const std::string& name, int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", index);
  return name + "-" + buf;
}

std::vector<int> Iota(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// Label-stratified half split over n members and n non-members.
AttackDataset SplitByHalf(std::vector<ImageSample> members,
                          std::vector<ImageSample> nonmembers, RngSeed seed) {
  const int n = static_cast<int>(members.size());
  std::vector<int> m = Iota(n);
  std::vector<int> nm = Iota(n);
  Rng(DeriveSeed(seed, "split-members")).Shuffle(m.begin(), m.end());
  Rng(DeriveSeed(seed, "split-nonmembers")).Shuffle(nm.begin(), nm.end());
  // Members put floor(n/2) in train and non-members ceil(n/2), so both
  // splits have exactly n samples and each is balanced within one.
  const int m_train = n / 2;
  const int nm_train = n - n / 2;
  std::vector<int> train, test;
  for (int i = 0; i < n; ++i) (i < m_train ? train : test).push_back(m[i]);
  for (int i = 0; i < n; ++i) {
    (i < nm_train ? train : test).push_back(n + nm[i]);
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return AttackDataset(std::move(members), std::move(nonmembers),
                       std::move(train), std::move(test));
}

std::vector<ImageSample> ChooseSubset(std::span<const ImageSample> images,
                                      int k, RngSeed seed) {
  std::vector<int> idx = Iota(static_cast<int>(images.size()));
  Rng(seed).Shuffle(idx.begin(), idx.end());
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  std::vector<ImageSample> out;
  out.reserve(idx.size());
  for (const int i : idx) out.push_back(images[static_cast<std::size_t>(i)]);
  return out;
}

nlohmann::json SceneToJson(const SceneSpec& s) {
  return {{"shape", ShapeName(s.shape)},
          {"color", ColorName(s.color)},
          {"size", SizeName(s.size)},
          {"position", PositionName(s.position)},
          {"background", BackgroundName(s.background)}};
}

}  // namespace

std::vector<ImageSample> PairedDataset::Images() const {
  std::vector<ImageSample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.image);
  return out;
}

void PairedDataset::Validate() const {
  std::set<std::string> ids;
  for (const auto& p : pairs) {
    if (!ids.insert(p.image.id()).second) {
      throw Error("duplicate sample id '" + p.image.id() + "' in " + name);
    }
    if (!p.image.scene()) {
      throw Error("sample '" + p.image.id() + "' has no scene");
    }
    if (!(p.caption == CanonicalCaption(*p.image.scene()))) {
      throw Error("sample '" + p.image.id() + "' has a non-canonical caption");
    }
  }
}

PairedDataset DatasetFromScenes(std::string name, RngSeed seed,
                                std::span<const SceneSpec> scenes,
                                Origin origin) {
  PairedDataset ds{std::move(name), seed, {}};
  ds.pairs.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    ds.pairs.push_back(
        {CanonicalCaption(scenes[i]),
         RenderSample(scenes[i], SampleId(ds.name, static_cast<int>(i)),
                      origin)});
  }
  return ds;
}

PairedDataset GenerateDataset(int n, RngSeed seed,
                              const GenerateOptions& options) {
  if (n < 1) throw Error("dataset size must be at least 1");
  if (options.unique && n > kNumSceneSpecs) {
    throw Error("cannot draw " + std::to_string(n) +
                " unique scenes from a space of " +
                std::to_string(kNumSceneSpecs));
  }
  Rng rng(DeriveSeed(seed, "generate-dataset"));
  std::vector<SceneSpec> scenes;
  scenes.reserve(static_cast<std::size_t>(n));
  if (options.unique) {
    std::vector<int> all = Iota(kNumSceneSpecs);
    rng.Shuffle(all.begin(), all.end());
    for (int i = 0; i < n; ++i) scenes.push_back(SceneFromIndex(all[i]));
  } else {
    for (int i = 0; i < n; ++i) {
      scenes.push_back(SceneFromIndex(static_cast<int>(rng.Index(kNumSceneSpecs))));
    }
  }
  return DatasetFromScenes(options.name, seed, scenes, options.origin);
}

std::vector<std::vector<SceneSpec>> PartitionSceneSpace(
    RngSeed seed, std::span<const int> sizes) {
  int total = 0;
  for (const int s : sizes) {
    if (s < 0) throw Error("partition sizes must be non-negative");
    total += s;
  }
  if (total > kNumSceneSpecs) {
    throw Error("partition needs " + std::to_string(total) +
                " scenes but the space has " + std::to_string(kNumSceneSpecs));
  }
  std::vector<int> all = Iota(kNumSceneSpecs);
  Rng(DeriveSeed(seed, "partition-scenes")).Shuffle(all.begin(), all.end());
  std::vector<std::vector<SceneSpec>> out;
  std::size_t pos = 0;
  for (const int s : sizes) {
    std::vector<SceneSpec> block;
    for (int i = 0; i < s; ++i) block.push_back(SceneFromIndex(all[pos++]));
    out.push_back(std::move(block));
  }
  return out;
}

PairedDataset AttributeFilter(const PairedDataset& dataset,
                              const ImageScorer& scorer, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error("filter threshold must be in [0, 1]");
  }
  PairedDataset out{dataset.name, dataset.seed, {}};
  for (const auto& p : dataset.pairs) {
    if (scorer(p.image) >= threshold) out.pairs.push_back(p);
  }
  return out;
}

AttackDataset::AttackDataset(std::vector<ImageSample> members,
                             std::vector<ImageSample> nonmembers,
                             std::vector<int> train, std::vector<int> test)
    : members_(std::move(members)),
      nonmembers_(std::move(nonmembers)),
      train_(std::move(train)),
      test_(std::move(test)) {
  if (members_.size() != nonmembers_.size()) {
    throw Error("attack dataset must be balanced");
  }
  const int n = size();
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (const auto* split : {&train_, &test_}) {
    for (const int i : *split) {
      if (i < 0 || i >= n) throw Error("split index out of range");
      if (seen[static_cast<std::size_t>(i)]++) {
        throw Error("train and test splits overlap");
      }
    }
  }
  if (static_cast<int>(train_.size() + test_.size()) != n) {
    throw Error("splits do not cover the attack dataset");
  }
}

const ImageSample& AttackDataset::image(int index) const {
  return index < per_class()
             ? members_.at(static_cast<std::size_t>(index))
             : nonmembers_.at(static_cast<std::size_t>(index - per_class()));
}

MembershipLabel AttackDataset::label(int index) const {
  return index < per_class() ? MembershipLabel::kMember
                             : MembershipLabel::kNonmember;
}

AttackDataset BuildAuxiliary(std::span<const ImageSample> members,
                             std::span<const ImageSample> local_nonmembers,
                             RngSeed seed) {
  if (members.empty() || local_nonmembers.empty()) {
    throw Error("auxiliary dataset needs non-empty member and non-member sets");
  }
  const int k = static_cast<int>(std::min(members.size(), local_nonmembers.size()));
  return SplitByHalf(ChooseSubset(members, k, DeriveSeed(seed, "downsample-m")),
                     ChooseSubset(local_nonmembers, k,
                                  DeriveSeed(seed, "downsample-nm")),
                     seed);
}

AttackDataset SubsampleFraction(const AttackDataset& aux, double fraction,
                                RngSeed seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error("fraction must be in (0, 1]");
  }
  const int n = aux.per_class();
  // The epsilon keeps products such as 0.3 * 10 from rounding up to 4.
  const int k = static_cast<int>(std::ceil(fraction * n - 1e-9));
  if (k < 2) {
    throw Error("fraction " + std::to_string(fraction) + " leaves " +
                std::to_string(k) + " samples per class; need at least 2");
  }
  return SplitByHalf(ChooseSubset(aux.members(), k, DeriveSeed(seed, "frac-m")),
                     ChooseSubset(aux.nonmembers(), k,
                                  DeriveSeed(seed, "frac-nm")),
                     seed);
}

std::filesystem::path WriteDatasetManifest(const PairedDataset& dataset,
                                           const std::filesystem::path& dir) {
  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["name"] = dataset.name;
  manifest["seed"] = dataset.seed.value;
  manifest["size"] = dataset.size();
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& p : dataset.pairs) {
    const std::string rel = "images/" + p.image.id() + ".t2i";
    WriteFileBytes(dir / rel, SerializeSample(p.image));
    nlohmann::json rec{{"id", p.image.id()},
                       {"caption", p.caption.text()},
                       {"image", rel},
                       {"origin", OriginName(p.image.origin())}};
    if (p.image.scene()) rec["scene"] = SceneToJson(*p.image.scene());
    samples.push_back(std::move(rec));
  }
  manifest["samples"] = std::move(samples);
  const auto path = dir / "manifest.json";
  WriteFileBytes(path, manifest.dump(2) + "\n");
  return path;
}

PairedDataset ReadDatasetManifest(const std::filesystem::path& manifest_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(ReadFileBytes(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad dataset manifest " + manifest_path.string() + ": " +
                e.what());
  }
  const auto dir = manifest_path.parent_path();
  PairedDataset ds{manifest.at("name").get<std::string>(),
                   RngSeed{manifest.at("seed").get<std::uint64_t>()},
                   {}};
  for (const auto& rec : manifest.at("samples")) {
    ImageSample image = DeserializeSample(
        ReadFileBytes(dir / rec.at("image").get<std::string>()));
    Caption caption = Caption::Parse(rec.at("caption").get<std::string>());
    ds.pairs.push_back({std::move(caption), std::move(image)});
  }
  if (ds.size() != manifest.at("size").get<int>()) {
    throw Error("manifest size disagrees with its sample list");
  }
  ds.Validate();
  return ds;
}

}  // namespace t2i_mia
