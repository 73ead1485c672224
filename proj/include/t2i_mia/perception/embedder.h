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

#ifndef T2I_MIA_PERCEPTION_EMBEDDER_H_
#define T2I_MIA_PERCEPTION_EMBEDDER_H_

#include <filesystem>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "t2i_mia/core/rng.h"
#include "t2i_mia/core/types.h"
#include "t2i_mia/perception/two_tower.h"
#include "t2i_mia/synthdata/dataset.h"
#include "t2i_mia/targetmodels/target.h"

namespace t2i_mia {

struct EmbedderOptions {
  int dim = kDefaultEmbeddingDim;
  int epochs = 100;
  int batch_size = 128;
  double learning_rate = 1e-3;
  double temperature = 0.07;

  nlohmann::json ToJson() const;
  static EmbedderOptions FromJson(const nlohmann::json& j);
};

// A trained two-tower image/text embedder. Immutable; every embedding is
// computed one input at a time so results never depend on batching.
class Embedder {
 public:
  Embedder(const EmbedderOptions& options, RngSeed init_seed);

  int dim() const { return options_.dim; }
  const EmbedderOptions& options() const { return options_; }
  const nlohmann::json& train_manifest() const { return train_manifest_; }

  EmbeddingVector EmbedImage(const ImageSample& image) const;
  // Caption tokens are validated on construction of the Caption.
  EmbeddingVector EmbedText(const Caption& caption) const;

  void Train(const PairedDataset& data, RngSeed seed, TrainReport* report);

  void Save(const std::filesystem::path& path) const;
  static Embedder Load(const std::filesystem::path& path);

  // Always throws Error: no adapter ships in this build.
  static Embedder ExternalAdapter(std::string_view name);

 private:
  EmbedderOptions options_;
  std::shared_ptr<TwoTowerNet<float>> net_;
  nlohmann::json train_manifest_ = nlohmann::json::object();
};

// Contrastive training on matched (caption, image) pairs. The data must be
// disjoint from the target model's member set. Throws Error if the data has
// fewer than 2 * batch_size pairs or the loss diverges.
Embedder TrainTwoTower(const PairedDataset& data, const EmbedderOptions& options,
                       RngSeed seed, TrainReport* report = nullptr);

}  // namespace t2i_mia

#endif  // T2I_MIA_PERCEPTION_EMBEDDER_H_
