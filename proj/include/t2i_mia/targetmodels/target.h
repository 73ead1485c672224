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

#ifndef T2I_MIA_TARGETMODELS_TARGET_H_
#define T2I_MIA_TARGETMODELS_TARGET_H_

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "t2i_mia/core/checkpoint.h"
#include "t2i_mia/core/rng.h"
#include "t2i_mia/core/types.h"

namespace t2i_mia {

enum class TargetFamily : std::uint8_t { kDiffusion, kSeq2Seq };

std::string_view TargetFamilyName(TargetFamily family);
TargetFamily TargetFamilyFromName(std::string_view name);

inline constexpr int kMaxDenoisingSteps = 1000;

struct TrainReport {
  // Loss on a fixed probe set before the first and after the last epoch.
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;
};

struct GenerationRequest {
  Caption caption;
  // Sampler iterations; ignored by the seq2seq family.
  int steps = 50;
  RngSeed seed{0};
};

// The only surface an attacker sees: caption in, image out.
class TextToImageModel {
 public:
  virtual ~TextToImageModel() = default;
  virtual TargetFamily family() const = 0;
  virtual ImageSample Generate(const GenerationRequest& request) const = 0;
};

// Implemented by the trained models; never handed to attack code.
class TrainableTarget : public TextToImageModel {
 public:
  virtual int cond_dim() const = 0;
  virtual Checkpoint ToCheckpoint() const = 0;
};

// Owns a trained target and exposes generation only.
class TargetModelHandle : public TextToImageModel {
 public:
  TargetModelHandle(std::shared_ptr<const TrainableTarget> model,
                    nlohmann::json train_manifest);

  TargetFamily family() const override { return model_->family(); }
  // Throws Error for steps outside [1, kMaxDenoisingSteps].
  ImageSample Generate(const GenerationRequest& request) const override;

  int cond_dim() const { return model_->cond_dim(); }
  const nlohmann::json& train_manifest() const { return train_manifest_; }

  void Save(const std::filesystem::path& path) const;
  static TargetModelHandle Load(const std::filesystem::path& path);

 private:
  std::shared_ptr<const TrainableTarget> model_;
  nlohmann::json train_manifest_;
};

// Counts every generation forwarded to the wrapped target.
class CountingTarget : public TextToImageModel {
 public:
  explicit CountingTarget(const TextToImageModel& target) : target_(target) {}

  TargetFamily family() const override { return target_.family(); }
  ImageSample Generate(const GenerationRequest& request) const override {
    ++count_;
    return target_.Generate(request);
  }

  long count() const { return count_.load(); }

 private:
  const TextToImageModel& target_;
  mutable std::atomic<long> count_{0};
};

}  // namespace t2i_mia

#endif  // T2I_MIA_TARGETMODELS_TARGET_H_
