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

#include "t2i_mia/targetmodels/target.h"

#include <string>

#include "t2i_mia/core/error.h"
#include "t2i_mia/targetmodels/diffusion.h"
#include "t2i_mia/targetmodels/seq2seq.h"

namespace t2i_mia {

std::string_view TargetFamilyName(TargetFamily family) {
  switch (family) {
    case TargetFamily::kDiffusion:
      return "diffusion";
    case TargetFamily::kSeq2Seq:
      return "seq2seq";
  }
  throw Error("unknown target family");
}

TargetFamily TargetFamilyFromName(std::string_view name) {
  if (name == "diffusion") return TargetFamily::kDiffusion;
  if (name == "seq2seq") return TargetFamily::kSeq2Seq;
  throw Error("unknown target family '" + std::string(name) + "'");
}

TargetModelHandle::TargetModelHandle(
    std::shared_ptr<const TrainableTarget> model, nlohmann::json train_manifest)
    : model_(std::move(model)), train_manifest_(std::move(train_manifest)) {
  if (!model_) throw Error("target handle needs a model");
}

ImageSample TargetModelHandle::Generate(const GenerationRequest& request) const {
  if (request.steps < 1 || request.steps > kMaxDenoisingSteps) {
    throw Error("denoising steps must be in [1, 1000], got " +
                std::to_string(request.steps));
  }
  return model_->Generate(request);
}

void TargetModelHandle::Save(const std::filesystem::path& path) const {
  Checkpoint ckpt = model_->ToCheckpoint();
  ckpt.train_manifest() = train_manifest_;
  ckpt.Save(path);
}

TargetModelHandle TargetModelHandle::Load(const std::filesystem::path& path) {
  const Checkpoint ckpt = Checkpoint::Load(path);
  std::shared_ptr<const TrainableTarget> model;
  switch (TargetFamilyFromName(ckpt.family())) {
    case TargetFamily::kDiffusion:
      model = DiffusionModel::FromCheckpoint(ckpt);
      break;
    case TargetFamily::kSeq2Seq:
      model = Seq2SeqModel::FromCheckpoint(ckpt);
      break;
  }
  return TargetModelHandle(std::move(model), ckpt.train_manifest());
}

}  // namespace t2i_mia
