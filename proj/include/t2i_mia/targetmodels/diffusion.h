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

#ifndef T2I_MIA_TARGETMODELS_DIFFUSION_H_
#define T2I_MIA_TARGETMODELS_DIFFUSION_H_

#include <memory>
#include <vector>

#include "t2i_mia/core/checkpoint.h"
#include "t2i_mia/core/rng.h"
#include "t2i_mia/core/types.h"
#include "t2i_mia/synthdata/dataset.h"
#include "t2i_mia/targetmodels/denoiser.h"
#include "t2i_mia/targetmodels/target.h"

namespace t2i_mia {

struct DiffusionOptions {
  int epochs = 400;
  int batch_size = 64;
  double learning_rate = 1e-3;
  int timesteps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int cond_dim = 32;

  nlohmann::json ToJson() const;
  static DiffusionOptions FromJson(const nlohmann::json& j);
};

// Conditional denoiser that predicts the clean image x0 from (x_t, t,
// caption), sampled with DDIM (eta = 0). Pixels are mapped to [-1, 1]
// internally.
class DiffusionModel : public TrainableTarget {
 public:
  DiffusionModel(const DiffusionOptions& options, RngSeed init_seed);
  DiffusionModel(const DiffusionModel&) = delete;
  DiffusionModel& operator=(const DiffusionModel&) = delete;

  TargetFamily family() const override { return TargetFamily::kDiffusion; }
  int cond_dim() const override { return options_.cond_dim; }
  const DiffusionOptions& options() const { return options_; }

  // x_T is drawn from the request seed; sampling is deterministic given
  // (parameters, caption, steps, seed).
  ImageSample Generate(const GenerationRequest& request) const override;

  // Noises `image` to the last timestep with seeded noise, then runs the
  // sampler for `steps` iterations from there.
  ImageSample Reconstruct(const ImageSample& image, const Caption& caption,
                          int steps, RngSeed seed) const;

  // Mean denoising loss over (image, caption) pairs at seeded timesteps.
  double ProbeLoss(const PairedDataset& data, RngSeed seed) const;

  void Train(const PairedDataset& data, RngSeed seed, TrainReport* report);

  Checkpoint ToCheckpoint() const override;
  static std::shared_ptr<DiffusionModel> FromCheckpoint(const Checkpoint& ckpt);

  std::size_t parameter_count() const;

 private:
  ImageSample Sample(std::vector<float> x, const Caption& caption,
                     int steps) const;

  DiffusionOptions options_;
  std::vector<double> alpha_bar_;
  DenoiserNet<float> net_;
};

// Trains on `data` for options.epochs epochs. Throws Error naming the epoch
// if the loss becomes non-finite.
TargetModelHandle TrainDiffusionTarget(const PairedDataset& data,
                                       const DiffusionOptions& options,
                                       RngSeed seed,
                                       TrainReport* report = nullptr);

// Freshly initialized parameters, no training.
TargetModelHandle UntrainedDiffusionTarget(const DiffusionOptions& options,
                                           RngSeed seed);

}  // namespace t2i_mia

#endif  // T2I_MIA_TARGETMODELS_DIFFUSION_H_
