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

#ifndef T2I_MIA_TARGETMODELS_SEQ2SEQ_H_
#define T2I_MIA_TARGETMODELS_SEQ2SEQ_H_

#include <array>
#include <memory>
#include <vector>

#include "t2i_mia/core/checkpoint.h"
#include "t2i_mia/core/rng.h"
#include "t2i_mia/core/types.h"
#include "t2i_mia/nn/layers.h"
#include "t2i_mia/synthdata/dataset.h"
#include "t2i_mia/targetmodels/diffusion.h"
#include "t2i_mia/targetmodels/target.h"

namespace t2i_mia {

// 4 levels per channel; token = 16 * r + 4 * g + b.
inline constexpr int kCodebookLevels = 4;
inline constexpr int kCodebookSize =
    kCodebookLevels * kCodebookLevels * kCodebookLevels;
// Largest per-channel distance from any value in [0, 1] to its nearest level.
inline constexpr double kQuantizationRadius = 1.0 / 6.0;

std::array<float, 3> Codeword(int token);

// Block-mean colors of a grid x grid tiling, each mapped to its nearest
// codeword. Tokens are in raster order. Throws Error unless grid divides
// both image dimensions.
std::vector<int> QuantizeImage(const ImageSample& image, int grid);

// Renders each token as a uniform block of a 32x32 image. Throws Error when
// tokens.size() != grid * grid or a token is outside the codebook.
ImageSample Detokenize(std::span<const int> tokens, int grid);

struct Seq2SeqOptions {
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-3;
  int cond_dim = 32;
  int grid = 8;
  int hidden = 128;

  nlohmann::json ToJson() const;
  static Seq2SeqOptions FromJson(const nlohmann::json& j);
};

// Autoregressive token decoder. Each position sees the caption embedding,
// its own position, the previous token and the token directly above.
class Seq2SeqModel : public TrainableTarget {
 public:
  Seq2SeqModel(const Seq2SeqOptions& options, RngSeed init_seed);

  TargetFamily family() const override { return TargetFamily::kSeq2Seq; }
  int cond_dim() const override { return options_.cond_dim; }
  const Seq2SeqOptions& options() const { return options_; }

  // Greedy decoding; the request seed only breaks exact ties.
  ImageSample Generate(const GenerationRequest& request) const override;

  // Sum of token log-probabilities under teacher forcing.
  double LogLikelihood(std::span<const int> tokens, const Caption& caption) const;

  void Train(const PairedDataset& data, RngSeed seed, TrainReport* report);

  Checkpoint ToCheckpoint() const override;
  static std::shared_ptr<Seq2SeqModel> FromCheckpoint(const Checkpoint& ckpt);

 private:
  struct Cache {
    nn::Matrix<float> input, a1, h1, a2, h2;
  };

  // Columns of the decoder input for every position of each sequence.
  nn::Matrix<float> Inputs(const std::vector<std::vector<int>>& sequences,
                           const std::vector<std::vector<int>>& captions) const;
  nn::Matrix<float> Forward(const nn::Matrix<float>& input, Cache* cache) const;
  double MeanLoss(const std::vector<std::vector<int>>& sequences,
                  const std::vector<std::vector<int>>& captions) const;
  nn::ParameterRefs<float> Params();

  Seq2SeqOptions options_;
  nn::MeanEmbedding<float> words_;
  nn::Embedding<float> position_;
  nn::Embedding<float> previous_;
  nn::Embedding<float> above_;
  nn::Linear<float> l1_, l2_, head_;
};

TargetModelHandle TrainSeq2SeqTarget(const PairedDataset& data,
                                     const Seq2SeqOptions& options,
                                     RngSeed seed,
                                     TrainReport* report = nullptr);

TargetModelHandle UntrainedSeq2SeqTarget(const Seq2SeqOptions& options,
                                         RngSeed seed);

}  // namespace t2i_mia

#endif  // T2I_MIA_TARGETMODELS_SEQ2SEQ_H_
