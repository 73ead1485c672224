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

#include "t2i_mia/targetmodels/seq2seq.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "t2i_mia/core/error.h"
#include "t2i_mia/core/vocabulary.h"
#include "t2i_mia/nn/optim.h"

namespace t2i_mia {
namespace {

using M = nn::Matrix<float>;

constexpr int kBos = kCodebookSize;
constexpr int kTokenEmbDim = 16;

int NearestLevel(double v) {
  const double scaled = std::clamp(v, 0.0, 1.0) * (kCodebookLevels - 1);
  // Ties (exact midpoints) go to the lower level.
  const int lo = static_cast<int>(std::floor(scaled));
  return (scaled - lo > 0.5 && lo + 1 < kCodebookLevels) ? lo + 1 : lo;
}

void CheckGrid(int grid) {
  if (grid < 1 || kImageHeight % grid != 0 || kImageWidth % grid != 0) {
    throw Error("grid " + std::to_string(grid) +
                " does not divide the image size");
  }
}


}  // namespace

std::array<float, 3> Codeword(int token) {
  if (token < 0 || token >= kCodebookSize) {
    throw Error("token " + std::to_string(token) + " outside the codebook");
  }
  const float step = 1.0f / (kCodebookLevels - 1);
  return {step * static_cast<float>(token / 16),
          step * static_cast<float>(token / 4 % 4),
          step * static_cast<float>(token % 4)};
}

std::vector<int> QuantizeImage(const ImageSample& image, int grid) {
  CheckGrid(grid);
  if (image.height() % grid != 0 || image.width() % grid != 0) {
    throw Error("grid does not divide the image size");
  }
  const int bh = image.height() / grid, bw = image.width() / grid;
  std::vector<int> tokens;
  tokens.reserve(static_cast<std::size_t>(grid * grid));
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      int token = 0;
      for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (int y = gy * bh; y < (gy + 1) * bh; ++y) {
          for (int x = gx * bw; x < (gx + 1) * bw; ++x) sum += image.at(c, y, x);
        }
        token = token * kCodebookLevels + NearestLevel(sum / (bh * bw));
      }
      tokens.push_back(token);
    }
  }
  return tokens;
}

ImageSample Detokenize(std::span<const int> tokens, int grid) {
  CheckGrid(grid);
  if (static_cast<int>(tokens.size()) != grid * grid) {
    throw Error("expected " + std::to_string(grid * grid) + " tokens, got " +
                std::to_string(tokens.size()));
  }
  const int bh = kImageHeight / grid, bw = kImageWidth / grid;
  std::vector<float> px(static_cast<std::size_t>(kImageChannels) *
                        kImageHeight * kImageWidth);
  for (int y = 0; y < kImageHeight; ++y) {
    for (int x = 0; x < kImageWidth; ++x) {
      const auto rgb = Codeword(tokens[static_cast<std::size_t>(
          (y / bh) * grid + x / bw)]);
      for (int c = 0; c < 3; ++c) {
        px[(static_cast<std::size_t>(c) * kImageHeight + y) * kImageWidth + x] =
            rgb[static_cast<std::size_t>(c)];
      }
    }
  }
  return ImageSample("", Origin::kGenerated, kImageHeight, kImageWidth,
                     kImageChannels, std::move(px));
}

nlohmann::json Seq2SeqOptions::ToJson() const {
  return {{"epochs", epochs},       {"batch_size", batch_size},
          {"learning_rate", learning_rate}, {"cond_dim", cond_dim},
          {"grid", grid},           {"hidden", hidden}};
}

Seq2SeqOptions Seq2SeqOptions::FromJson(const nlohmann::json& j) {
  Seq2SeqOptions o;
  o.epochs = j.value("epochs", o.epochs);
  o.batch_size = j.value("batch_size", o.batch_size);
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.cond_dim = j.value("cond_dim", o.cond_dim);
  o.grid = j.value("grid", o.grid);
  o.hidden = j.value("hidden", o.hidden);
  return o;
}

Seq2SeqModel::Seq2SeqModel(const Seq2SeqOptions& options, RngSeed init_seed)
    : options_(options) {
  CheckGrid(options.grid);
  Rng rng(init_seed);
  const int len = options.grid * options.grid;
  words_ = nn::MeanEmbedding<float>("words", Vocabulary::size(),
                                    options.cond_dim, rng);
  position_ = nn::Embedding<float>("position", len, kTokenEmbDim, rng);
  previous_ = nn::Embedding<float>("previous", kCodebookSize + 1, kTokenEmbDim, rng);
  above_ = nn::Embedding<float>("above", kCodebookSize + 1, kTokenEmbDim, rng);
  l1_ = nn::Linear<float>("l1", options.cond_dim + 3 * kTokenEmbDim,
                          options.hidden, rng);
  l2_ = nn::Linear<float>("l2", options.hidden, options.hidden, rng);
  head_ = nn::Linear<float>("head", options.hidden, kCodebookSize, rng);
}

nn::ParameterRefs<float> Seq2SeqModel::Params() {
  nn::ParameterRefs<float> p;
  words_.Collect(p);
  position_.Collect(p);
  previous_.Collect(p);
  above_.Collect(p);
  l1_.Collect(p);
  l2_.Collect(p);
  head_.Collect(p);
  return p;
}

namespace {

struct ContextIds {
  std::vector<int> position, previous, above;
};

ContextIds Contexts(const std::vector<std::vector<int>>& sequences, int grid) {
  ContextIds ids;
  for (const auto& seq : sequences) {
    for (int i = 0; i < static_cast<int>(seq.size()); ++i) {
      ids.position.push_back(i);
      ids.previous.push_back(i > 0 ? seq[static_cast<std::size_t>(i - 1)] : kBos);
      ids.above.push_back(i >= grid ? seq[static_cast<std::size_t>(i - grid)]
                                    : kBos);
    }
  }
  return ids;
}

}  // namespace

M Seq2SeqModel::Inputs(const std::vector<std::vector<int>>& sequences,
                       const std::vector<std::vector<int>>& captions) const {
  const int len = options_.grid * options_.grid;
  const M cond = words_.Forward(captions);
  const ContextIds ids = Contexts(sequences, options_.grid);
  const Eigen::Index cols = static_cast<Eigen::Index>(ids.position.size());
  M input(options_.cond_dim + 3 * kTokenEmbDim, cols);
  for (Eigen::Index j = 0; j < cols; ++j) input.col(j).head(options_.cond_dim) = cond.col(j / len);
  input.middleRows(options_.cond_dim, kTokenEmbDim) = position_.Forward(ids.position);
  input.middleRows(options_.cond_dim + kTokenEmbDim, kTokenEmbDim) =
      previous_.Forward(ids.previous);
  input.bottomRows(kTokenEmbDim) = above_.Forward(ids.above);
  return input;
}

M Seq2SeqModel::Forward(const M& input, Cache* cache) const {
  Cache local;
  Cache& c = cache != nullptr ? *cache : local;
  c.input = input;
  c.a1 = l1_.Forward(input);
  c.h1 = nn::Silu(c.a1);
  c.a2 = l2_.Forward(c.h1);
  c.h2 = nn::Silu(c.a2);
  return head_.Forward(c.h2);
}

double Seq2SeqModel::MeanLoss(const std::vector<std::vector<int>>& sequences,
                              const std::vector<std::vector<int>>& captions) const {
  const M logits = Forward(Inputs(sequences, captions), nullptr);
  std::vector<int> labels;
  for (const auto& s : sequences) labels.insert(labels.end(), s.begin(), s.end());
  return nn::SoftmaxCrossEntropy<float>(logits, labels).loss;
}

double Seq2SeqModel::LogLikelihood(std::span<const int> tokens,
                                   const Caption& caption) const {
  const int len = options_.grid * options_.grid;
  if (static_cast<int>(tokens.size()) != len) {
    throw Error("token sequence has the wrong length");
  }
  const std::vector<std::vector<int>> seqs = {{tokens.begin(), tokens.end()}};
  return -MeanLoss(seqs, {caption.tokens()}) * len;
}

ImageSample Seq2SeqModel::Generate(const GenerationRequest& request) const {
  const int grid = options_.grid, len = grid * grid;
  Rng rng(DeriveSeed(request.seed, "seq2seq-ties"));
  const M cond = words_.Forward(std::vector<std::vector<int>>{request.caption.tokens()});
  std::vector<int> seq;
  M input(options_.cond_dim + 3 * kTokenEmbDim, 1);
  for (int i = 0; i < len; ++i) {
    const int prev = i > 0 ? seq.back() : kBos;
    const int up = i >= grid ? seq[static_cast<std::size_t>(i - grid)] : kBos;
    input.col(0).head(options_.cond_dim) = cond.col(0);
    input.col(0).segment(options_.cond_dim, kTokenEmbDim) = position_.table.value.col(i);
    input.col(0).segment(options_.cond_dim + kTokenEmbDim, kTokenEmbDim) =
        previous_.table.value.col(prev);
    input.col(0).tail(kTokenEmbDim) = above_.table.value.col(up);
    const M logits = Forward(input, nullptr);
    const float best = logits.col(0).maxCoeff();
    std::vector<int> ties;
    for (int k = 0; k < kCodebookSize; ++k) {
      if (logits(k, 0) == best) ties.push_back(k);
    }
    seq.push_back(ties.size() == 1 ? ties[0] : ties[rng.Index(ties.size())]);
  }
  return Detokenize(seq, grid);
}

void Seq2SeqModel::Train(const PairedDataset& data, RngSeed seed,
                         TrainReport* report) {
  if (data.pairs.empty()) throw Error("cannot train on an empty dataset");
  const int len = options_.grid * options_.grid;
  std::vector<std::vector<int>> sequences, captions;
  for (const auto& p : data.pairs) {
    sequences.push_back(QuantizeImage(p.image, options_.grid));
    captions.push_back(p.caption.tokens());
  }
  TrainReport local;
  TrainReport& rep = report != nullptr ? *report : local;
  rep.initial_loss = MeanLoss(sequences, captions);

  nn::ParameterRefs<float> params = Params();
  nn::Adam<float> adam(params, options_.learning_rate);
  Rng rng(DeriveSeed(seed, "seq2seq-train"));
  std::vector<int> order(sequences.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < options_.epochs; ++epoch) {
    rng.Shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(options_.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(options_.batch_size));
      std::vector<std::vector<int>> seqs, caps;
      std::vector<int> labels;
      for (std::size_t k = start; k < end; ++k) {
        seqs.push_back(sequences[static_cast<std::size_t>(order[k])]);
        caps.push_back(captions[static_cast<std::size_t>(order[k])]);
        labels.insert(labels.end(), seqs.back().begin(), seqs.back().end());
      }
      Cache cache;
      const M logits = Forward(Inputs(seqs, caps), &cache);
      const auto ce = nn::SoftmaxCrossEntropy<float>(logits, labels);
      epoch_loss += static_cast<double>(ce.loss) * static_cast<double>(end - start);

      adam.ZeroGrad();
      const M dh2 = head_.Backward(cache.h2, ce.grad);
      const M dh1 = l2_.Backward(cache.h1, nn::SiluBackward(cache.a2, dh2));
      const M din = l1_.Backward(cache.input, nn::SiluBackward(cache.a1, dh1));
      const ContextIds ids = Contexts(seqs, options_.grid);
      position_.Backward(ids.position, din.middleRows(options_.cond_dim, kTokenEmbDim));
      previous_.Backward(ids.previous,
                         din.middleRows(options_.cond_dim + kTokenEmbDim, kTokenEmbDim));
      above_.Backward(ids.above, din.bottomRows(kTokenEmbDim));
      M dcond = M::Zero(options_.cond_dim, static_cast<Eigen::Index>(seqs.size()));
      for (Eigen::Index j = 0; j < din.cols(); ++j) {
        dcond.col(j / len) += din.col(j).head(options_.cond_dim);
      }
      words_.Backward(caps, dcond);
      adam.Step();
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss) || !nn::AllFinite(params)) {
      throw Error("seq2seq training diverged at epoch " +
                  std::to_string(epoch + 1));
    }
    rep.epoch_losses.push_back(epoch_loss);
  }
  rep.final_loss = MeanLoss(sequences, captions);
}

Checkpoint Seq2SeqModel::ToCheckpoint() const {
  Checkpoint ckpt(std::string(TargetFamilyName(TargetFamily::kSeq2Seq)));
  ckpt.hyperparameters() = options_.ToJson();
  nn::SaveParameters<float>(const_cast<Seq2SeqModel*>(this)->Params(), ckpt);
  return ckpt;
}

std::shared_ptr<Seq2SeqModel> Seq2SeqModel::FromCheckpoint(const Checkpoint& ckpt) {
  if (ckpt.family() != TargetFamilyName(TargetFamily::kSeq2Seq)) {
    throw Error("checkpoint family '" + ckpt.family() + "' is not seq2seq");
  }
  auto model = std::make_shared<Seq2SeqModel>(
      Seq2SeqOptions::FromJson(ckpt.hyperparameters()), RngSeed{0});
  nn::LoadParameters<float>(ckpt, model->Params());
  return model;
}

TargetModelHandle TrainSeq2SeqTarget(const PairedDataset& data,
                                     const Seq2SeqOptions& options,
                                     RngSeed seed, TrainReport* report) {
  auto model = std::make_shared<Seq2SeqModel>(options,
                                              DeriveSeed(seed, "seq2seq-init"));
  model->Train(data, seed, report);
  return TargetModelHandle(model, {{"dataset", data.name},
                                   {"dataset_seed", data.seed.value},
                                   {"dataset_size", data.size()},
                                   {"epochs", options.epochs},
                                   {"seed", seed.value}});
}

TargetModelHandle UntrainedSeq2SeqTarget(const Seq2SeqOptions& options,
                                         RngSeed seed) {
  return TargetModelHandle(
      std::make_shared<Seq2SeqModel>(options, DeriveSeed(seed, "seq2seq-init")),
      {{"dataset", ""}, {"epochs", 0}, {"seed", seed.value}});
}

}  // namespace t2i_mia
