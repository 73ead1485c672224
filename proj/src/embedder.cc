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

#include "t2i_mia/perception/embedder.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "t2i_mia/core/checkpoint.h"
#include "t2i_mia/core/error.h"
#include "t2i_mia/nn/optim.h"

namespace t2i_mia {
namespace {

using Net = TwoTowerNet<float>;
using M = nn::Matrix<float>;
using Map = nn::Map2d<float>;

constexpr char kFamily[] = "two_tower";

// Images are stored CHW; maps are channels x (batch * pixels).
Map PackImages(std::span<const ImageSample* const> images) {
  const int hw = kImageHeight * kImageWidth;
  Map m{M(kImageChannels, static_cast<Eigen::Index>(images.size()) * hw),
        kImageHeight, kImageWidth, static_cast<int>(images.size())};
  for (std::size_t b = 0; b < images.size(); ++b) {
    const ImageSample& img = *images[b];
    if (img.height() != kImageHeight || img.width() != kImageWidth ||
        img.channels() != kImageChannels) {
      throw Error("embedder expects 32x32x3 images");
    }
    for (int c = 0; c < kImageChannels; ++c) {
      for (int p = 0; p < hw; ++p) {
        m.data(c, static_cast<Eigen::Index>(b) * hw + p) =
            img.pixels()[static_cast<std::size_t>(c) * hw + p];
      }
    }
  }
  return m;
}

EmbeddingVector ToEmbedding(const M& column, Modality modality) {
  std::vector<double> raw(static_cast<std::size_t>(column.rows()));
  for (Eigen::Index i = 0; i < column.rows(); ++i) raw[i] = column(i, 0);
  return EmbeddingVector::Normalize(raw, modality);
}

}  // namespace

nlohmann::json EmbedderOptions::ToJson() const {
  return {{"dim", dim},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"temperature", temperature}};
}

EmbedderOptions EmbedderOptions::FromJson(const nlohmann::json& j) {
  EmbedderOptions o;
  o.dim = j.value("dim", o.dim);
  o.epochs = j.value("epochs", o.epochs);
  o.batch_size = j.value("batch_size", o.batch_size);
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.temperature = j.value("temperature", o.temperature);
  return o;
}

Embedder::Embedder(const EmbedderOptions& options, RngSeed init_seed)
    : options_(options) {
  if (options.dim < 1) throw Error("embedding dim must be positive");
  Rng rng(init_seed);
  net_ = std::make_shared<Net>(options.dim, rng);
}

EmbeddingVector Embedder::EmbedImage(const ImageSample& image) const {
  const ImageSample* one[] = {&image};
  return ToEmbedding(net_->ImageForward(PackImages(one), nullptr),
                     Modality::kImage);
}

EmbeddingVector Embedder::EmbedText(const Caption& caption) const {
  const std::vector<std::vector<int>> tokens = {caption.tokens()};
  return ToEmbedding(net_->TextForward(tokens, nullptr), Modality::kText);
}

void Embedder::Train(const PairedDataset& data, RngSeed seed,
                     TrainReport* report) {
  const int n = data.size();
  const int bs = options_.batch_size;
  if (bs < 2) throw Error("contrastive batch size must be at least 2");
  if (n < 2 * bs) {
    throw Error("two-tower training needs at least " + std::to_string(2 * bs) +
                " pairs, got " + std::to_string(n));
  }
  const float tau = static_cast<float>(options_.temperature);
  TrainReport local;
  TrainReport& rep = report != nullptr ? *report : local;
  auto batch_loss = [&](std::span<const int> idx, bool train) {
    std::vector<const ImageSample*> images;
    std::vector<std::vector<int>> tokens;
    for (const int i : idx) {
      images.push_back(&data.pairs[static_cast<std::size_t>(i)].image);
      tokens.push_back(data.pairs[static_cast<std::size_t>(i)].caption.tokens());
    }
    Net::ImageCache ic;
    Net::TextCache tc;
    const M img = net_->ImageForward(PackImages(images), &ic);
    const M txt = net_->TextForward(tokens, &tc);
    const auto loss = SymmetricInfoNce<float>(img, txt, tau);
    if (train) {
      net_->ImageBackward(ic, loss.d_image);
      net_->TextBackward(tc, tokens, loss.d_text);
    }
    return static_cast<double>(loss.loss);
  };

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  // Fixed probe: the first batch of the data in file order.
  const std::span<const int> probe(order.data(), static_cast<std::size_t>(bs));
  rep.initial_loss = batch_loss(probe, false);

  nn::ParameterRefs<float> params = net_->Params();
  nn::Adam<float> adam(params, options_.learning_rate);
  Rng rng(DeriveSeed(seed, "two-tower-train"));
  std::vector<int> shuffled = order;
  for (int epoch = 0; epoch < options_.epochs; ++epoch) {
    rng.Shuffle(shuffled.begin(), shuffled.end());
    double total = 0.0;
    int batches = 0;
    // Full batches only; the remainder rotates through later epochs.
    for (int start = 0; start + bs <= n; start += bs) {
      adam.ZeroGrad();
      total += batch_loss(std::span<const int>(shuffled.data() + start,
                                               static_cast<std::size_t>(bs)),
                          true);
      adam.Step();
      ++batches;
    }
    const double mean = total / batches;
    if (!std::isfinite(mean) || !nn::AllFinite(params)) {
      throw Error("two-tower training diverged at epoch " +
                  std::to_string(epoch + 1));
    }
    rep.epoch_losses.push_back(mean);
  }
  rep.final_loss = batch_loss(probe, false);
  train_manifest_ = {{"dataset", data.name},
                     {"dataset_seed", data.seed.value},
                     {"dataset_size", n},
                     {"epochs", options_.epochs},
                     {"seed", seed.value}};
}

void Embedder::Save(const std::filesystem::path& path) const {
  Checkpoint ckpt(kFamily);
  ckpt.hyperparameters() = options_.ToJson();
  ckpt.train_manifest() = train_manifest_;
  nn::SaveParameters<float>(net_->Params(), ckpt);
  ckpt.Save(path);
}

Embedder Embedder::Load(const std::filesystem::path& path) {
  const Checkpoint ckpt = Checkpoint::Load(path);
  if (ckpt.family() != kFamily) {
    throw Error("checkpoint family '" + ckpt.family() + "' is not an embedder");
  }
  Embedder e(EmbedderOptions::FromJson(ckpt.hyperparameters()), RngSeed{0});
  nn::LoadParameters<float>(ckpt, e.net_->Params());
  e.train_manifest_ = ckpt.train_manifest();
  return e;
}

Embedder Embedder::ExternalAdapter(std::string_view name) {
  throw Error("external embedder adapter '" + std::string(name) +
              "' is not available in this build");
}

Embedder TrainTwoTower(const PairedDataset& data, const EmbedderOptions& options,
                       RngSeed seed, TrainReport* report) {
  Embedder e(options, DeriveSeed(seed, "two-tower-init"));
  e.Train(data, seed, report);
  return e;
}

}  // namespace t2i_mia
