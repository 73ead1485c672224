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

#include "t2i_mia/targetmodels/diffusion.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "t2i_mia/core/error.h"
#include "t2i_mia/nn/optim.h"

namespace t2i_mia {
namespace {

using Net = DenoiserNet<float>;
using M = nn::Matrix<float>;
using Map = nn::Map2d<float>;

constexpr int kPixels = kImageHeight * kImageWidth;
constexpr int kValues = kPixels * kImageChannels;

std::vector<float> ToSigned(const ImageSample& image) {
  if (image.height() != kImageHeight || image.width() != kImageWidth ||
      image.channels() != kImageChannels) {
    throw Error("diffusion target expects 32x32x3 images");
  }
  std::vector<float> v(image.pixels().begin(), image.pixels().end());
  for (float& x : v) x = 2.0f * x - 1.0f;
  return v;
}

// Packs CHW vectors into a batch map (channels x batch*pixels).
Map Pack(const std::vector<const std::vector<float>*>& items) {
  Map m{M(kImageChannels, static_cast<Eigen::Index>(items.size()) * kPixels),
        kImageHeight, kImageWidth, static_cast<int>(items.size())};
  for (std::size_t b = 0; b < items.size(); ++b) {
    for (int c = 0; c < kImageChannels; ++c) {
      for (int p = 0; p < kPixels; ++p) {
        m.data(c, static_cast<Eigen::Index>(b) * kPixels + p) =
            (*items[b])[static_cast<std::size_t>(c) * kPixels + p];
      }
    }
  }
  return m;
}

float& At(Map& m, int b, int i) {
  return m.data(i / kPixels, static_cast<Eigen::Index>(b) * kPixels + i % kPixels);
}

Net MakeNet(int cond_dim, RngSeed seed) {
  Rng rng(seed);
  return Net(cond_dim, rng);
}

struct NoisyBatch {
  Map x0;
  Map x_t;
  std::vector<int> t;
  std::vector<std::vector<int>> tokens;
};

NoisyBatch MakeBatch(const std::vector<std::vector<float>>& x0,
                     const std::vector<std::vector<int>>& tokens,
                     std::span<const int> idx,
                     const std::vector<double>& alpha_bar, Rng& rng) {
  NoisyBatch nb;
  std::vector<const std::vector<float>*> items;
  for (const int i : idx) {
    items.push_back(&x0[static_cast<std::size_t>(i)]);
    nb.tokens.push_back(tokens[static_cast<std::size_t>(i)]);
    nb.t.push_back(static_cast<int>(rng.Index(alpha_bar.size())));
  }
  nb.x0 = Pack(items);
  nb.x_t = nb.x0;
  for (int b = 0; b < static_cast<int>(idx.size()); ++b) {
    const double ab = alpha_bar[static_cast<std::size_t>(nb.t[b])];
    const float sa = static_cast<float>(std::sqrt(ab));
    const float sb = static_cast<float>(std::sqrt(1.0 - ab));
    for (int i = 0; i < kValues; ++i) {
      At(nb.x_t, b, i) =
          sa * At(nb.x_t, b, i) + sb * static_cast<float>(rng.Normal());
    }
  }
  return nb;
}

}  // namespace

nlohmann::json DiffusionOptions::ToJson() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"timesteps", timesteps},
          {"beta_start", beta_start},
          {"beta_end", beta_end},
          {"cond_dim", cond_dim}};
}

DiffusionOptions DiffusionOptions::FromJson(const nlohmann::json& j) {
  DiffusionOptions o;
  o.epochs = j.value("epochs", o.epochs);
  o.batch_size = j.value("batch_size", o.batch_size);
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.timesteps = j.value("timesteps", o.timesteps);
  o.beta_start = j.value("beta_start", o.beta_start);
  o.beta_end = j.value("beta_end", o.beta_end);
  o.cond_dim = j.value("cond_dim", o.cond_dim);
  return o;
}

DiffusionModel::DiffusionModel(const DiffusionOptions& options,
                               RngSeed init_seed)
    : options_(options),
      net_(MakeNet(options.cond_dim, init_seed)) {
  if (options.timesteps < 1 || options.timesteps > kMaxDenoisingSteps) {
    throw Error("timesteps must be in [1, 1000]");
  }
  if (options.batch_size < 1) throw Error("batch size must be positive");
  double prod = 1.0;
  for (int i = 0; i < options.timesteps; ++i) {
    const double beta =
        options.timesteps == 1
            ? options.beta_start
            : options.beta_start + (options.beta_end - options.beta_start) *
                                       i / (options.timesteps - 1);
    prod *= 1.0 - beta;
    alpha_bar_.push_back(prod);
  }
}

std::size_t DiffusionModel::parameter_count() const {
  return nn::CountParameters(const_cast<Net&>(net_).Params());
}

ImageSample DiffusionModel::Sample(std::vector<float> x, const Caption& caption,
                                   int steps) const {
  const int T = options_.timesteps;
  if (steps < 1 || steps > T) {
    throw Error("denoising steps must be in [1, " + std::to_string(T) + "]");
  }
  std::vector<int> seq(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    seq[static_cast<std::size_t>(i)] =
        static_cast<int>((static_cast<long>(i) + 1) * T / steps) - 1;
  }
  const std::vector<std::vector<int>> tokens = {caption.tokens()};
  for (int i = steps - 1; i >= 0; --i) {
    const int t = seq[static_cast<std::size_t>(i)];
    const double ab = alpha_bar_[static_cast<std::size_t>(t)];
    const double ab_prev =
        i > 0 ? alpha_bar_[static_cast<std::size_t>(seq[i - 1])] : 1.0;
    const std::vector<int> tt = {t};
    const Map pred = net_.Forward(Pack({&x}), tt, tokens, nullptr);
    const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
    const double sa_prev = std::sqrt(ab_prev), sb_prev = std::sqrt(1.0 - ab_prev);
    for (int v = 0; v < kValues; ++v) {
      const double x0 =
          std::clamp<double>(pred.data(v / kPixels, v % kPixels), -1.0, 1.0);
      const double e_hat = (x[v] - sa * x0) / sb;
      x[v] = static_cast<float>(sa_prev * x0 + sb_prev * e_hat);
    }
  }
  std::vector<float> pixels(x.size());
  for (std::size_t v = 0; v < x.size(); ++v) {
    pixels[v] = std::clamp(0.5f * (x[v] + 1.0f), 0.0f, 1.0f);
  }
  return ImageSample("", Origin::kGenerated, kImageHeight, kImageWidth,
                     kImageChannels, std::move(pixels));
}

ImageSample DiffusionModel::Generate(const GenerationRequest& request) const {
  Rng rng(DeriveSeed(request.seed, "ddim-x-t"));
  std::vector<float> x(kValues);
  for (float& v : x) v = static_cast<float>(rng.Normal());
  return Sample(std::move(x), request.caption, request.steps);
}

ImageSample DiffusionModel::Reconstruct(const ImageSample& image,
                                        const Caption& caption, int steps,
                                        RngSeed seed) const {
  Rng rng(DeriveSeed(seed, "reconstruct-noise"));
  std::vector<float> x = ToSigned(image);
  const double ab = alpha_bar_.back();
  for (float& v : x) {
    v = static_cast<float>(std::sqrt(ab) * v + std::sqrt(1.0 - ab) * rng.Normal());
  }
  return Sample(std::move(x), caption, steps);
}

double DiffusionModel::ProbeLoss(const PairedDataset& data, RngSeed seed) const {
  if (data.pairs.empty()) throw Error("probe set is empty");
  std::vector<std::vector<float>> x0;
  std::vector<std::vector<int>> tokens;
  const int n = std::min(data.size(), 128);
  for (int i = 0; i < n; ++i) {
    x0.push_back(ToSigned(data.pairs[static_cast<std::size_t>(i)].image));
    tokens.push_back(data.pairs[static_cast<std::size_t>(i)].caption.tokens());
  }
  Rng rng(DeriveSeed(seed, "probe"));
  double total = 0.0;
  for (int start = 0; start < n; start += options_.batch_size) {
    std::vector<int> idx(static_cast<std::size_t>(
        std::min(options_.batch_size, n - start)));
    std::iota(idx.begin(), idx.end(), start);
    const NoisyBatch nb = MakeBatch(x0, tokens, idx, alpha_bar_, rng);
    const Map pred = net_.Forward(nb.x_t, nb.t, nb.tokens, nullptr);
    total += static_cast<double>((pred.data - nb.x0.data).squaredNorm());
  }
  return total / (static_cast<double>(n) * kValues);
}

void DiffusionModel::Train(const PairedDataset& data, RngSeed seed,
                           TrainReport* report) {
  if (data.pairs.empty()) throw Error("cannot train on an empty dataset");
  std::vector<std::vector<float>> x0;
  std::vector<std::vector<int>> tokens;
  for (const auto& p : data.pairs) {
    x0.push_back(ToSigned(p.image));
    tokens.push_back(p.caption.tokens());
  }
  const RngSeed probe_seed = DeriveSeed(seed, "probe-loss");
  TrainReport local;
  TrainReport& rep = report != nullptr ? *report : local;
  rep.initial_loss = ProbeLoss(data, probe_seed);

  nn::ParameterRefs<float> params = net_.Params();
  nn::Adam<float> adam(params, options_.learning_rate);
  Rng rng(DeriveSeed(seed, "diffusion-train"));
  std::vector<int> order(x0.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < options_.epochs; ++epoch) {
    rng.Shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(options_.batch_size)) {
      const std::size_t len = std::min<std::size_t>(
          static_cast<std::size_t>(options_.batch_size), order.size() - start);
      const std::span<const int> idx(order.data() + start, len);
      const NoisyBatch nb = MakeBatch(x0, tokens, idx, alpha_bar_, rng);
      Net::Cache cache;
      const Map pred = net_.Forward(nb.x_t, nb.t, nb.tokens, &cache);
      const auto mse = nn::MeanSquaredError<float>(pred.data, nb.x0.data);
      epoch_loss += static_cast<double>(mse.loss) * static_cast<double>(len);
      adam.ZeroGrad();
      net_.Backward(cache, nb.tokens,
                    Map{mse.grad, pred.height, pred.width, pred.batch});
      adam.Step();
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss) || !nn::AllFinite(params)) {
      throw Error("diffusion training diverged at epoch " +
                  std::to_string(epoch + 1));
    }
    rep.epoch_losses.push_back(epoch_loss);
  }
  rep.final_loss = ProbeLoss(data, probe_seed);
}

Checkpoint DiffusionModel::ToCheckpoint() const {
  Checkpoint ckpt(std::string(TargetFamilyName(TargetFamily::kDiffusion)));
  ckpt.hyperparameters() = options_.ToJson();
  nn::SaveParameters<float>(const_cast<Net&>(net_).Params(), ckpt);
  return ckpt;
}

std::shared_ptr<DiffusionModel> DiffusionModel::FromCheckpoint(
    const Checkpoint& ckpt) {
  if (ckpt.family() != TargetFamilyName(TargetFamily::kDiffusion)) {
    throw Error("checkpoint family '" + ckpt.family() + "' is not diffusion");
  }
  auto model = std::make_shared<DiffusionModel>(
      DiffusionOptions::FromJson(ckpt.hyperparameters()), RngSeed{0});
  nn::LoadParameters<float>(ckpt, model->net_.Params());
  return model;
}

TargetModelHandle TrainDiffusionTarget(const PairedDataset& data,
                                       const DiffusionOptions& options,
                                       RngSeed seed, TrainReport* report) {
  auto model = std::make_shared<DiffusionModel>(
      options, DeriveSeed(seed, "diffusion-init"));
  model->Train(data, seed, report);
  return TargetModelHandle(model, {{"dataset", data.name},
                                   {"dataset_seed", data.seed.value},
                                   {"dataset_size", data.size()},
                                   {"epochs", options.epochs},
                                   {"seed", seed.value}});
}

TargetModelHandle UntrainedDiffusionTarget(const DiffusionOptions& options,
                                           RngSeed seed) {
  return TargetModelHandle(
      std::make_shared<DiffusionModel>(options,
                                       DeriveSeed(seed, "diffusion-init")),
      {{"dataset", ""}, {"epochs", 0}, {"seed", seed.value}});
}

}  // namespace t2i_mia
