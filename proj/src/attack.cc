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

#include "t2i_mia/attacks/attack.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "t2i_mia/core/checkpoint.h"
#include "t2i_mia/core/error.h"
#include "t2i_mia/nn/gradcheck.h"
#include "t2i_mia/nn/optim.h"

namespace t2i_mia {
namespace {

constexpr std::array<std::string_view, 3> kArchNames = {"cnn", "mlp3",
                                                        "fusion3"};
constexpr char kFamily[] = "attack";

int Label(const AttackFeature& f) {
  return f.label == MembershipLabel::kMember ? 1 : 0;
}

void CheckArchFits(AttackArch arch, const AttackInputSpec& spec) {
  const std::string kind(AttackKindName(spec.kind));
  const std::string name(AttackArchName(arch));
  if ((arch == AttackArch::kCnn) != IsPixelLevel(spec.kind)) {
    throw Error(name + " cannot take " + kind + " features");
  }
  if (arch == AttackArch::kFusion3 && spec.vector_dims.size() != 3) {
    throw Error("fusion3 needs three-vector features, got " + kind);
  }
}

// Standardized copy of the features in network layout.
template <typename S>
typename AttackNet<S>::Batch Pack(std::span<const AttackFeature* const> fs,
                                  const AttackInputSpec& spec,
                                  const std::vector<std::vector<float>>& mean,
                                  const std::vector<std::vector<float>>& inv) {
  typename AttackNet<S>::Batch batch;
  const int n = static_cast<int>(fs.size());
  if (IsPixelLevel(spec.kind)) {
    const int hw = spec.height * spec.width;
    auto& m = batch.pixels;
    m.height = spec.height;
    m.width = spec.width;
    m.batch = n;
    m.data.resize(spec.channels, static_cast<Eigen::Index>(n) * hw);
    for (int b = 0; b < n; ++b) {
      const auto& v = fs[b]->pixel_payload->values;
      for (int c = 0; c < spec.channels; ++c) {
        for (int p = 0; p < hw; ++p) {
          m.data(c, static_cast<Eigen::Index>(b) * hw + p) =
              static_cast<S>(v[static_cast<std::size_t>(c) * hw + p]);
        }
      }
    }
    return batch;
  }
  for (std::size_t k = 0; k < spec.vector_dims.size(); ++k) {
    const int d = spec.vector_dims[k];
    nn::Matrix<S> m(d, n);
    for (int b = 0; b < n; ++b) {
      const auto& v = fs[b]->vector_payload[k];
      for (int i = 0; i < d; ++i) {
        m(i, b) = static_cast<S>((v[i] - mean[k][i]) * inv[k][i]);
      }
    }
    batch.vectors.push_back(std::move(m));
  }
  return batch;
}

template <typename S>
double MemberProbability(const nn::Matrix<S>& logits) {
  const double a = static_cast<double>(logits(0, 0));
  const double b = static_cast<double>(logits(1, 0));
  return 1.0 / (1.0 + std::exp(a - b));
}

void CheckMatches(const AttackInputSpec& want, const AttackFeature& f) {
  f.Validate();
  const AttackInputSpec got = AttackInputSpec::Of(f);
  if (!(got == want)) {
    throw Error("feature of kind " + std::string(AttackKindName(f.kind)) +
                " does not match the attack model input (" +
                std::string(AttackKindName(want.kind)) + ")");
  }
}

}  // namespace

std::string_view AttackArchName(AttackArch arch) {
  return kArchNames[static_cast<std::size_t>(arch)];
}

AttackArch AttackArchFromName(std::string_view name) {
  for (std::size_t i = 0; i < kArchNames.size(); ++i) {
    if (kArchNames[i] == name) return static_cast<AttackArch>(i);
  }
  throw Error("unknown attack architecture '" + std::string(name) + "'");
}

AttackArch DefaultArch(AttackKind kind) {
  if (IsPixelLevel(kind)) return AttackArch::kCnn;
  return kind == AttackKind::kIV ? AttackArch::kFusion3 : AttackArch::kMlp3;
}

nlohmann::json AttackHyper::ToJson() const {
  return {{"learning_rate", learning_rate},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"seed", seed.value}};
}

AttackHyper AttackHyper::FromJson(const nlohmann::json& j) {
  AttackHyper h;
  h.learning_rate = j.value("learning_rate", h.learning_rate);
  h.epochs = j.value("epochs", h.epochs);
  h.batch_size = j.value("batch_size", h.batch_size);
  h.seed = RngSeed{j.value("seed", h.seed.value)};
  return h;
}

AttackInputSpec AttackInputSpec::Of(const AttackFeature& f) {
  AttackInputSpec s;
  s.kind = f.kind;
  if (f.pixel_payload) {
    s.channels = f.pixel_payload->channels;
    s.height = f.pixel_payload->height;
    s.width = f.pixel_payload->width;
  }
  for (const auto& v : f.vector_payload) {
    s.vector_dims.push_back(static_cast<int>(v.size()));
  }
  return s;
}

MembershipLabel LabelFromScore(double score) {
  return score >= kMemberThreshold ? MembershipLabel::kMember
                                   : MembershipLabel::kNonmember;
}

AttackModel::AttackModel(AttackArch arch, AttackInputSpec spec,
                         AttackHyper hyper)
    : arch_(arch), spec_(std::move(spec)), hyper_(hyper) {
  CheckArchFits(arch_, spec_);
  Rng rng(DeriveSeed(hyper_.seed, "attack-init"));
  net_ = std::make_shared<AttackNet<float>>(arch_, spec_.channels,
                                            spec_.vector_dims, rng);
  for (const int d : spec_.vector_dims) {
    mean_.emplace_back(static_cast<std::size_t>(d), 0.0f);
    inv_scale_.emplace_back(static_cast<std::size_t>(d), 1.0f);
  }
}

MembershipDecision AttackModel::Infer(const AttackFeature& f) const {
  CheckMatches(spec_, f);
  const AttackFeature* one[] = {&f};
  const auto batch = Pack<float>(one, spec_, mean_, inv_scale_);
  MembershipDecision d;
  d.score = MemberProbability(net_->Forward(batch, nullptr));
  d.label = LabelFromScore(d.score);
  return d;
}

std::vector<MembershipDecision> AttackModel::InferAll(
    std::span<const AttackFeature> features) const {
  std::vector<MembershipDecision> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(Infer(f));
  return out;
}

std::vector<float> AttackModel::FlatParameters() const {
  std::vector<float> out;
  for (const auto* p : net_->Params()) {
    out.insert(out.end(), p->value.data(), p->value.data() + p->value.size());
  }
  return out;
}

void AttackModel::Save(const std::filesystem::path& path) const {
  Checkpoint ckpt(kFamily);
  auto& h = ckpt.hyperparameters();
  h["arch"] = AttackArchName(arch_);
  h["kind"] = AttackKindName(spec_.kind);
  h["channels"] = spec_.channels;
  h["height"] = spec_.height;
  h["width"] = spec_.width;
  h["vector_dims"] = spec_.vector_dims;
  h["hyper"] = hyper_.ToJson();
  ckpt.train_manifest() = {{"initial_loss", initial_loss_},
                           {"train_log", train_log_}};
  nn::SaveParameters<float>(net_->Params(), ckpt);
  for (std::size_t k = 0; k < mean_.size(); ++k) {
    const int d = static_cast<int>(mean_[k].size());
    ckpt.Put<float>("standardize.mean." + std::to_string(k),
                    Eigen::Map<const nn::Matrix<float>>(mean_[k].data(), d, 1));
    ckpt.Put<float>(
        "standardize.inv_scale." + std::to_string(k),
        Eigen::Map<const nn::Matrix<float>>(inv_scale_[k].data(), d, 1));
  }
  ckpt.Save(path);
}

AttackModel AttackModel::Load(const std::filesystem::path& path) {
  const Checkpoint ckpt = Checkpoint::Load(path);
  if (ckpt.family() != kFamily) {
    throw Error(path.string() + " holds a '" + ckpt.family() +
                "' checkpoint, not an attack model");
  }
  const auto& h = ckpt.hyperparameters();
  AttackInputSpec spec;
  try {
    spec.kind = AttackKindFromName(h.at("kind").get<std::string>());
    spec.channels = h.at("channels").get<int>();
    spec.height = h.at("height").get<int>();
    spec.width = h.at("width").get<int>();
    spec.vector_dims = h.at("vector_dims").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad attack checkpoint " + path.string() + ": " + e.what());
  }
  AttackModel m(AttackArchFromName(h.at("arch").get<std::string>()), spec,
                AttackHyper::FromJson(h.at("hyper")));
  nn::LoadParameters<float>(ckpt, m.net_->Params());
  for (std::size_t k = 0; k < m.mean_.size(); ++k) {
    const int d = spec.vector_dims[k];
    const auto mean =
        ckpt.Get<float>("standardize.mean." + std::to_string(k), d, 1);
    const auto inv =
        ckpt.Get<float>("standardize.inv_scale." + std::to_string(k), d, 1);
    m.mean_[k].assign(mean.data(), mean.data() + d);
    m.inv_scale_[k].assign(inv.data(), inv.data() + d);
  }
  m.initial_loss_ = ckpt.train_manifest().value("initial_loss", 0.0);
  m.train_log_ =
      ckpt.train_manifest().value("train_log", std::vector<double>{});
  return m;
}

AttackModel TrainAttack(std::span<const AttackFeature> features,
                        AttackArch arch, const AttackHyper& hyper) {
  if (features.empty()) throw Error("no features to train on");
  if (hyper.epochs < 0 || hyper.batch_size < 1 ||
      !(hyper.learning_rate > 0.0)) {
    throw Error("invalid attack hyperparameters");
  }
  const AttackInputSpec spec = AttackInputSpec::Of(features.front());
  int members = 0;
  for (const auto& f : features) {
    CheckMatches(spec, f);
    if (!f.label) throw Error("attack training needs labeled features");
    members += Label(f);
  }
  const int n = static_cast<int>(features.size());
  if (members == 0 || members == n) {
    throw Error("attack training needs both members and non-members");
  }
  AttackModel model(arch, spec, hyper);

  for (std::size_t k = 0; k < spec.vector_dims.size(); ++k) {
    const int d = spec.vector_dims[k];
    for (int i = 0; i < d; ++i) {
      double sum = 0.0, sq = 0.0;
      for (const auto& f : features) {
        const double x = f.vector_payload[k][i];
        sum += x;
        sq += x * x;
      }
      const double mean = sum / n;
      const double sd = std::sqrt(std::max(0.0, sq / n - mean * mean));
      model.mean_[k][i] = static_cast<float>(mean);
      model.inv_scale_[k][i] = sd > 1e-6 ? static_cast<float>(1.0 / sd) : 1.0f;
    }
  }

  AttackNet<float>& net = *model.net_;
  const auto params = net.Params();
  nn::Adam<float> opt(params, hyper.learning_rate);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle(DeriveSeed(hyper.seed, "attack-shuffle"));

  auto run_batch = [&](std::span<const int> idx, bool update) {
    std::vector<const AttackFeature*> fs;
    std::vector<int> labels;
    for (const int i : idx) {
      fs.push_back(&features[static_cast<std::size_t>(i)]);
      labels.push_back(Label(features[static_cast<std::size_t>(i)]));
    }
    const auto batch = Pack<float>(fs, spec, model.mean_, model.inv_scale_);
    AttackNet<float>::Cache cache;
    const auto logits = net.Forward(batch, update ? &cache : nullptr);
    const auto ce = nn::SoftmaxCrossEntropy<float>(logits, labels);
    if (update) {
      opt.ZeroGrad();
      net.Backward(cache, batch, ce.grad);
      opt.Step();
    }
    return static_cast<double>(ce.loss) * static_cast<double>(idx.size());
  };

  double total = 0.0;
  for (int b = 0; b < n; b += hyper.batch_size) {
    const int e = std::min(n, b + hyper.batch_size);
    total += run_batch(std::span<const int>(order).subspan(b, e - b), false);
  }
  model.initial_loss_ = total / n;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle.Shuffle(order.begin(), order.end());
    total = 0.0;
    for (int b = 0; b < n; b += hyper.batch_size) {
      const int e = std::min(n, b + hyper.batch_size);
      total += run_batch(std::span<const int>(order).subspan(b, e - b), true);
    }
    const double loss = total / n;
    if (!std::isfinite(loss) || !nn::AllFinite(params)) {
      throw Error("attack training diverged at epoch " + std::to_string(epoch));
    }
    model.train_log_.push_back(loss);
  }
  return model;
}

double AttackGradcheck(const AttackModel& model, const AttackFeature& f,
                       double epsilon, int coordinates, RngSeed seed) {
  if (!(epsilon > 0.0 && epsilon <= 1e-2)) {
    throw Error("gradcheck epsilon must be in (0, 1e-2]");
  }
  CheckMatches(model.spec_, f);
  Rng unused(RngSeed{0});
  AttackNet<double> net(model.arch_, model.spec_.channels,
                        model.spec_.vector_dims, unused);
  const auto src = model.net_->Params();
  const auto dst = net.Params();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i]->value = src[i]->value.cast<double>();
  }
  const AttackFeature* one[] = {&f};
  const auto batch = Pack<double>(one, model.spec_, model.mean_,
                                  model.inv_scale_);
  const std::vector<int> label = {
      f.label == MembershipLabel::kNonmember ? 0 : 1};
  AttackNet<double>::Cache cache;
  const auto ce =
      nn::SoftmaxCrossEntropy<double>(net.Forward(batch, &cache), label);
  nn::ZeroGrads(dst);
  net.Backward(cache, batch, ce.grad);
  Rng pick(DeriveSeed(seed, "attack-gradcheck"));
  return nn::CheckGradients<double>(
             dst,
             [&] {
               return nn::SoftmaxCrossEntropy<double>(
                          net.Forward(batch, nullptr), label)
                   .loss;
             },
             epsilon, coordinates, pick)
      .max_relative_error;
}

double AttackAccuracy(const AttackModel& model,
                      std::span<const AttackFeature> features) {
  if (features.empty()) throw Error("no features to score");
  int correct = 0;
  for (const auto& f : features) {
    if (!f.label) throw Error("accuracy needs labeled features");
    correct += model.Infer(f).label == *f.label;
  }
  return static_cast<double>(correct) / static_cast<double>(features.size());
}

}  // namespace t2i_mia
