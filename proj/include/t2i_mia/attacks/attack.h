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

#ifndef T2I_MIA_ATTACKS_ATTACK_H_
#define T2I_MIA_ATTACKS_ATTACK_H_

#include <filesystem>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "t2i_mia/attacks/attack_net.h"
#include "t2i_mia/core/rng.h"
#include "t2i_mia/features/features.h"

namespace t2i_mia {

std::string_view AttackArchName(AttackArch arch);
AttackArch AttackArchFromName(std::string_view name);
// cnn for pixel kinds, fusion3 for IV, mlp3 otherwise.
AttackArch DefaultArch(AttackKind kind);

struct AttackHyper {
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 64;
  RngSeed seed{0};

  nlohmann::json ToJson() const;
  static AttackHyper FromJson(const nlohmann::json& j);
};

// What a trained attack model accepts.
struct AttackInputSpec {
  AttackKind kind = AttackKind::kIP;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<int> vector_dims;

  static AttackInputSpec Of(const AttackFeature& f);
  friend bool operator==(const AttackInputSpec&, const AttackInputSpec&) = default;
};

struct MembershipDecision {
  double score = 0.0;
  MembershipLabel label = MembershipLabel::kNonmember;
};

inline constexpr double kMemberThreshold = 0.5;

// Member iff score >= kMemberThreshold.
MembershipLabel LabelFromScore(double score);

// A trained binary membership classifier. Immutable after training.
class AttackModel {
 public:
  AttackArch arch() const { return arch_; }
  const AttackInputSpec& input_spec() const { return spec_; }
  const AttackHyper& hyper() const { return hyper_; }
  // Mean training loss before the first update.
  double initial_loss() const { return initial_loss_; }
  // Mean training loss of each epoch, measured after the epoch.
  const std::vector<double>& train_log() const { return train_log_; }

  // Throws Error if `f` does not match input_spec(). f.label is ignored.
  MembershipDecision Infer(const AttackFeature& f) const;
  std::vector<MembershipDecision> InferAll(
      std::span<const AttackFeature> features) const;

  // Flattened float parameters, in a fixed order.
  std::vector<float> FlatParameters() const;

  void Save(const std::filesystem::path& path) const;
  static AttackModel Load(const std::filesystem::path& path);

 private:
  friend AttackModel TrainAttack(std::span<const AttackFeature>, AttackArch,
                                 const AttackHyper&);
  friend double AttackGradcheck(const AttackModel&, const AttackFeature&,
                                double, int, RngSeed);

  AttackModel(AttackArch arch, AttackInputSpec spec, AttackHyper hyper);

  AttackArch arch_;
  AttackInputSpec spec_;
  AttackHyper hyper_;
  // Per-coordinate standardization of each vector payload, fitted on the
  // training features.
  std::vector<std::vector<float>> mean_;
  std::vector<std::vector<float>> inv_scale_;
  std::shared_ptr<AttackNet<float>> net_;
  double initial_loss_ = 0.0;
  std::vector<double> train_log_;
};

// Cross-entropy + Adam on labeled features of one kind. Throws Error if the
// features are unlabeled, mixed in kind or shape, single-class, or if the
// loss becomes non-finite.
AttackModel TrainAttack(std::span<const AttackFeature> features,
                        AttackArch arch, const AttackHyper& hyper = {});

// Max relative error between analytic and central-difference gradients of
// the loss on `f` (label taken from f, member if absent), evaluated in
// double precision at the model's trained parameters. epsilon in (0, 1e-2].
double AttackGradcheck(const AttackModel& model, const AttackFeature& f,
                       double epsilon, int coordinates = 200,
                       RngSeed seed = RngSeed{0});

// Fraction of labeled features whose inferred label matches.
double AttackAccuracy(const AttackModel& model,
                      std::span<const AttackFeature> features);

}  // namespace t2i_mia

#endif  // T2I_MIA_ATTACKS_ATTACK_H_
