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

#include <cmath>
#include <filesystem>
#include <vector>

#include "gtest/gtest.h"
#include "t2i_mia/attacks/attack.h"
#include "t2i_mia/core/error.h"

namespace t2i_mia {
namespace {

AttackFeature VectorFeature(AttackKind kind, std::vector<std::vector<float>> vs,
                            std::optional<MembershipLabel> label) {
  AttackFeature f;
  f.kind = kind;
  f.vector_payload = std::move(vs);
  f.label = label;
  return f;
}

MembershipLabel L(bool member) {
  return member ? MembershipLabel::kMember : MembershipLabel::kNonmember;
}

std::vector<float> Gaussian(int d, Rng& rng, double shift = 0.0) {
  std::vector<float> v(static_cast<std::size_t>(d));
  for (float& x : v) x = static_cast<float>(rng.Normal() + shift);
  return v;
}

// Difference-map features whose mean brightness depends on the label.
std::vector<AttackFeature> PixelFeatures(int n, Rng& rng) {
  std::vector<AttackFeature> out;
  for (int i = 0; i < n; ++i) {
    const bool member = i % 2 == 0;
    AttackFeature f;
    f.kind = AttackKind::kIIP;
    f.pixel_payload = PixelMap{3, 32, 32, std::vector<float>(3 * 32 * 32)};
    for (float& x : f.pixel_payload->values) {
      x = static_cast<float>(rng.Uniform() * (member ? 0.4 : 0.6));
    }
    f.label = L(member);
    out.push_back(std::move(f));
  }
  return out;
}

TEST(AttackTest, SeparableOneDimensionalFeatures) {
  Rng rng(RngSeed{1});
  std::vector<AttackFeature> fs;
  for (int i = 0; i < 100; ++i) {
    const bool member = i % 2 == 1;
    fs.push_back(VectorFeature(
        AttackKind::kIS,
        {{static_cast<float>((member ? 1.0 : -1.0) + 0.3 * rng.Normal())}},
        L(member)));
  }
  const AttackModel m = TrainAttack(fs, AttackArch::kMlp3);
  EXPECT_EQ(AttackAccuracy(m, fs), 1.0);
  EXPECT_EQ(m.train_log().size(), 200u);
  EXPECT_LE(m.train_log().back(), m.initial_loss());
}

TEST(AttackTest, ShuffledLabelsGiveChanceAccuracy) {
  double mean = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(DeriveSeed(RngSeed{100}, static_cast<std::uint64_t>(seed)));
    std::vector<AttackFeature> train, test;
    for (int i = 0; i < 400; ++i) {
      // Labels carry no information about the payload.
      const bool member = rng.Bernoulli(0.5);
      (i < 200 ? train : test)
          .push_back(VectorFeature(AttackKind::kIIS, {Gaussian(16, rng)},
                                   L(member)));
    }
    AttackHyper h;
    h.seed = RngSeed{static_cast<std::uint64_t>(seed)};
    mean += AttackAccuracy(TrainAttack(train, AttackArch::kMlp3, h), test) / 20;
  }
  EXPECT_NEAR(mean, 0.5, 0.05);
}

TEST(AttackTest, ThresholdRule) {
  EXPECT_EQ(LabelFromScore(0.7), MembershipLabel::kMember);
  EXPECT_EQ(LabelFromScore(0.5), MembershipLabel::kMember);
  EXPECT_EQ(LabelFromScore(0.4999), MembershipLabel::kNonmember);
  // Rescaling the logit by any positive factor keeps every label.
  for (double s = 0.01; s < 1.0; s += 0.01) {
    const double logit = std::log(s / (1.0 - s));
    for (const double c : {0.1, 3.0, 50.0}) {
      EXPECT_EQ(LabelFromScore(1.0 / (1.0 + std::exp(-c * logit))),
                LabelFromScore(s));
    }
  }
}

TEST(AttackTest, GradientsMatchFiniteDifferences) {
  Rng rng(RngSeed{2});
  std::vector<AttackFeature> vec, fused;
  for (int i = 0; i < 64; ++i) {
    const bool member = i % 2 == 0;
    vec.push_back(VectorFeature(AttackKind::kIIS,
                                {Gaussian(128, rng, member ? 0.2 : 0.0)},
                                L(member)));
    fused.push_back(VectorFeature(
        AttackKind::kIV,
        {Gaussian(64, rng), Gaussian(128, rng), Gaussian(128, rng)},
        L(member)));
  }
  AttackHyper h;
  h.epochs = 5;
  const AttackModel mlp = TrainAttack(vec, AttackArch::kMlp3, h);
  EXPECT_LT(AttackGradcheck(mlp, vec[3], 1e-4), 1e-3);
  const AttackModel fusion = TrainAttack(fused, AttackArch::kFusion3, h);
  EXPECT_LT(AttackGradcheck(fusion, fused[3], 1e-4), 1e-3);
  const auto pix = PixelFeatures(64, rng);
  const AttackModel cnn = TrainAttack(pix, AttackArch::kCnn, h);
  EXPECT_LT(AttackGradcheck(cnn, pix[3], 1e-4), 1e-3);

  AttackFeature zero = pix[0];
  std::fill(zero.pixel_payload->values.begin(), zero.pixel_payload->values.end(),
            0.0f);
  EXPECT_TRUE(std::isfinite(AttackGradcheck(cnn, zero, 1e-4)));
  EXPECT_THROW(AttackGradcheck(cnn, zero, 0.1), Error);
}

TEST(AttackTest, CnnLearnsPixelSignal) {
  Rng rng(RngSeed{3});
  const auto train = PixelFeatures(128, rng);
  const auto test = PixelFeatures(64, rng);
  AttackHyper h;
  h.epochs = 20;
  const AttackModel m = TrainAttack(train, AttackArch::kCnn, h);
  EXPECT_GT(AttackAccuracy(m, test), 0.95);
}

TEST(AttackTest, TrainingIsBitReproducibleAndCheckpointable) {
  Rng rng(RngSeed{4});
  std::vector<AttackFeature> fs;
  for (int i = 0; i < 100; ++i) {
    fs.push_back(VectorFeature(AttackKind::kIII,
                               {Gaussian(8, rng, i % 2 ? 0.5 : 0.0)},
                               L(i % 2)));
  }
  AttackHyper h;
  h.epochs = 30;
  h.seed = RngSeed{9};
  const AttackModel a = TrainAttack(fs, AttackArch::kMlp3, h);
  const AttackModel b = TrainAttack(fs, AttackArch::kMlp3, h);
  EXPECT_EQ(a.FlatParameters(), b.FlatParameters());
  EXPECT_EQ(a.train_log(), b.train_log());
  EXPECT_EQ(a.Infer(fs[0]).score, a.Infer(fs[0]).score);

  const auto path = std::filesystem::temp_directory_path() / "t2i_mia_attack.ckpt";
  a.Save(path);
  const AttackModel back = AttackModel::Load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.arch(), AttackArch::kMlp3);
  EXPECT_EQ(back.input_spec(), a.input_spec());
  EXPECT_EQ(back.train_log(), a.train_log());
  for (const auto& f : fs) EXPECT_EQ(back.Infer(f).score, a.Infer(f).score);
}

TEST(AttackTest, RejectsBadInputs) {
  Rng rng(RngSeed{5});
  std::vector<AttackFeature> one_class;
  for (int i = 0; i < 10; ++i) {
    one_class.push_back(
        VectorFeature(AttackKind::kIS, {Gaussian(4, rng)}, L(true)));
  }
  EXPECT_THROW(TrainAttack(one_class, AttackArch::kMlp3), Error);
  one_class[1].label = L(false);
  std::vector<AttackFeature> unlabeled = one_class;
  unlabeled[2].label.reset();
  EXPECT_THROW(TrainAttack(unlabeled, AttackArch::kMlp3), Error);
  std::vector<AttackFeature> mixed = one_class;
  mixed[3] = VectorFeature(AttackKind::kIS, {Gaussian(5, rng)}, L(false));
  EXPECT_THROW(TrainAttack(mixed, AttackArch::kMlp3), Error);
  EXPECT_THROW(TrainAttack(one_class, AttackArch::kCnn), Error);
  EXPECT_THROW(TrainAttack(one_class, AttackArch::kFusion3), Error);

  AttackHyper h;
  h.epochs = 2;
  const AttackModel m = TrainAttack(one_class, AttackArch::kMlp3, h);
  EXPECT_THROW(m.Infer(VectorFeature(AttackKind::kIS, {Gaussian(5, rng)}, {})),
               Error);
  EXPECT_THROW(m.Infer(VectorFeature(AttackKind::kIII, {Gaussian(4, rng)}, {})),
               Error);
  const auto d = m.Infer(VectorFeature(AttackKind::kIS, {Gaussian(4, rng)}, {}));
  EXPECT_GE(d.score, 0.0);
  EXPECT_LE(d.score, 1.0);
  EXPECT_EQ(AttackArchFromName(AttackArchName(AttackArch::kFusion3)),
            AttackArch::kFusion3);
  EXPECT_EQ(DefaultArch(AttackKind::kIIP), AttackArch::kCnn);
  EXPECT_EQ(DefaultArch(AttackKind::kIV), AttackArch::kFusion3);
  EXPECT_EQ(DefaultArch(AttackKind::kIIS), AttackArch::kMlp3);
}

}  // namespace
}  // namespace t2i_mia
