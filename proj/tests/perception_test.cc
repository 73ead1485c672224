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
#include "t2i_mia/core/error.h"
#include "t2i_mia/nn/gradcheck.h"
#include "t2i_mia/perception/captioner.h"
#include "t2i_mia/perception/embedder.h"
#include "t2i_mia/synthdata/dataset.h"
#include "t2i_mia/synthdata/scene.h"

namespace t2i_mia {
namespace {

int AttributeErrors(const SceneSpec& a, const SceneSpec& b) {
  return (a.shape != b.shape) + (a.color != b.color) + (a.size != b.size) +
         (a.position != b.position) + (a.background != b.background);
}

TEST(CaptionerTest, OracleReadsPixelsNotMetadata) {
  const SceneSpec spec{Shape::kCircle, Color::kRed, Size::kLarge,
                       Position::kCenter, Background::kWhite};
  const ImageSample stripped = RenderSample(spec, "x").StripMetadata();
  ASSERT_FALSE(stripped.scene());
  const CaptionResult r = Captioner::ProceduralOracle().Describe(stripped);
  EXPECT_EQ(r.caption.text(), "a large red circle at the center on white");
  EXPECT_FALSE(r.flagged);
}

TEST(CaptionerTest, OracleIsExactOnRenderedScenes) {
  const PairedDataset ds = GenerateDataset(500, RngSeed{4});
  const Captioner oracle = Captioner::ProceduralOracle();
  EXPECT_EQ(oracle.noise_rate(), 0.0);
  for (const auto& p : ds.pairs) {
    EXPECT_EQ(oracle.Describe(p.image.StripMetadata()).caption, p.caption);
  }
  const Captioner zero = Captioner::NoisyOracle(0.0, RngSeed{1});
  for (const auto& p : ds.pairs) {
    EXPECT_EQ(zero.Describe(p.image).caption, p.caption);
  }
}

TEST(CaptionerTest, NoisyOracleErrorRate) {
  GenerateOptions opts;
  opts.unique = false;
  const PairedDataset ds = GenerateDataset(1000, RngSeed{5}, opts);
  const Captioner noisy = Captioner::NoisyOracle(0.2, RngSeed{6});
  int errors = 0;
  for (const auto& p : ds.pairs) {
    const auto scene = SceneFromCaption(noisy.Describe(p.image).caption);
    ASSERT_TRUE(scene);
    errors += AttributeErrors(*scene, *p.image.scene());
  }
  EXPECT_NEAR(errors / 5000.0, 0.2, 0.03);
  // Pure function of the pixels.
  EXPECT_EQ(noisy.Describe(ds.pairs[0].image).caption,
            noisy.Describe(ds.pairs[0].image.StripMetadata()).caption);
}

TEST(CaptionerTest, UnrecognizableImagesAreFlagged) {
  Rng rng(RngSeed{7});
  std::vector<float> px(3 * 32 * 32);
  for (float& v : px) v = static_cast<float>(rng.Uniform());
  const CaptionResult r = Captioner::ProceduralOracle().Describe(
      ImageSample("noise", Origin::kGenerated, 32, 32, 3, px));
  EXPECT_TRUE(r.flagged);
  EXPECT_LT(r.confidence, Captioner::kFlagBelowConfidence);
  EXPECT_TRUE(SceneFromCaption(r.caption));

  const CaptionResult blank = Captioner::ProceduralOracle().Describe(
      ImageSample("blank", Origin::kGenerated, 32, 32, 3,
                  std::vector<float>(3 * 32 * 32, 1.0f)));
  EXPECT_TRUE(blank.flagged);
  EXPECT_EQ(blank.confidence, 0.0);
}

TEST(CaptionerTest, ExternalAdapterIsUnavailable) {
  EXPECT_THROW(Captioner::ExternalAdapter("blip"), Error);
  EXPECT_THROW(Embedder::ExternalAdapter("clip"), Error);
  EXPECT_THROW(Captioner::NoisyOracle(1.5, RngSeed{1}), Error);
}

TEST(TwoTowerTest, GradientsMatchFiniteDifferences) {
  Rng rng(RngSeed{2});
  TwoTowerNet<double> net(6, rng);
  const int batch = 3;
  nn::Map2d<double> x{nn::Matrix<double>(3, batch * 32 * 32), 32, 32, batch};
  for (Eigen::Index i = 0; i < x.data.size(); ++i) x.data.data()[i] = rng.Uniform();
  const std::vector<std::vector<int>> tokens = {{0, 4, 9}, {1, 2}, {20, 21, 27}};
  auto loss = [&] {
    return SymmetricInfoNce<double>(net.ImageForward(x, nullptr),
                                    net.TextForward(tokens, nullptr), 0.07)
        .loss;
  };
  TwoTowerNet<double>::ImageCache ic;
  TwoTowerNet<double>::TextCache tc;
  const auto l = SymmetricInfoNce<double>(net.ImageForward(x, &ic),
                                          net.TextForward(tokens, &tc), 0.07);
  nn::ZeroGrads(net.Params());
  net.ImageBackward(ic, l.d_image);
  net.TextBackward(tc, tokens, l.d_text);
  Rng pick(RngSeed{3});
  const auto r = nn::CheckGradients<double>(net.Params(), loss, 1e-6, 300, pick);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(TwoTowerTest, InfoNceOfPerfectAlignment) {
  // Orthonormal matched pairs: loss = log(1 + (n-1) exp(-1/tau)).
  const nn::Matrix<double> eye = nn::Matrix<double>::Identity(4, 4);
  const auto l = SymmetricInfoNce<double>(eye, eye, 0.5);
  EXPECT_NEAR(l.loss, std::log(1.0 + 3.0 * std::exp(-2.0)), 1e-12);
}

struct TrainedEmbedder {
  Embedder embedder;
  PairedDataset heldout;
};

const TrainedEmbedder& Trained() {
  static const TrainedEmbedder t = [] {
    const std::vector<int> sizes = {512, 200};
    const auto blocks = PartitionSceneSpace(RngSeed{10}, sizes);
    EmbedderOptions o;
    o.epochs = 60;
    return TrainedEmbedder{
        TrainTwoTower(DatasetFromScenes("pub", RngSeed{10}, blocks[0],
                                        Origin::kLocalNonmember),
                      o, RngSeed{11}),
        DatasetFromScenes("held", RngSeed{10}, blocks[1],
                          Origin::kLocalNonmember)};
  }();
  return t;
}

TEST(EmbedderTest, MatchedPairsBeatMismatchedPairs) {
  const auto& t = Trained();
  double matched = 0.0, mismatched = 0.0;
  const int n = t.heldout.size();
  std::vector<EmbeddingVector> img, txt;
  for (const auto& p : t.heldout.pairs) {
    img.push_back(t.embedder.EmbedImage(p.image));
    txt.push_back(t.embedder.EmbedText(p.caption));
  }
  for (int i = 0; i < n; ++i) {
    matched += CosineSimilarity(img[i], txt[i]) / n;
    mismatched += CosineSimilarity(img[i], txt[(i + 1) % n]) / n;
  }
  EXPECT_GE(matched - mismatched, 0.2);
  int above = 0;
  for (int i = 0; i < n; ++i) above += CosineSimilarity(img[i], txt[i]) > mismatched;
  EXPECT_GT(above, n * 9 / 10);
}

TEST(EmbedderTest, OutputsAreUnitNormDeterministicAndTagged) {
  const auto& t = Trained();
  EXPECT_EQ(t.embedder.dim(), 64);
  for (const auto& p : t.heldout.pairs) {
    const EmbeddingVector a = t.embedder.EmbedImage(p.image);
    const EmbeddingVector b = t.embedder.EmbedText(p.caption);
    EXPECT_EQ(a.dim(), 64);
    EXPECT_EQ(a.modality(), Modality::kImage);
    EXPECT_EQ(b.modality(), Modality::kText);
    double na = 0.0, nb = 0.0;
    for (const float v : a.values()) na += static_cast<double>(v) * v;
    for (const float v : b.values()) nb += static_cast<double>(v) * v;
    EXPECT_NEAR(std::sqrt(na), 1.0, 1e-6);
    EXPECT_NEAR(std::sqrt(nb), 1.0, 1e-6);
    EXPECT_EQ(a, t.embedder.EmbedImage(p.image));
  }
}

TEST(EmbedderTest, TrainingIsDeterministicAndCheckpointable) {
  const PairedDataset ds = GenerateDataset(64, RngSeed{12});
  EmbedderOptions o;
  o.dim = 48;
  o.epochs = 3;
  o.batch_size = 16;
  TrainReport ra, rb;
  const Embedder a = TrainTwoTower(ds, o, RngSeed{13}, &ra);
  const Embedder b = TrainTwoTower(ds, o, RngSeed{13}, &rb);
  EXPECT_EQ(ra.epoch_losses, rb.epoch_losses);
  EXPECT_EQ(a.EmbedImage(ds.pairs[0].image), b.EmbedImage(ds.pairs[0].image));
  EXPECT_EQ(a.EmbedImage(ds.pairs[0].image).dim(), 48);

  const auto path = std::filesystem::temp_directory_path() / "t2i_mia_emb.ckpt";
  a.Save(path);
  const Embedder back = Embedder::Load(path);
  EXPECT_EQ(back.EmbedText(ds.pairs[3].caption), a.EmbedText(ds.pairs[3].caption));
  EXPECT_EQ(back.train_manifest(), a.train_manifest());
  std::filesystem::remove(path);

  o.batch_size = 64;
  EXPECT_THROW(TrainTwoTower(ds, o, RngSeed{13}), Error);
}

}  // namespace
}  // namespace t2i_mia
