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

#include <filesystem>
#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>
#include <vector>

#include "gtest/gtest.h"
#include "t2i_mia/core/error.h"
#include "t2i_mia/synthdata/dataset.h"
#include "t2i_mia/synthdata/scene.h"

namespace t2i_mia {
namespace {

bool IsBackground(const ImageSample& img, int y, int x, const Rgb& bg) {
  for (int c = 0; c < 3; ++c) {
    if (img.at(c, y, x) != bg[c]) return false;
  }
  return true;
}

TEST(SynthdataTest, CenterPixelOfLargeRedCircleIsRed) {
  const SceneSpec spec{Shape::kCircle, Color::kRed, Size::kLarge,
                       Position::kCenter, Background::kWhite};
  const ImageSample img = RenderSample(spec);
  const Rgb red = ColorRgb(Color::kRed);
  const SceneDetail d = DetailOf(spec);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(img.at(c, 16, 16), std::clamp(red[c] + d.shade[c], 0.0f, 1.0f));
  }
  EXPECT_EQ(RenderSample(spec), img);
}

TEST(SynthdataTest, DetailIsAFixedFunctionOfTheScene) {
  std::set<std::tuple<int, int, float, float, float>> distinct;
  for (int i = 0; i < kNumSceneSpecs; ++i) {
    const SceneSpec spec = SceneFromIndex(i);
    const SceneDetail d = DetailOf(spec);
    const auto offsets = ValidOffsets(spec.shape, spec.size, spec.position);
    EXPECT_NE(std::find(offsets.begin(), offsets.end(), std::pair(0, 0)),
              offsets.end());
    EXPECT_NE(std::find(offsets.begin(), offsets.end(), std::pair(d.dx, d.dy)),
              offsets.end());
    for (const float s : d.shade) {
      EXPECT_TRUE(s == 0.0f || std::abs(s) == kShadeStep);
    }
    const SceneDetail again = DetailOf(spec);
    EXPECT_EQ(again.dx, d.dx);
    EXPECT_EQ(again.shade, d.shade);
    distinct.emplace(d.dx, d.dy, d.shade[0], d.shade[1], d.shade[2]);
  }
  // Enough variety that the caption does not predict the detail.
  EXPECT_GT(distinct.size(), 200u);
}

TEST(SynthdataTest, TopLeftSquareStaysInItsQuadrant) {
  const SceneSpec spec{Shape::kSquare, Color::kBlue, Size::kSmall,
                       Position::kTopLeft, Background::kBlack};
  const ImageSample img = RenderSample(spec);
  const Rgb bg = BackgroundRgb(Background::kBlack);
  int object = 0;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      if (IsBackground(img, y, x, bg)) continue;
      ++object;
      EXPECT_LT(y, 16);
      EXPECT_LT(x, 16);
    }
  }
  EXPECT_GT(object, 0);
}

TEST(SynthdataTest, RenderingIsInjectiveOverTheWholeSpace) {
  std::set<std::vector<float>> seen;
  for (int i = 0; i < kNumSceneSpecs; ++i) {
    const ImageSample img = RenderSample(SceneFromIndex(i));
    seen.emplace(img.pixels().begin(), img.pixels().end());
    EXPECT_EQ(SceneIndex(SceneFromIndex(i)), i);
  }
  EXPECT_EQ(static_cast<int>(seen.size()), kNumSceneSpecs);
}

TEST(SynthdataTest, AnalysisRecoversEverySceneFromPixels) {
  for (int i = 0; i < kNumSceneSpecs; ++i) {
    const SceneSpec spec = SceneFromIndex(i);
    const SceneAnalysis a = AnalyzeScene(RenderSample(spec).StripMetadata());
    EXPECT_EQ(a.scene, spec) << i;
    EXPECT_EQ(a.shape_iou, 1.0) << i;
    // Only the shade offset keeps confidence below 1.
    EXPECT_GE(a.confidence, 1.0 - std::sqrt(3.0) * kShadeStep - 1e-6) << i;
  }
}

TEST(SynthdataTest, CaptionsAreCanonicalAndInvertible) {
  const SceneSpec spec{Shape::kCircle, Color::kRed, Size::kLarge,
                       Position::kCenter, Background::kWhite};
  EXPECT_EQ(CanonicalCaption(spec).text(),
            "a large red circle at the center on white");
  for (int i = 0; i < kNumSceneSpecs; ++i) {
    const SceneSpec s = SceneFromIndex(i);
    EXPECT_EQ(SceneFromCaption(CanonicalCaption(s)), s);
  }
  EXPECT_FALSE(SceneFromCaption(Caption::Parse("a red circle")));
}

TEST(SynthdataTest, GenerateSingleSample) {
  const PairedDataset ds = GenerateDataset(1, RngSeed{1});
  ASSERT_EQ(ds.size(), 1);
  EXPECT_EQ(SceneFromCaption(ds.pairs[0].caption), ds.pairs[0].image.scene());
}

TEST(SynthdataTest, GenerateIsDeterministicAndValid) {
  const PairedDataset a = GenerateDataset(kNumSceneSpecs, RngSeed{7});
  const PairedDataset b = GenerateDataset(kNumSceneSpecs, RngSeed{7});
  ASSERT_EQ(a.size(), b.size());
  for (int i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.pairs[i].image, b.pairs[i].image);
    EXPECT_EQ(a.pairs[i].caption, b.pairs[i].caption);
  }
  EXPECT_NO_THROW(a.Validate());
  std::set<SceneSpec> scenes;
  for (const auto& p : a.pairs) scenes.insert(*p.image.scene());
  EXPECT_EQ(static_cast<int>(scenes.size()), kNumSceneSpecs);
  EXPECT_NE(GenerateDataset(5, RngSeed{8}).pairs[0].caption.text() +
                GenerateDataset(5, RngSeed{8}).pairs[1].caption.text(),
            GenerateDataset(5, RngSeed{9}).pairs[0].caption.text() +
                GenerateDataset(5, RngSeed{9}).pairs[1].caption.text());
}

TEST(SynthdataTest, GenerateRejectsImpossibleRequests) {
  EXPECT_THROW(GenerateDataset(0, RngSeed{1}), Error);
  EXPECT_THROW(GenerateDataset(kNumSceneSpecs + 1, RngSeed{1}), Error);
  GenerateOptions with_replacement;
  with_replacement.unique = false;
  EXPECT_EQ(GenerateDataset(kNumSceneSpecs + 1, RngSeed{1}, with_replacement)
                .size(),
            kNumSceneSpecs + 1);
}

TEST(SynthdataTest, PartitionBlocksAreDisjoint) {
  const std::vector<int> sizes = {640, 640, 640};
  const auto blocks = PartitionSceneSpace(RngSeed{3}, sizes);
  std::set<SceneSpec> all;
  for (const auto& b : blocks) all.insert(b.begin(), b.end());
  EXPECT_EQ(all.size(), 1920u);
  const std::vector<int> too_many = {1000, 1000};
  EXPECT_THROW(PartitionSceneSpace(RngSeed{3}, too_many), Error);
}

TEST(SynthdataTest, FilterThresholds) {
  const PairedDataset ds = GenerateDataset(300, RngSeed{11});
  const ImageScorer circle = [](const ImageSample& img) {
    return ShapeScore(img, Shape::kCircle);
  };
  EXPECT_EQ(AttributeFilter(ds, circle, 0.0).size(), ds.size());
  const ImageScorer below_one = [](const ImageSample&) { return 0.999; };
  EXPECT_EQ(AttributeFilter(ds, below_one, 1.0).size(), 0);
  EXPECT_THROW(AttributeFilter(ds, circle, 1.5), Error);

  const PairedDataset kept = AttributeFilter(ds, circle, 0.9);
  std::vector<std::string> expected;
  for (const auto& p : ds.pairs) {
    if (p.image.scene()->shape == Shape::kCircle) {
      expected.push_back(p.image.id());
    }
  }
  ASSERT_EQ(kept.size(), static_cast<int>(expected.size()));
  for (int i = 0; i < kept.size(); ++i) {
    EXPECT_EQ(kept.pairs[i].image.id(), expected[i]);
  }
}

TEST(SynthdataTest, FilterIsMonotoneInThreshold) {
  const PairedDataset ds = GenerateDataset(200, RngSeed{12});
  const ImageScorer square = [](const ImageSample& img) {
    return ShapeScore(img, Shape::kSquare);
  };
  int previous = ds.size() + 1;
  for (double t = 0.0; t <= 1.0; t += 0.05) {
    const int n = AttributeFilter(ds, square, t).size();
    EXPECT_LE(n, previous);
    previous = n;
  }
}

void CheckSplitInvariants(const AttackDataset& aux) {
  const int n = aux.size();
  std::vector<int> seen(n, 0);
  for (const int i : aux.train()) ++seen[i];
  for (const int i : aux.test()) ++seen[i];
  for (const int s : seen) EXPECT_EQ(s, 1);
  EXPECT_LE(std::abs(static_cast<int>(aux.train().size()) -
                     static_cast<int>(aux.test().size())),
            1);
  for (const auto* split : {&aux.train(), &aux.test()}) {
    int members = 0;
    for (const int i : *split) {
      members += aux.label(i) == MembershipLabel::kMember;
    }
    EXPECT_LE(std::abs(2 * members - static_cast<int>(split->size())), 2);
  }
}

std::vector<ImageSample> Images(int n, RngSeed seed, Origin origin) {
  GenerateOptions opts;
  opts.origin = origin;
  opts.name = origin == Origin::kMember ? "m" : "nm";
  return GenerateDataset(n, seed, opts).Images();
}

TEST(SynthdataTest, AuxiliaryBalancedHalfSplit) {
  const auto m = Images(100, RngSeed{1}, Origin::kMember);
  const auto nm = Images(100, RngSeed{2}, Origin::kLocalNonmember);
  const AttackDataset aux = BuildAuxiliary(m, nm, RngSeed{3});
  EXPECT_EQ(aux.per_class(), 100);
  EXPECT_EQ(aux.train().size(), 100u);
  EXPECT_EQ(aux.test().size(), 100u);
  int train_members = 0;
  for (const int i : aux.train()) {
    train_members += aux.label(i) == MembershipLabel::kMember;
  }
  EXPECT_EQ(train_members, 50);
  CheckSplitInvariants(aux);

  const AttackDataset again = BuildAuxiliary(m, nm, RngSeed{3});
  EXPECT_EQ(again.train(), aux.train());
  EXPECT_EQ(again.test(), aux.test());
}

TEST(SynthdataTest, AuxiliaryDownsamplesLargerSide) {
  const auto m = Images(120, RngSeed{1}, Origin::kMember);
  const auto nm = Images(100, RngSeed{2}, Origin::kLocalNonmember);
  const AttackDataset aux = BuildAuxiliary(m, nm, RngSeed{3});
  EXPECT_EQ(aux.members().size(), 100u);
  EXPECT_EQ(aux.nonmembers().size(), 100u);
  std::set<std::string> ids;
  for (const auto& s : m) ids.insert(s.id());
  for (const auto& s : aux.members()) EXPECT_TRUE(ids.count(s.id()));
  CheckSplitInvariants(aux);
  EXPECT_THROW(BuildAuxiliary({}, nm, RngSeed{3}), Error);
}

TEST(SynthdataTest, OddSizedAuxiliaryStaysBalanced) {
  const AttackDataset aux =
      BuildAuxiliary(Images(7, RngSeed{1}, Origin::kMember),
                     Images(9, RngSeed{2}, Origin::kLocalNonmember),
                     RngSeed{4});
  EXPECT_EQ(aux.per_class(), 7);
  CheckSplitInvariants(aux);
}

TEST(SynthdataTest, SubsampleFractions) {
  const auto m = Images(1000, RngSeed{1}, Origin::kMember);
  const auto nm = Images(1000, RngSeed{2}, Origin::kLocalNonmember);
  const AttackDataset aux = BuildAuxiliary(m, nm, RngSeed{3});

  const AttackDataset small = SubsampleFraction(aux, 0.05, RngSeed{5});
  EXPECT_EQ(small.per_class(), 50);
  CheckSplitInvariants(small);

  const AttackDataset full = SubsampleFraction(aux, 1.0, RngSeed{5});
  std::multiset<std::string> before, after;
  for (const auto& s : aux.members()) before.insert(s.id());
  for (const auto& s : full.members()) after.insert(s.id());
  EXPECT_EQ(before, after);

  EXPECT_EQ(SubsampleFraction(aux, 0.3, RngSeed{5}).per_class(), 300);
  const auto h1 = SubsampleFraction(aux, 0.5, RngSeed{6});
  const auto h2 = SubsampleFraction(aux, 0.5, RngSeed{6});
  EXPECT_EQ(h1.members(), h2.members());
  EXPECT_EQ(h1.train(), h2.train());

  EXPECT_THROW(SubsampleFraction(aux, 0.0, RngSeed{5}), Error);
  EXPECT_THROW(SubsampleFraction(aux, 0.001, RngSeed{5}), Error);
}

TEST(SynthdataTest, ManifestRoundTrips) {
  const auto dir = std::filesystem::temp_directory_path() / "t2i_mia_manifest";
  std::filesystem::remove_all(dir);
  const PairedDataset ds = GenerateDataset(12, RngSeed{21});
  const auto path = WriteDatasetManifest(ds, dir);
  const PairedDataset back = ReadDatasetManifest(path);
  ASSERT_EQ(back.size(), ds.size());
  for (int i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back.pairs[i].image, ds.pairs[i].image);
    EXPECT_EQ(back.pairs[i].caption, ds.pairs[i].caption);
  }
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace t2i_mia
