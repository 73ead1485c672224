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

#ifndef T2I_MIA_SYNTHDATA_DATASET_H_
#define T2I_MIA_SYNTHDATA_DATASET_H_

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "t2i_mia/core/rng.h"
#include "t2i_mia/core/scene_spec.h"
#include "t2i_mia/core/types.h"

namespace t2i_mia {

struct CaptionedImage {
  Caption caption;
  ImageSample image;
};

// A set of (caption, image) pairs, e.g. a target model's training set.
struct PairedDataset {
  std::string name;
  RngSeed seed;
  std::vector<CaptionedImage> pairs;

  int size() const { return static_cast<int>(pairs.size()); }
  std::vector<ImageSample> Images() const;

  // Throws Error on duplicate ids, missing scenes or non-canonical captions.
  void Validate() const;
};

struct GenerateOptions {
  // Sample scenes without replacement; n must not exceed the scene space.
  bool unique = true;
  std::string name = "dataset";
  Origin origin = Origin::kMember;
};

// Samples n scenes from the full SceneSpec space with `seed` and renders
// them. Ids are "<name>-<index>" (zero-padded to five digits).
PairedDataset GenerateDataset(int n, RngSeed seed,
                              const GenerateOptions& options = {});

PairedDataset DatasetFromScenes(std::string name, RngSeed seed,
                                std::span<const SceneSpec> scenes,
                                Origin origin);

// Splits a seeded permutation of the scene space into consecutive disjoint
// blocks of the requested sizes. The blocks share one distribution.
std::vector<std::vector<SceneSpec>> PartitionSceneSpace(
    RngSeed seed, std::span<const int> sizes);

using ImageScorer = std::function<double(const ImageSample&)>;

// Keeps exactly the pairs whose score is >= threshold, preserving order.
PairedDataset AttributeFilter(const PairedDataset& dataset,
                              const ImageScorer& scorer, double threshold);

// Auxiliary dataset: equal-size member and non-member images plus a
// label-stratified half split. Index i < n refers to members()[i]; index
// n + j refers to nonmembers()[j].
class AttackDataset {
 public:
  AttackDataset(std::vector<ImageSample> members,
                std::vector<ImageSample> nonmembers, std::vector<int> train,
                std::vector<int> test);

  const std::vector<ImageSample>& members() const { return members_; }
  const std::vector<ImageSample>& nonmembers() const { return nonmembers_; }
  const std::vector<int>& train() const { return train_; }
  const std::vector<int>& test() const { return test_; }

  int per_class() const { return static_cast<int>(members_.size()); }
  int size() const { return 2 * per_class(); }
  const ImageSample& image(int index) const;
  MembershipLabel label(int index) const;

 private:
  std::vector<ImageSample> members_;
  std::vector<ImageSample> nonmembers_;
  std::vector<int> train_;
  std::vector<int> test_;
};

// Downsamples the larger side to the smaller side's size, then splits each
// class in half. Throws Error when either input is empty.
AttackDataset BuildAuxiliary(std::span<const ImageSample> members,
                             std::span<const ImageSample> local_nonmembers,
                             RngSeed seed);

// Keeps ceil(fraction * n) images of each class and re-splits by half.
// Throws Error unless fraction is in (0, 1] and the class size is >= 2.
AttackDataset SubsampleFraction(const AttackDataset& aux, double fraction,
                                RngSeed seed);

// Writes <dir>/manifest.json and one serialized sample per pair under
// <dir>/images/. Returns the manifest path.
std::filesystem::path WriteDatasetManifest(const PairedDataset& dataset,
                                           const std::filesystem::path& dir);
PairedDataset ReadDatasetManifest(const std::filesystem::path& manifest);

}  // namespace t2i_mia

#endif  // T2I_MIA_SYNTHDATA_DATASET_H_
