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

#ifndef T2I_MIA_HARNESS_HARNESS_H_
#define T2I_MIA_HARNESS_HARNESS_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "t2i_mia/attacks/attack.h"
#include "t2i_mia/core/rng.h"
#include "t2i_mia/eval/report.h"
#include "t2i_mia/features/features.h"
#include "t2i_mia/perception/captioner.h"
#include "t2i_mia/perception/embedder.h"
#include "t2i_mia/synthdata/dataset.h"
#include "t2i_mia/targetmodels/diffusion.h"
#include "t2i_mia/targetmodels/seq2seq.h"
#include "t2i_mia/targetmodels/target.h"

namespace t2i_mia {

inline constexpr int kConfigSchemaVersion = 1;

// Scene-space partition. The public pool trains the embedder and is disjoint
// from both member and local non-member pools.
struct DatasetConfig {
  std::uint64_t seed = 1;
  int member_pool = 640;
  int nonmember_pool = 640;
  int public_pool = 640;
};

struct TargetConfig {
  TargetFamily family = TargetFamily::kDiffusion;
  DiffusionOptions diffusion;
  Seq2SeqOptions seq2seq;
  std::uint64_t seed = 2;
  // A freshly initialized target; used for null calibration.
  bool untrained = false;
  // Explicit checkpoint; when empty the target is trained (or loaded from the
  // artifact cache) from the other fields.
  std::string checkpoint;
};

struct PerceptionConfig {
  CaptionerKind captioner = CaptionerKind::kProceduralOracle;
  double noise_rate = 0.0;
  EmbedderOptions embedder;
  std::uint64_t embedder_seed = 3;
  std::string embedder_checkpoint;
};

struct AttackConfig {
  std::vector<AttackKind> kinds{kAllAttackKinds.begin(), kAllAttackKinds.end()};
  FeatureOps ops;
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 64;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  std::string experiment_id = "experiment";
  DatasetConfig data;
  TargetConfig target;
  PerceptionConfig perception;
  AttackConfig attack;
  // Required for diffusion targets, absent otherwise.
  std::optional<int> steps = 50;
  double aux_fraction = 1.0;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "t2i_mia_out";

  // Checks every field and that referenced checkpoints exist.
  void Validate() const;
  nlohmann::json ToJson() const;
  // Missing fields keep their defaults; unknown fields and a wrong
  // schema_version are errors.
  static ExperimentConfig FromJson(const nlohmann::json& j);
  static ExperimentConfig FromFile(const std::filesystem::path& path);
  // "smoke" or "reference".
  static ExperimentConfig Preset(std::string_view name);
  // A preset name or a path to a JSON config file.
  static ExperimentConfig Resolve(std::string_view name_or_path);
};

enum class AblationAxis : std::uint8_t {
  kDenoisingSteps,
  kAuxiliaryFraction,
  kOperationGrid,
  kPerceptionSwap
};

std::string_view AblationAxisName(AblationAxis axis);
AblationAxis AblationAxisFromName(std::string_view name);

// Values per axis:
//   denoising_steps     integers in [1, 1000]
//   auxiliary_fraction  reals in (0, 1]
//   operation_grid      ignored; always expands to all 25 (same, cross) pairs
//   perception_swap     objects {"noise_rate": r} (captioner swap) or
//                       {"embedder_seed": s, "embedder_dim": d} (embedder
//                       swap, either key may be left out)
struct AblationSpec {
  AblationAxis axis = AblationAxis::kDenoisingSteps;
  std::vector<nlohmann::json> values;

  void Validate() const;
  static AblationSpec Default(AblationAxis axis);
};

// The three disjoint pools of the scene space.
struct ScenePools {
  PairedDataset members;
  PairedDataset nonmembers;
  PairedDataset public_pool;
};
ScenePools BuildPools(const DatasetConfig& data);

// Trained target and embedder for a config. Loaded from explicit checkpoint
// paths when given, else from the artifact cache, else trained and cached.
struct Artifacts {
  std::shared_ptr<const TargetModelHandle> target;
  std::shared_ptr<const Embedder> embedder;
  PairedDataset members;
  PairedDataset nonmembers;
  PairedDataset public_pool;
  std::string target_key;
  std::string embedder_key;
  double target_seconds = 0.0;
  double embedder_seconds = 0.0;
};

// $T2I_MIA_HOME, or ./t2i_mia_home when unset.
std::filesystem::path ArtifactHome();

Artifacts PrepareArtifacts(const ExperimentConfig& cfg);
// The two halves of PrepareArtifacts. `seconds` is training or load time.
TargetModelHandle LoadOrTrainTarget(const ExperimentConfig& cfg,
                                    const PairedDataset& members,
                                    std::string* key, double* seconds);
Embedder LoadOrTrainEmbedder(const ExperimentConfig& cfg,
                             const PairedDataset& public_pool,
                             std::string* key, double* seconds);

// Everything the query phase produced for one attack dataset.
struct QueryResults {
  AttackDataset aux;
  std::vector<ImageSample> generated;  // aligned with aux indices
  std::vector<Caption> captions;
  long target_queries = 0;
  double seconds = 0.0;
};

// Captions each auxiliary image and queries the target exactly once for it.
// Throws StageError("query") if the generation count differs from the
// number of images.
QueryResults RunQueryPhase(const ExperimentConfig& cfg, const Artifacts& art);

struct SplitFeatures {
  std::vector<AttackFeature> train;
  std::vector<AttackFeature> test;
};

// Labeled features per requested kind (same order as `kinds`), split by the
// auxiliary train/test indices.
std::vector<SplitFeatures> FeaturesFor(const QueryResults& q,
                                       const Embedder& emb,
                                       std::span<const AttackKind> kinds,
                                       const FeatureOps& ops);

// Attack training only ever sees `train`; `test` is used for scoring.
struct AttackRun {
  std::shared_ptr<const AttackModel> model;
  double test_accuracy = 0.0;
};
AttackRun TrainAndScore(const SplitFeatures& features, AttackKind kind,
                        const AttackConfig& acfg, std::uint64_t attack_seed,
                        RngSeed base);

struct FidPair {
  double member = 0.0;
  double nonmember = 0.0;
  std::vector<int> member_hist;
  std::vector<int> nonmember_hist;
};
// Query vs generated image embeddings over all auxiliary images, per class.
FidPair QueryFid(const QueryResults& q, const Embedder& emb);

inline constexpr int kCosineBins = 20;

struct RunOptions {
  // Loads artifacts once for several runs; PrepareArtifacts(cfg) if unset.
  const Artifacts* artifacts = nullptr;
  // Reuses a finished query phase (ablations that vary only attack-side
  // knobs). Must come from the same config apart from those knobs.
  const QueryResults* queries = nullptr;
  std::string axis;
  std::string axis_value;
};

// The attack pipeline: query phase, feature extraction, one record per
// (attack kind, attack seed). Writes results.jsonl and per-kind feature
// caches under cfg.out_dir; an INCOMPLETE marker stays behind on failure.
std::vector<ResultRecord> RunExperiment(const ExperimentConfig& cfg,
                                        const RunOptions& options = {});

// Re-trains attacks from the feature caches a previous run left in
// cfg.out_dir, without touching the target.
std::vector<ResultRecord> RetrainFromCache(const ExperimentConfig& cfg);

// One RunExperiment per value, sharing target, embedder and base seed.
// Each value writes to cfg.out_dir / <axis> / <value>.
std::vector<ResultRecord> RunAblation(const ExperimentConfig& cfg,
                                      const AblationSpec& spec);

// Exit code of the t2i-mia command line.
int CliMain(int argc, char** argv);

}  // namespace t2i_mia

#endif  // T2I_MIA_HARNESS_HARNESS_H_
