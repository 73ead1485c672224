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

#include "t2i_mia/harness/harness.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <utility>

#include "t2i_mia/core/error.h"
#include "t2i_mia/eval/metrics.h"

namespace t2i_mia {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void Log(const std::string& msg) {
  if (std::getenv("T2I_MIA_QUIET") == nullptr) std::clog << "[t2i-mia] " << msg << "\n";
}

// Runs `fn`, rethrowing library errors tagged with `stage`.
template <typename Fn>
auto Staged(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void CheckKeys(const json& j, const std::set<std::string>& allowed,
               const std::string& where) {
  if (!j.is_object()) throw Error(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw Error("unknown config field '" + where + "." + key + "'");
    }
  }
}

std::set<std::string> KeysOf(const json& j) {
  std::set<std::string> out;
  for (const auto& [key, _] : j.items()) out.insert(key);
  return out;
}

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string Hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Writes via a temporary so concurrent readers never see a partial file.
template <typename SaveFn>
void AtomicSave(const fs::path& path, SaveFn&& save) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp" + Hex(HashBytes(path.string()) ^
                                                    static_cast<std::uint64_t>(
                                                        std::chrono::steady_clock::now()
                                                            .time_since_epoch()
                                                            .count()));
  save(tmp);
  fs::rename(tmp, path);
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string ValueString(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

json ConfigSnapshot(const ExperimentConfig& cfg) {
  json j = cfg.ToJson();
  j.erase("out_dir");
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

nlohmann::json ExperimentConfig::ToJson() const {
  json attack_kinds = json::array();
  for (const AttackKind k : attack.kinds) attack_kinds.push_back(AttackKindName(k));
  json j = {
      {"schema_version", schema_version},
      {"experiment_id", experiment_id},
      {"seed", seed},
      {"aux_fraction", aux_fraction},
      {"out_dir", out_dir.string()},
      {"data",
       {{"seed", data.seed},
        {"member_pool", data.member_pool},
        {"nonmember_pool", data.nonmember_pool},
        {"public_pool", data.public_pool}}},
      {"target",
       {{"family", TargetFamilyName(target.family)},
        {"seed", target.seed},
        {"untrained", target.untrained},
        {"checkpoint", target.checkpoint},
        {"diffusion", target.diffusion.ToJson()},
        {"seq2seq", target.seq2seq.ToJson()}}},
      {"perception",
       {{"captioner", CaptionerKindName(perception.captioner)},
        {"noise_rate", perception.noise_rate},
        {"embedder", perception.embedder.ToJson()},
        {"embedder_seed", perception.embedder_seed},
        {"embedder_checkpoint", perception.embedder_checkpoint}}},
      {"attack",
       {{"kinds", attack_kinds},
        {"op_same", PairwiseOpName(attack.ops.same)},
        {"op_cross", PairwiseOpName(attack.ops.cross)},
        {"learning_rate", attack.learning_rate},
        {"epochs", attack.epochs},
        {"batch_size", attack.batch_size},
        {"seeds", attack.seeds}}},
  };
  j["steps"] = steps ? json(*steps) : json(nullptr);
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j) {
  ExperimentConfig c;
  const json defaults = c.ToJson();
  CheckKeys(j, KeysOf(defaults), "config");
  if (!j.contains("schema_version")) throw Error("config needs schema_version");
  c.schema_version = j.at("schema_version").get<int>();
  if (c.schema_version != kConfigSchemaVersion) {
    throw Error("unsupported config schema_version " +
                std::to_string(c.schema_version) + " (expected " +
                std::to_string(kConfigSchemaVersion) + ")");
  }
  Read(j, "experiment_id", c.experiment_id);
  Read(j, "seed", c.seed);
  Read(j, "aux_fraction", c.aux_fraction);
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("steps")) {
    if (j.at("steps").is_null()) {
      c.steps.reset();
    } else {
      c.steps = j.at("steps").get<int>();
    }
  }
  if (j.contains("data")) {
    const json& d = j.at("data");
    CheckKeys(d, KeysOf(defaults.at("data")), "data");
    Read(d, "seed", c.data.seed);
    Read(d, "member_pool", c.data.member_pool);
    Read(d, "nonmember_pool", c.data.nonmember_pool);
    Read(d, "public_pool", c.data.public_pool);
  }
  if (j.contains("target")) {
    const json& t = j.at("target");
    CheckKeys(t, KeysOf(defaults.at("target")), "target");
    if (t.contains("family")) {
      c.target.family = TargetFamilyFromName(t.at("family").get<std::string>());
    }
    Read(t, "seed", c.target.seed);
    Read(t, "untrained", c.target.untrained);
    Read(t, "checkpoint", c.target.checkpoint);
    if (t.contains("diffusion")) {
      CheckKeys(t.at("diffusion"), KeysOf(defaults.at("target").at("diffusion")),
                "target.diffusion");
      c.target.diffusion = DiffusionOptions::FromJson(t.at("diffusion"));
    }
    if (t.contains("seq2seq")) {
      CheckKeys(t.at("seq2seq"), KeysOf(defaults.at("target").at("seq2seq")),
                "target.seq2seq");
      c.target.seq2seq = Seq2SeqOptions::FromJson(t.at("seq2seq"));
    }
  }
  if (j.contains("perception")) {
    const json& p = j.at("perception");
    CheckKeys(p, KeysOf(defaults.at("perception")), "perception");
    if (p.contains("captioner")) {
      c.perception.captioner =
          CaptionerKindFromName(p.at("captioner").get<std::string>());
    }
    Read(p, "noise_rate", c.perception.noise_rate);
    Read(p, "embedder_seed", c.perception.embedder_seed);
    Read(p, "embedder_checkpoint", c.perception.embedder_checkpoint);
    if (p.contains("embedder")) {
      CheckKeys(p.at("embedder"),
                KeysOf(defaults.at("perception").at("embedder")),
                "perception.embedder");
      c.perception.embedder = EmbedderOptions::FromJson(p.at("embedder"));
    }
  }
  if (j.contains("attack")) {
    const json& a = j.at("attack");
    CheckKeys(a, KeysOf(defaults.at("attack")), "attack");
    if (a.contains("kinds")) {
      c.attack.kinds.clear();
      for (const auto& k : a.at("kinds")) {
        c.attack.kinds.push_back(AttackKindFromName(k.get<std::string>()));
      }
    }
    if (a.contains("op_same")) {
      c.attack.ops.same = PairwiseOpFromName(a.at("op_same").get<std::string>());
    }
    if (a.contains("op_cross")) {
      c.attack.ops.cross = PairwiseOpFromName(a.at("op_cross").get<std::string>());
    }
    Read(a, "learning_rate", c.attack.learning_rate);
    Read(a, "epochs", c.attack.epochs);
    Read(a, "batch_size", c.attack.batch_size);
    Read(a, "seeds", c.attack.seeds);
  }
  return c;
}

ExperimentConfig ExperimentConfig::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("config " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    return FromJson(j);
  } catch (const json::exception& e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
}

ExperimentConfig ExperimentConfig::Preset(std::string_view name) {
  ExperimentConfig c;
  if (name == "reference") {
    c.experiment_id = "reference";
    c.out_dir = "t2i_mia_out/reference";
    c.data.member_pool = 480;
    c.data.nonmember_pool = 480;
    c.data.public_pool = 960;
    c.target.diffusion.epochs = 600;
    c.target.diffusion.batch_size = 32;
    c.target.diffusion.learning_rate = 2e-3;
    return c;
  }
  if (name == "smoke") {
    c.experiment_id = "smoke";
    c.out_dir = "t2i_mia_out/smoke";
    c.data.member_pool = 50;
    c.data.nonmember_pool = 50;
    c.data.public_pool = 128;
    c.target.diffusion.epochs = 10;
    c.target.diffusion.batch_size = 32;
    c.target.diffusion.learning_rate = 2e-3;
    c.perception.embedder.epochs = 5;
    c.perception.embedder.batch_size = 64;
    c.attack.epochs = 20;
    c.attack.seeds = {1};
    c.steps = 10;
    return c;
  }
  throw Error("unknown preset '" + std::string(name) +
              "' (expected smoke or reference)");
}

ExperimentConfig ExperimentConfig::Resolve(std::string_view name_or_path) {
  if (name_or_path == "smoke" || name_or_path == "reference") {
    return Preset(name_or_path);
  }
  return FromFile(fs::path(name_or_path));
}

void ExperimentConfig::Validate() const {
  if (schema_version != kConfigSchemaVersion) {
    throw Error("unsupported config schema_version");
  }
  if (experiment_id.empty()) throw Error("experiment_id must not be empty");
  if (data.member_pool < 2 || data.nonmember_pool < 2) {
    throw Error("member and non-member pools need at least 2 scenes each");
  }
  if (data.public_pool < 2) throw Error("public pool needs at least 2 scenes");
  if (data.member_pool + data.nonmember_pool + data.public_pool > kNumSceneSpecs) {
    throw Error("pools need " +
                std::to_string(data.member_pool + data.nonmember_pool +
                               data.public_pool) +
                " scenes but the scene space has " +
                std::to_string(kNumSceneSpecs));
  }
  const bool diffusion = target.family == TargetFamily::kDiffusion;
  if (diffusion != steps.has_value()) {
    throw Error(diffusion ? "steps is required for diffusion targets"
                          : "steps applies only to diffusion targets");
  }
  if (steps && (*steps < 1 || *steps > kMaxDenoisingSteps)) {
    throw Error("steps must be in [1, " + std::to_string(kMaxDenoisingSteps) + "]");
  }
  if (!(aux_fraction > 0.0 && aux_fraction <= 1.0)) {
    throw Error("aux_fraction must be in (0, 1]");
  }
  if (!target.checkpoint.empty() && !fs::exists(target.checkpoint)) {
    throw Error("target checkpoint " + target.checkpoint + " does not exist");
  }
  if (!perception.embedder_checkpoint.empty() &&
      !fs::exists(perception.embedder_checkpoint)) {
    throw Error("embedder checkpoint " + perception.embedder_checkpoint +
                " does not exist");
  }
  if (!target.checkpoint.empty() && target.untrained) {
    throw Error("target.checkpoint and target.untrained are exclusive");
  }
  if (!(perception.noise_rate >= 0.0 && perception.noise_rate <= 1.0)) {
    throw Error("noise_rate must be in [0, 1]");
  }
  if (perception.captioner == CaptionerKind::kProceduralOracle &&
      perception.noise_rate != 0.0) {
    throw Error("noise_rate needs the noisy_oracle captioner");
  }
  if (attack.kinds.empty()) throw Error("attack.kinds must not be empty");
  if (std::set<AttackKind>(attack.kinds.begin(), attack.kinds.end()).size() !=
      attack.kinds.size()) {
    throw Error("attack.kinds has duplicates");
  }
  if (attack.seeds.empty()) throw Error("attack.seeds must not be empty");
  if (!(attack.learning_rate > 0.0) || attack.epochs < 1 || attack.batch_size < 1) {
    throw Error("attack learning_rate, epochs and batch_size must be positive");
  }
  if (out_dir.empty()) throw Error("out_dir must not be empty");
}

// ---------------------------------------------------------------------------
// Ablation spec

std::string_view AblationAxisName(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kDenoisingSteps:
      return "denoising_steps";
    case AblationAxis::kAuxiliaryFraction:
      return "auxiliary_fraction";
    case AblationAxis::kOperationGrid:
      return "operation_grid";
    case AblationAxis::kPerceptionSwap:
      return "perception_swap";
  }
  throw Error("unknown ablation axis");
}

AblationAxis AblationAxisFromName(std::string_view name) {
  for (const AblationAxis a :
       {AblationAxis::kDenoisingSteps, AblationAxis::kAuxiliaryFraction,
        AblationAxis::kOperationGrid, AblationAxis::kPerceptionSwap}) {
    if (AblationAxisName(a) == name) return a;
  }
  throw Error("unknown ablation axis '" + std::string(name) +
              "' (expected denoising_steps, auxiliary_fraction, "
              "operation_grid or perception_swap)");
}

void AblationSpec::Validate() const {
  if (axis == AblationAxis::kOperationGrid) return;
  if (values.empty()) throw Error("ablation values must not be empty");
  for (const json& v : values) {
    switch (axis) {
      case AblationAxis::kDenoisingSteps:
        if (!v.is_number_integer() || v.get<int>() < 1 ||
            v.get<int>() > kMaxDenoisingSteps) {
          throw Error("denoising_steps values must be integers in [1, 1000]");
        }
        break;
      case AblationAxis::kAuxiliaryFraction:
        if (!v.is_number() || !(v.get<double>() > 0.0 && v.get<double>() <= 1.0)) {
          throw Error("auxiliary_fraction values must be in (0, 1]");
        }
        break;
      case AblationAxis::kPerceptionSwap: {
        const bool captioner = v.is_object() && v.size() == 1 && v.contains("noise_rate");
        bool embedder = v.is_object() && !v.empty();
        if (embedder) {
          for (const auto& [k, x] : v.items()) {
            embedder = embedder && (k == "embedder_seed" || k == "embedder_dim") &&
                       x.is_number_integer();
          }
        }
        if (!captioner && !embedder) {
          throw Error(
              "perception_swap values must be {\"noise_rate\": r} or "
              "{\"embedder_seed\": s, \"embedder_dim\": d} (either key optional)");
        }
        if (captioner) {
          const double r = v.at("noise_rate").get<double>();
          if (!(r >= 0.0 && r <= 1.0)) throw Error("noise_rate must be in [0, 1]");
        }
        if (v.contains("embedder_dim") && v.at("embedder_dim").get<int>() < 1) {
          throw Error("embedder_dim must be positive");
        }
        break;
      }
      case AblationAxis::kOperationGrid:
        break;
    }
  }
}

AblationSpec AblationSpec::Default(AblationAxis axis) {
  AblationSpec s;
  s.axis = axis;
  switch (axis) {
    case AblationAxis::kDenoisingSteps:
      s.values = {20, 50, 100, 200};
      break;
    case AblationAxis::kAuxiliaryFraction:
      s.values = {0.05, 0.1, 0.3, 0.5, 1.0};
      break;
    case AblationAxis::kOperationGrid:
      break;
    case AblationAxis::kPerceptionSwap:
      s.values = {json{{"noise_rate", 0.0}}, json{{"noise_rate", 0.1}},
                  json{{"noise_rate", 0.2}}, json{{"noise_rate", 0.3}},
                  json{{"embedder_seed", 4}, {"embedder_dim", 48}}};
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Artifacts

fs::path ArtifactHome() {
  const char* home = std::getenv("T2I_MIA_HOME");
  return (home != nullptr && *home != '\0') ? fs::path(home)
                                            : fs::path("t2i_mia_home");
}

ScenePools BuildPools(const DatasetConfig& data) {
  const std::vector<int> sizes = {data.member_pool, data.nonmember_pool,
                                  data.public_pool};
  const RngSeed seed{data.seed};
  const auto blocks = PartitionSceneSpace(seed, sizes);
  return {DatasetFromScenes("members", seed, blocks[0], Origin::kMember),
          DatasetFromScenes("nonmembers", seed, blocks[1],
                            Origin::kLocalNonmember),
          // Disjoint from both; the origin tag only says "not a member".
          DatasetFromScenes("public", seed, blocks[2], Origin::kLocalNonmember)};
}

TargetModelHandle LoadOrTrainTarget(const ExperimentConfig& cfg,
                                    const PairedDataset& members,
                                    std::string* key, double* seconds) {
  Stopwatch sw;
  const TargetConfig& t = cfg.target;
  const bool diffusion = t.family == TargetFamily::kDiffusion;
  auto done = [&](TargetModelHandle h, std::string k) {
    if (key != nullptr) *key = std::move(k);
    if (seconds != nullptr) *seconds = sw.Seconds();
    return h;
  };
  if (!t.checkpoint.empty()) {
    return done(TargetModelHandle::Load(t.checkpoint), t.checkpoint);
  }
  if (t.untrained) {
    return done(diffusion ? UntrainedDiffusionTarget(t.diffusion, RngSeed{t.seed})
                          : UntrainedSeq2SeqTarget(t.seq2seq, RngSeed{t.seed}),
                "untrained");
  }
  const json id = {{"family", TargetFamilyName(t.family)},
                   {"options", diffusion ? t.diffusion.ToJson() : t.seq2seq.ToJson()},
                   {"seed", t.seed},
                   {"data", ConfigSnapshot(cfg).at("data")}};
  const std::string k = "target-" + Hex(HashBytes(id.dump()));
  const fs::path path = ArtifactHome() / (k + ".ckpt");
  if (fs::exists(path)) {
    Log("loading target " + path.string());
    return done(TargetModelHandle::Load(path), k);
  }
  Log("training " + std::string(TargetFamilyName(t.family)) + " target on " +
      std::to_string(members.size()) + " members");
  TargetModelHandle h =
      diffusion ? TrainDiffusionTarget(members, t.diffusion, RngSeed{t.seed})
                : TrainSeq2SeqTarget(members, t.seq2seq, RngSeed{t.seed});
  AtomicSave(path, [&](const fs::path& p) { h.Save(p); });
  return done(std::move(h), k);
}

Embedder LoadOrTrainEmbedder(const ExperimentConfig& cfg,
                             const PairedDataset& public_pool, std::string* key,
                             double* seconds) {
  Stopwatch sw;
  const PerceptionConfig& p = cfg.perception;
  auto done = [&](Embedder e, std::string k) {
    if (key != nullptr) *key = std::move(k);
    if (seconds != nullptr) *seconds = sw.Seconds();
    return e;
  };
  if (!p.embedder_checkpoint.empty()) {
    return done(Embedder::Load(p.embedder_checkpoint), p.embedder_checkpoint);
  }
  const json id = {{"options", p.embedder.ToJson()},
                   {"seed", p.embedder_seed},
                   {"data", ConfigSnapshot(cfg).at("data")}};
  const std::string k = "embedder-" + Hex(HashBytes(id.dump()));
  const fs::path path = ArtifactHome() / (k + ".ckpt");
  if (fs::exists(path)) {
    Log("loading embedder " + path.string());
    return done(Embedder::Load(path), k);
  }
  Log("training embedder on " + std::to_string(public_pool.size()) +
      " public pairs");
  Embedder e = TrainTwoTower(public_pool, p.embedder, RngSeed{p.embedder_seed});
  AtomicSave(path, [&](const fs::path& out) { e.Save(out); });
  return done(std::move(e), k);
}

Artifacts PrepareArtifacts(const ExperimentConfig& cfg) {
  cfg.Validate();
  Artifacts a;
  ScenePools pools = Staged("data", [&] { return BuildPools(cfg.data); });
  a.target = Staged("target", [&] {
    return std::make_shared<const TargetModelHandle>(
        LoadOrTrainTarget(cfg, pools.members, &a.target_key, &a.target_seconds));
  });
  a.embedder = Staged("embedder", [&] {
    return std::make_shared<const Embedder>(LoadOrTrainEmbedder(
        cfg, pools.public_pool, &a.embedder_key, &a.embedder_seconds));
  });
  a.members = std::move(pools.members);
  a.nonmembers = std::move(pools.nonmembers);
  a.public_pool = std::move(pools.public_pool);
  return a;
}

// ---------------------------------------------------------------------------
// Pipeline stages

QueryResults RunQueryPhase(const ExperimentConfig& cfg, const Artifacts& art) {
  Stopwatch sw;
  const RngSeed base{cfg.seed};
  AttackDataset aux = Staged("aux", [&] {
    const auto members = art.members.Images();
    const auto nonmembers = art.nonmembers.Images();
    AttackDataset full =
        BuildAuxiliary(members, nonmembers, DeriveSeed(base, "aux"));
    if (cfg.aux_fraction >= 1.0) return full;
    return SubsampleFraction(full, cfg.aux_fraction, DeriveSeed(base, "fraction"));
  });
  const Captioner captioner = Staged("caption", [&] {
    switch (cfg.perception.captioner) {
      case CaptionerKind::kProceduralOracle:
        return Captioner::ProceduralOracle();
      case CaptionerKind::kNoisyOracle:
        return Captioner::NoisyOracle(cfg.perception.noise_rate,
                                      DeriveSeed(base, "captioner"));
      case CaptionerKind::kExternalAdapter:
        return Captioner::ExternalAdapter("external");
    }
    throw Error("unknown captioner");
  });
  CountingTarget target(*art.target);
  const RngSeed query_seed = DeriveSeed(base, "query");
  std::vector<ImageSample> generated;
  std::vector<Caption> captions;
  generated.reserve(static_cast<std::size_t>(aux.size()));
  for (int i = 0; i < aux.size(); ++i) {
    const ImageSample& q = aux.image(i);
    Caption c = Staged("caption", [&] { return captioner.Describe(q).caption; });
    generated.push_back(Staged("generate", [&] {
      GenerationRequest req{c};
      if (cfg.steps) req.steps = *cfg.steps;
      req.seed = DeriveSeed(query_seed, static_cast<std::uint64_t>(i));
      return target.Generate(req);
    }));
    captions.push_back(std::move(c));
  }
  if (target.count() != aux.size()) {
    throw StageError("query", "target was queried " +
                                  std::to_string(target.count()) + " times for " +
                                  std::to_string(aux.size()) + " images");
  }
  QueryResults r{std::move(aux), std::move(generated), std::move(captions),
                 target.count(), 0.0};
  r.seconds = sw.Seconds();
  return r;
}

std::vector<SplitFeatures> FeaturesFor(const QueryResults& q,
                                       const Embedder& emb,
                                       std::span<const AttackKind> kinds,
                                       const FeatureOps& ops) {
  std::vector<SplitFeatures> out(kinds.size());
  auto add = [&](int i, bool train) {
    auto fs = ExtractFeatures(kinds, q.aux.image(i),
                              q.generated[static_cast<std::size_t>(i)],
                              q.captions[static_cast<std::size_t>(i)], emb, ops);
    for (std::size_t k = 0; k < fs.size(); ++k) {
      fs[k].label = q.aux.label(i);
      (train ? out[k].train : out[k].test).push_back(std::move(fs[k]));
    }
  };
  for (const int i : q.aux.train()) add(i, true);
  for (const int i : q.aux.test()) add(i, false);
  return out;
}

AttackRun TrainAndScore(const SplitFeatures& features, AttackKind kind,
                        const AttackConfig& acfg, std::uint64_t attack_seed,
                        RngSeed base) {
  AttackHyper h;
  h.learning_rate = acfg.learning_rate;
  h.epochs = acfg.epochs;
  h.batch_size = acfg.batch_size;
  h.seed = DeriveSeed(DeriveSeed(base, "attack"), attack_seed);
  auto model = std::make_shared<const AttackModel>(
      TrainAttack(features.train, DefaultArch(kind), h));
  return {model, AttackAccuracy(*model, features.test)};
}

FidPair QueryFid(const QueryResults& q, const Embedder& emb) {
  std::vector<EmbeddingVector> gm, qm, gn, qn;
  std::vector<std::pair<EmbeddingVector, EmbeddingVector>> pm, pn;
  for (int i = 0; i < q.aux.size(); ++i) {
    EmbeddingVector eq = emb.EmbedImage(q.aux.image(i));
    EmbeddingVector eg = emb.EmbedImage(q.generated[static_cast<std::size_t>(i)]);
    const bool member = q.aux.label(i) == MembershipLabel::kMember;
    (member ? pm : pn).emplace_back(eq, eg);
    (member ? qm : qn).push_back(std::move(eq));
    (member ? gm : gn).push_back(std::move(eg));
  }
  FidPair f;
  f.member = Fid(SummarizeGaussian(qm), SummarizeGaussian(gm));
  f.nonmember = Fid(SummarizeGaussian(qn), SummarizeGaussian(gn));
  f.member_hist = CosineHistogram(pm, kCosineBins).counts;
  f.nonmember_hist = CosineHistogram(pn, kCosineBins).counts;
  return f;
}

namespace {

const char* kIncomplete = "INCOMPLETE";

fs::path FeaturePath(const fs::path& dir, AttackKind kind, bool train) {
  return dir / "features" /
         (std::string(AttackKindName(kind)) + (train ? ".train.jsonl" : ".test.jsonl"));
}

std::vector<ResultRecord> AttackPhase(
    const ExperimentConfig& cfg, const std::vector<SplitFeatures>& features,
    const FidPair& fid, const RunOptions& options,
    std::map<std::string, double> timings) {
  std::vector<ResultRecord> records;
  const json snapshot = ConfigSnapshot(cfg);
  for (std::size_t k = 0; k < cfg.attack.kinds.size(); ++k) {
    const AttackKind kind = cfg.attack.kinds[k];
    for (const std::uint64_t s : cfg.attack.seeds) {
      Stopwatch sw;
      const AttackRun run = Staged("attack-train", [&] {
        return TrainAndScore(features[k], kind, cfg.attack, s, RngSeed{cfg.seed});
      });
      ResultRecord r;
      r.experiment_id = cfg.experiment_id;
      r.attack_kind = std::string(AttackKindName(kind));
      r.accuracy = run.test_accuracy;
      r.fid_member = fid.member;
      r.fid_nonmember = fid.nonmember;
      r.axis = options.axis;
      r.axis_value = options.axis_value;
      r.config = snapshot;
      r.timings_seconds = timings;
      r.timings_seconds["attack_train"] = sw.Seconds();
      r.seeds = {cfg.seed, s};
      r.member_cosine_hist = fid.member_hist;
      r.nonmember_cosine_hist = fid.nonmember_hist;
      Log(r.attack_kind + " seed " + std::to_string(s) + " accuracy " +
          std::to_string(r.accuracy) +
          (options.axis.empty() ? "" : " [" + options.axis + "=" + options.axis_value + "]"));
      records.push_back(std::move(r));
    }
  }
  return records;
}

void Finish(const ExperimentConfig& cfg, const std::vector<ResultRecord>& records) {
  Staged("report", [&] { EmitReport(records, cfg.out_dir); });
  fs::remove(cfg.out_dir / kIncomplete);
}

void Begin(const ExperimentConfig& cfg) {
  Staged("output", [&] {
    fs::create_directories(cfg.out_dir);
    WriteText(cfg.out_dir / kIncomplete, "run did not finish\n");
    WriteText(cfg.out_dir / "config.json", cfg.ToJson().dump(2) + "\n");
  });
}

}  // namespace

std::vector<ResultRecord> RunExperiment(const ExperimentConfig& cfg,
                                        const RunOptions& options) {
  Staged("config", [&] { cfg.Validate(); });
  Begin(cfg);
  std::map<std::string, double> timings;

  Artifacts owned;
  const Artifacts* art = options.artifacts;
  if (art == nullptr) {
    owned = PrepareArtifacts(cfg);
    art = &owned;
  }
  timings["target"] = art->target_seconds;
  timings["embedder"] = art->embedder_seconds;

  std::optional<QueryResults> fresh;
  const QueryResults* q = options.queries;
  if (q == nullptr) {
    Log("query phase: " + cfg.experiment_id +
        (options.axis.empty() ? "" : " " + options.axis + "=" + options.axis_value));
    fresh.emplace(RunQueryPhase(cfg, *art));
    q = &*fresh;
    timings["query"] = fresh->seconds;
  }

  Stopwatch sw;
  const FidPair fid = Staged("fid", [&] { return QueryFid(*q, *art->embedder); });
  const auto features = Staged("features", [&] {
    return FeaturesFor(*q, *art->embedder, cfg.attack.kinds, cfg.attack.ops);
  });
  Staged("feature-cache", [&] {
    for (std::size_t k = 0; k < cfg.attack.kinds.size(); ++k) {
      for (const bool train : {true, false}) {
        const fs::path p = FeaturePath(cfg.out_dir, cfg.attack.kinds[k], train);
        fs::create_directories(p.parent_path());
        WriteFeatureCache(p, train ? features[k].train : features[k].test);
      }
    }
    const json f = {{"fid_member", fid.member},
                    {"fid_nonmember", fid.nonmember},
                    {"member_cosine_hist", fid.member_hist},
                    {"nonmember_cosine_hist", fid.nonmember_hist},
                    {"target_queries", q->target_queries}};
    WriteText(cfg.out_dir / "features" / "fid.json", f.dump() + "\n");
  });
  timings["features"] = sw.Seconds();

  std::vector<ResultRecord> records =
      AttackPhase(cfg, features, fid, options, timings);
  Finish(cfg, records);
  return records;
}

std::vector<ResultRecord> RetrainFromCache(const ExperimentConfig& cfg) {
  Staged("config", [&] { cfg.Validate(); });
  const auto [features, fid] = Staged("feature-cache", [&] {
    std::vector<SplitFeatures> fs_;
    for (const AttackKind k : cfg.attack.kinds) {
      SplitFeatures s;
      s.train = ReadFeatureCache(FeaturePath(cfg.out_dir, k, true));
      s.test = ReadFeatureCache(FeaturePath(cfg.out_dir, k, false));
      fs_.push_back(std::move(s));
    }
    std::ifstream in(cfg.out_dir / "features" / "fid.json");
    if (!in) throw Error("missing " + (cfg.out_dir / "features" / "fid.json").string());
    const json j = json::parse(in);
    FidPair f;
    f.member = j.at("fid_member").get<double>();
    f.nonmember = j.at("fid_nonmember").get<double>();
    f.member_hist = j.at("member_cosine_hist").get<std::vector<int>>();
    f.nonmember_hist = j.at("nonmember_cosine_hist").get<std::vector<int>>();
    return std::pair(std::move(fs_), std::move(f));
  });
  WriteText(cfg.out_dir / kIncomplete, "run did not finish\n");
  auto records = AttackPhase(cfg, features, fid, {}, {});
  Finish(cfg, records);
  return records;
}

std::vector<ResultRecord> RunAblation(const ExperimentConfig& cfg,
                                      const AblationSpec& spec) {
  Staged("config", [&] {
    cfg.Validate();
    spec.Validate();
    if (spec.axis == AblationAxis::kDenoisingSteps &&
        cfg.target.family != TargetFamily::kDiffusion) {
      throw Error("denoising_steps ablation needs a diffusion target");
    }
  });
  const std::string axis_name(AblationAxisName(spec.axis));
  const fs::path root = cfg.out_dir / axis_name;
  const Artifacts art = PrepareArtifacts(cfg);
  std::vector<ResultRecord> all;
  auto run = [&](ExperimentConfig c, const std::string& axis,
                 const std::string& value, const Artifacts* a,
                 const QueryResults* q) {
    std::string dir = value;
    std::replace(dir.begin(), dir.end(), '/', '_');
    c.out_dir = root / dir;
    RunOptions o;
    o.artifacts = a;
    o.queries = q;
    o.axis = axis;
    o.axis_value = value;
    auto rs = RunExperiment(c, o);
    all.insert(all.end(), rs.begin(), rs.end());
  };

  switch (spec.axis) {
    case AblationAxis::kDenoisingSteps:
      for (const json& v : spec.values) {
        ExperimentConfig c = cfg;
        c.steps = v.get<int>();
        run(c, "steps", ValueString(v), &art, nullptr);
      }
      break;
    case AblationAxis::kAuxiliaryFraction:
      for (const json& v : spec.values) {
        ExperimentConfig c = cfg;
        c.aux_fraction = v.get<double>();
        run(c, "fraction", ValueString(v), &art, nullptr);
      }
      break;
    case AblationAxis::kOperationGrid: {
      ExperimentConfig base = cfg;
      base.attack.kinds = {AttackKind::kIV};
      // Only the feature operations vary, so every cell shares one query
      // phase: each auxiliary image is still generated exactly once.
      Log("query phase: operation grid");
      const QueryResults q = RunQueryPhase(base, art);
      for (const PairwiseOpKind same : kAllPairwiseOps) {
        for (const PairwiseOpKind cross : kAllPairwiseOps) {
          ExperimentConfig c = base;
          c.attack.ops = {same, cross};
          run(c, "ops",
              std::string(PairwiseOpName(same)) + "/" + std::string(PairwiseOpName(cross)),
              &art, &q);
        }
      }
      break;
    }
    case AblationAxis::kPerceptionSwap:
      for (const json& v : spec.values) {
        ExperimentConfig c = cfg;
        if (v.contains("noise_rate")) {
          const double r = v.at("noise_rate").get<double>();
          c.perception.captioner =
              r > 0.0 ? CaptionerKind::kNoisyOracle : CaptionerKind::kProceduralOracle;
          c.perception.noise_rate = r;
          run(c, "noise_rate", ValueString(v.at("noise_rate")), &art, nullptr);
        } else {
          std::string value;
          if (v.contains("embedder_seed")) {
            c.perception.embedder_seed = v.at("embedder_seed").get<std::uint64_t>();
            value = "seed=" + ValueString(v.at("embedder_seed"));
          }
          if (v.contains("embedder_dim")) {
            c.perception.embedder.dim = v.at("embedder_dim").get<int>();
            value += std::string(value.empty() ? "" : ",") + "dim=" +
                     ValueString(v.at("embedder_dim"));
          }
          c.perception.embedder_checkpoint.clear();
          const Artifacts swapped = PrepareArtifacts(c);
          run(c, "embedder", value, &swapped, nullptr);
        }
      }
      break;
  }
  Staged("report", [&] { EmitReport(all, root); });
  return all;
}

}  // namespace t2i_mia
