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
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "t2i_mia/core/error.h"
#include "t2i_mia/core/png.h"
#include "t2i_mia/synthdata/scene.h"
#include "t2i_mia/harness/harness.h"

namespace t2i_mia {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::string config = "smoke";
  std::optional<std::uint64_t> seed;
  std::string out;
};

void AddCommon(CLI::App* cmd, Common& c, bool with_config) {
  if (with_config) {
    cmd->add_option("--config", c.config,
                    "preset (smoke, reference) or JSON config file")
        ->capture_default_str();
  }
  cmd->add_option("--seed", c.seed, "seed override");
  cmd->add_option("--out", c.out, "output directory");
}

ExperimentConfig LoadConfig(const Common& c) {
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::Resolve(c.config);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }
  if (!c.out.empty()) cfg.out_dir = c.out;
  return cfg;
}

void PrintSummary(const std::vector<ResultRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> by;
  std::vector<std::pair<std::string, std::string>> order;
  for (const ResultRecord& r : records) {
    const auto key = std::pair(r.axis.empty() ? "" : r.axis + "=" + r.axis_value,
                               r.attack_kind);
    if (!by.count(key)) order.push_back(key);
    by[key].push_back(r.accuracy);
  }
  for (const auto& key : order) {
    const auto& v = by[key];
    double mean = 0.0;
    for (const double x : v) mean += x / static_cast<double>(v.size());
    double sq = 0.0;
    for (const double x : v) sq += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(sq / static_cast<double>(v.size() - 1)) : 0.0;
    std::printf("%s%s%-5s accuracy %.4f +- %.4f (n=%zu)\n", key.first.c_str(),
                key.first.empty() ? "" : " ", key.second.c_str(), mean, sd, v.size());
  }
  if (!records.empty() && records.front().axis.empty()) {
    std::printf("fid member %.4f nonmember %.4f\n", records.front().fid_member,
                records.front().fid_nonmember);
  }
}

}  // namespace

int CliMain(int argc, char** argv) {
  CLI::App app{"Membership inference against text-to-image models", "t2i-mia"};
  app.require_subcommand(1);

  Common gen_opts, pools_opts, filter_opts, target_train_opts, generate_opts;
  Common emb_opts, run_opts, ablate_opts, train_opts, infer_opts, report_opts;

  CLI::App* data = app.add_subcommand("data", "synthetic caption-image datasets");
  data->require_subcommand(1);
  CLI::App* data_generate = data->add_subcommand("generate", "sample n distinct scenes");
  AddCommon(data_generate, gen_opts, false);
  int gen_n = 0;
  std::string gen_name = "dataset";
  data_generate->add_option("--n", gen_n, "number of samples")->required();
  data_generate->add_option("--name", gen_name)->capture_default_str();
  CLI::App* data_pools = data->add_subcommand(
      "pools", "write the member, non-member and public pools of a config");
  AddCommon(data_pools, pools_opts, true);
  CLI::App* data_filter = data->add_subcommand("filter", "keep samples scoring >= threshold");
  AddCommon(data_filter, filter_opts, false);
  std::string filter_data, filter_shape = "circle";
  double filter_threshold = 0.9;
  data_filter->add_option("--data", filter_data, "dataset manifest")->required();
  data_filter->add_option("--shape", filter_shape, "contains-<shape> scorer")
      ->capture_default_str();
  data_filter->add_option("--threshold", filter_threshold)->capture_default_str();

  CLI::App* target = app.add_subcommand("target", "toy text-to-image targets");
  target->require_subcommand(1);
  CLI::App* target_train = target->add_subcommand(
      "train", "train on --data, or on the member pool of --config (cached)");
  AddCommon(target_train, target_train_opts, true);
  std::string train_data, family_name;
  std::optional<int> target_epochs;
  target_train->add_option("--data", train_data, "dataset manifest");
  target_train->add_option("--family", family_name, "diffusion or seq2seq");
  target_train->add_option("--epochs", target_epochs);
  CLI::App* target_generate = target->add_subcommand("generate", "generate one image");
  AddCommon(target_generate, generate_opts, false);
  std::string gen_model, gen_caption;
  int gen_steps = 50;
  target_generate->add_option("--model", gen_model, "target checkpoint")->required();
  target_generate->add_option("--caption", gen_caption, "canonical caption text")
      ->required();
  target_generate->add_option("--steps", gen_steps)->capture_default_str();

  CLI::App* embedder = app.add_subcommand("embedder", "two-tower image-text embedder");
  embedder->require_subcommand(1);
  CLI::App* embedder_train = embedder->add_subcommand(
      "train", "train on --data, or on the public pool of --config (cached)");
  AddCommon(embedder_train, emb_opts, true);
  std::string emb_data;
  std::optional<int> emb_dim, emb_epochs;
  embedder_train->add_option("--data", emb_data, "dataset manifest");
  embedder_train->add_option("--dim", emb_dim);
  embedder_train->add_option("--epochs", emb_epochs);

  CLI::App* attack = app.add_subcommand("attack", "train or apply an attack model");
  attack->require_subcommand(1);
  CLI::App* attack_train = attack->add_subcommand("train", "train on a feature cache");
  AddCommon(attack_train, train_opts, false);
  std::string train_features, arch_name;
  AttackHyper hyper;
  attack_train->add_option("--features", train_features, "feature cache (JSON lines)")
      ->required();
  attack_train->add_option("--arch", arch_name, "cnn, mlp3 or fusion3 (default by kind)");
  attack_train->add_option("--lr", hyper.learning_rate)->capture_default_str();
  attack_train->add_option("--epochs", hyper.epochs)->capture_default_str();
  attack_train->add_option("--batch", hyper.batch_size)->capture_default_str();

  CLI::App* attack_infer = attack->add_subcommand("infer", "score a feature cache");
  AddCommon(attack_infer, infer_opts, false);
  std::string infer_model, infer_features;
  attack_infer->add_option("--model", infer_model, "attack checkpoint")->required();
  attack_infer->add_option("--features", infer_features, "feature cache")->required();

  CLI::App* run = app.add_subcommand("run", "run the attack pipeline");
  AddCommon(run, run_opts, true);
  bool from_cache = false;
  run->add_flag("--from-cache", from_cache,
                "re-train attacks from the feature caches in --out");

  CLI::App* ablate = app.add_subcommand("ablate", "run one ablation axis");
  AddCommon(ablate, ablate_opts, true);
  std::string axis_name;
  std::string values_text;
  ablate->add_option("--axis", axis_name,
                     "denoising_steps, auxiliary_fraction, operation_grid or "
                     "perception_swap")
      ->required();
  ablate->add_option("--values", values_text, "JSON list (default per axis)");

  CLI::App* report = app.add_subcommand("report", "render plots from results");
  AddCommon(report, report_opts, false);
  std::string report_in;
  report->add_option("--in", report_in, "results.jsonl or a run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "t2i-mia: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (data_generate->parsed()) {
      GenerateOptions o;
      o.name = gen_name;
      const PairedDataset d =
          GenerateDataset(gen_n, RngSeed{gen_opts.seed.value_or(0)}, o);
      const fs::path out = gen_opts.out.empty() ? fs::path(gen_name) : fs::path(gen_opts.out);
      std::cout << WriteDatasetManifest(d, out).string() << "\n";
    } else if (data_pools->parsed()) {
      ExperimentConfig cfg = LoadConfig(pools_opts);
      if (pools_opts.seed) cfg.data.seed = *pools_opts.seed;
      const ScenePools pools = BuildPools(cfg.data);
      const fs::path out = pools_opts.out.empty() ? cfg.out_dir / "data" : fs::path(pools_opts.out);
      for (const PairedDataset* d : {&pools.members, &pools.nonmembers, &pools.public_pool}) {
        std::cout << WriteDatasetManifest(*d, out / d->name).string() << "\n";
      }
    } else if (data_filter->parsed()) {
      const PairedDataset in = ReadDatasetManifest(filter_data);
      const Shape shape = [&] {
        for (int s = 0; s < kNumShapes; ++s) {
          if (ShapeName(static_cast<Shape>(s)) == filter_shape) return static_cast<Shape>(s);
        }
        throw StageError("config", "unknown shape '" + filter_shape + "'");
      }();
      PairedDataset kept = AttributeFilter(
          in, [shape](const ImageSample& x) { return ShapeScore(x, shape); },
          filter_threshold);
      kept.name = in.name + "-" + filter_shape;
      const fs::path out = filter_opts.out.empty() ? fs::path(kept.name) : fs::path(filter_opts.out);
      std::cout << WriteDatasetManifest(kept, out).string() << " (" << kept.pairs.size()
                << " of " << in.pairs.size() << ")\n";
    } else if (target_train->parsed()) {
      ExperimentConfig cfg = LoadConfig(target_train_opts);
      if (target_train_opts.seed) cfg.target.seed = *target_train_opts.seed;
      if (!family_name.empty()) cfg.target.family = TargetFamilyFromName(family_name);
      if (target_epochs) {
        cfg.target.diffusion.epochs = *target_epochs;
        cfg.target.seq2seq.epochs = *target_epochs;
      }
      if (cfg.target.family == TargetFamily::kSeq2Seq) cfg.steps.reset();
      cfg.Validate();
      std::string key = "explicit data";
      double secs = 0.0;
      const TargetModelHandle h = [&] {
        if (train_data.empty()) {
          return LoadOrTrainTarget(cfg, BuildPools(cfg.data).members, &key, &secs);
        }
        const PairedDataset d = ReadDatasetManifest(train_data);
        try {
          return cfg.target.family == TargetFamily::kDiffusion
                     ? TrainDiffusionTarget(d, cfg.target.diffusion, RngSeed{cfg.target.seed})
                     : TrainSeq2SeqTarget(d, cfg.target.seq2seq, RngSeed{cfg.target.seed});
        } catch (const std::exception& e) {
          throw StageError("target", e.what());
        }
      }();
      const fs::path out = target_train_opts.out.empty() ? cfg.out_dir : fs::path(target_train_opts.out);
      fs::create_directories(out);
      h.Save(out / "target.ckpt");
      std::cout << (out / "target.ckpt").string() << " (" << key << ", " << secs << " s)\n";
    } else if (target_generate->parsed()) {
      const TargetModelHandle h = TargetModelHandle::Load(gen_model);
      GenerationRequest req{Caption::Parse(gen_caption)};
      req.steps = gen_steps;
      req.seed = RngSeed{generate_opts.seed.value_or(0)};
      const ImageSample img = h.Generate(req);
      const fs::path out = generate_opts.out.empty() ? fs::path("generated.png")
                                                     : fs::path(generate_opts.out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      ExportSamplePng(img, out);
      std::cout << out.string() << "\n";
    } else if (embedder_train->parsed()) {
      ExperimentConfig cfg = LoadConfig(emb_opts);
      if (emb_opts.seed) cfg.perception.embedder_seed = *emb_opts.seed;
      if (emb_dim) cfg.perception.embedder.dim = *emb_dim;
      if (emb_epochs) cfg.perception.embedder.epochs = *emb_epochs;
      cfg.Validate();
      std::string key = "explicit data";
      double secs = 0.0;
      const Embedder e = [&] {
        if (emb_data.empty()) {
          return LoadOrTrainEmbedder(cfg, BuildPools(cfg.data).public_pool, &key, &secs);
        }
        try {
          return TrainTwoTower(ReadDatasetManifest(emb_data), cfg.perception.embedder,
                               RngSeed{cfg.perception.embedder_seed});
        } catch (const std::exception& ex) {
          throw StageError("embedder", ex.what());
        }
      }();
      const fs::path out = emb_opts.out.empty() ? cfg.out_dir : fs::path(emb_opts.out);
      fs::create_directories(out);
      e.Save(out / "embedder.ckpt");
      std::cout << (out / "embedder.ckpt").string() << " (" << key << ", " << secs << " s)\n";
    } else if (attack_train->parsed()) {
      const auto features = ReadFeatureCache(train_features);
      if (features.empty()) throw StageError("attack-train", "empty feature cache");
      if (train_opts.seed) hyper.seed = RngSeed{*train_opts.seed};
      const AttackArch arch = arch_name.empty() ? DefaultArch(features.front().kind)
                                                : AttackArchFromName(arch_name);
      AttackModel model = [&] {
        try {
          return TrainAttack(features, arch, hyper);
        } catch (const std::exception& e) {
          throw StageError("attack-train", e.what());
        }
      }();
      const fs::path out = train_opts.out.empty() ? fs::path(".") : fs::path(train_opts.out);
      fs::create_directories(out);
      model.Save(out / "attack.ckpt");
      std::printf("%s train accuracy %.4f\n", (out / "attack.ckpt").string().c_str(),
                  AttackAccuracy(model, features));
    } else if (attack_infer->parsed()) {
      const AttackModel model = AttackModel::Load(infer_model);
      const auto features = ReadFeatureCache(infer_features);
      const auto decisions = model.InferAll(features);
      const fs::path out = infer_opts.out.empty() ? fs::path(".") : fs::path(infer_opts.out);
      fs::create_directories(out);
      std::ofstream os(out / "decisions.jsonl");
      bool labeled = true;
      for (std::size_t i = 0; i < features.size(); ++i) {
        os << json{{"query_id", features[i].query_id},
                   {"score", decisions[i].score},
                   {"label", decisions[i].label == MembershipLabel::kMember ? "member"
                                                                            : "nonmember"}}
                  .dump()
           << "\n";
        labeled = labeled && features[i].label.has_value();
      }
      std::cout << (out / "decisions.jsonl").string() << "\n";
      if (labeled) std::printf("accuracy %.4f\n", AttackAccuracy(model, features));
    } else if (run->parsed()) {
      ExperimentConfig cfg = LoadConfig(run_opts);
      if (run_opts.seed) cfg.seed = *run_opts.seed;
      PrintSummary(from_cache ? RetrainFromCache(cfg) : RunExperiment(cfg));
      std::cout << "results in " << cfg.out_dir.string() << "\n";
    } else if (ablate->parsed()) {
      ExperimentConfig cfg = LoadConfig(ablate_opts);
      if (ablate_opts.seed) cfg.seed = *ablate_opts.seed;
      AblationSpec spec = AblationSpec::Default(AblationAxisFromName(axis_name));
      if (!values_text.empty()) {
        const json v = json::parse(values_text, nullptr, false);
        if (!v.is_array()) throw StageError("config", "--values must be a JSON list");
        spec.values.assign(v.begin(), v.end());
      }
      const auto records = RunAblation(cfg, spec);
      PrintSummary(records);
      std::cout << records.size() << " records in "
                << (cfg.out_dir / std::string(AblationAxisName(spec.axis))).string() << "\n";
    } else if (report->parsed()) {
      fs::path in = report_in;
      if (fs::is_directory(in)) in /= "results.jsonl";
      const auto records = ReadResults(in);
      const fs::path out = report_opts.out.empty() ? in.parent_path() : fs::path(report_opts.out);
      const ReportFiles files = EmitReport(records, out);
      std::cout << files.summary.string() << "\n";
      for (const auto& p : files.plots) std::cout << p.string() << "\n";
    }
  } catch (const StageError& e) {
    std::cerr << "t2i-mia: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "t2i-mia: [" << app.get_subcommands().front()->get_name() << "] "
              << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace t2i_mia
