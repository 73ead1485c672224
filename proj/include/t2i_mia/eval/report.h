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

#ifndef T2I_MIA_EVAL_REPORT_H_
#define T2I_MIA_EVAL_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace t2i_mia {

inline constexpr int kResultSchemaVersion = 1;

// One attack evaluated once (one attack seed, one setting).
struct ResultRecord {
  std::string experiment_id;
  std::string attack_kind;
  double accuracy = 0.0;
  double fid_member = 0.0;
  double fid_nonmember = 0.0;
  // Ablation axis ("" for a plain run) and the setting along it, e.g.
  // axis "steps" with value "50", or axis "ops" with value "l1/hadamard".
  std::string axis;
  std::string axis_value;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, double> timings_seconds;
  std::vector<std::uint64_t> seeds;
  // Query-vs-generated cosine histograms over [-1, 1], if computed.
  std::vector<int> member_cosine_hist;
  std::vector<int> nonmember_cosine_hist;

  // Throws Error if accuracy is outside [0, 1] or a FID is negative.
  void Validate() const;
  nlohmann::json ToJson() const;
  static ResultRecord FromJson(const nlohmann::json& j);
};

struct ReportFiles {
  std::filesystem::path results;  // results.jsonl
  std::filesystem::path summary;  // summary.jsonl
  std::vector<std::filesystem::path> plots;
  // Number of filled cells of the op-grid heatmap (0 if not drawn).
  int grid_cells = 0;
};

// Writes results.jsonl (every record), summary.jsonl (mean/std accuracy per
// experiment, axis setting and attack kind) and PNG plots for whichever
// figures the records support. Output bytes depend only on the records.
// Throws Error on an empty record list or an unwritable directory.
ReportFiles EmitReport(std::span<const ResultRecord> records,
                       const std::filesystem::path& out_dir);

std::vector<ResultRecord> ReadResults(const std::filesystem::path& jsonl);

}  // namespace t2i_mia

#endif  // T2I_MIA_EVAL_REPORT_H_
