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

#include "t2i_mia/eval/report.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <set>
#include <tuple>

#include "t2i_mia/core/error.h"
#include "t2i_mia/core/serialize.h"

namespace t2i_mia {
namespace {

const std::vector<std::string> kKindOrder = {"I-P",  "I-S", "II-P",
                                             "II-S", "III", "IV"};
const std::vector<std::string> kOpOrder = {"l1", "l2", "hadamard", "average",
                                           "concatenation"};

int KindRank(const std::string& k) {
  const auto it = std::find(kKindOrder.begin(), kKindOrder.end(), k);
  return static_cast<int>(it - kKindOrder.begin());
}

cv::Scalar KindColor(const std::string& k) {
  static const cv::Scalar palette[] = {
      {180, 119, 31}, {14, 127, 255}, {44, 160, 44},  {40, 39, 214},
      {189, 103, 148}, {75, 86, 140}, {194, 119, 227}};
  return palette[std::min(KindRank(k), 6)];
}

struct Stats {
  double mean = 0.0;
  double sd = 0.0;
  int n = 0;
};

Stats MeanSd(const std::vector<double>& v) {
  Stats s;
  s.n = static_cast<int>(v.size());
  for (const double x : v) s.mean += x / s.n;
  if (s.n > 1) {
    double sq = 0.0;
    for (const double x : v) sq += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(sq / (s.n - 1));
  }
  return s;
}

std::string Fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// Plot frame with y in [0, 1] mapped to the inner rectangle.
struct Frame {
  cv::Mat img;
  cv::Rect inner;
  double ymin = 0.0;
  double ymax = 1.0;

  int Y(double v) const {
    const double t = (v - ymin) / (ymax - ymin);
    return inner.y + inner.height - static_cast<int>(std::lround(t * inner.height));
  }
};

void Text(cv::Mat& img, const std::string& s, cv::Point at, double scale = 0.4,
          cv::Scalar color = {0, 0, 0}) {
  cv::putText(img, s, at, cv::FONT_HERSHEY_SIMPLEX, scale, color, 1, cv::LINE_AA);
}

Frame MakeFrame(const std::string& title, const std::string& ylabel,
                double ymin, double ymax, int width = 640, int height = 400) {
  Frame f{cv::Mat(height, width, CV_8UC3, cv::Scalar(255, 255, 255)),
          cv::Rect(60, 40, width - 180, height - 90), ymin, ymax};
  cv::rectangle(f.img, f.inner, {0, 0, 0}, 1);
  Text(f.img, title, {60, 24}, 0.55);
  Text(f.img, ylabel, {4, 32});
  for (int i = 0; i <= 4; ++i) {
    const double v = ymin + (ymax - ymin) * i / 4.0;
    const int y = f.Y(v);
    cv::line(f.img, {f.inner.x - 4, y}, {f.inner.x, y}, {0, 0, 0});
    cv::line(f.img, {f.inner.x + 1, y}, {f.inner.x + f.inner.width - 1, y},
             {225, 225, 225});
    Text(f.img, Fixed(v, 2), {18, y + 4}, 0.35);
  }
  return f;
}

void Save(const cv::Mat& img, const std::filesystem::path& path,
          std::vector<std::filesystem::path>& out) {
  if (!cv::imwrite(path.string(), img)) {
    throw Error("cannot write plot " + path.string());
  }
  out.push_back(path);
}

void Legend(Frame& f, const std::vector<std::string>& kinds) {
  int y = f.inner.y + 12;
  const int x = f.inner.x + f.inner.width + 12;
  for (const auto& k : kinds) {
    cv::rectangle(f.img, cv::Rect(x, y - 8, 10, 10), KindColor(k), cv::FILLED);
    Text(f.img, k, {x + 16, y + 1});
    y += 18;
  }
}

// kind -> accuracies, over the records selected by `keep`.
template <typename Pred>
std::map<std::string, std::vector<double>> ByKind(
    std::span<const ResultRecord> rs, Pred keep) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& r : rs) {
    if (keep(r)) out[r.attack_kind].push_back(r.accuracy);
  }
  return out;
}

std::vector<std::string> SortedKinds(
    const std::map<std::string, std::vector<double>>& m) {
  std::vector<std::string> ks;
  for (const auto& [k, v] : m) ks.push_back(k);
  std::stable_sort(ks.begin(), ks.end(), [](const auto& a, const auto& b) {
    return KindRank(a) < KindRank(b);
  });
  return ks;
}

void AccuracyBars(std::span<const ResultRecord> rs,
                  const std::filesystem::path& path,
                  std::vector<std::filesystem::path>& out) {
  const auto by = ByKind(rs, [](const ResultRecord& r) { return r.axis.empty(); });
  if (by.empty()) return;
  Frame f = MakeFrame("Attack test accuracy (mean over seeds)", "accuracy", 0.0,
                      1.0);
  const auto kinds = SortedKinds(by);
  const int slot = f.inner.width / static_cast<int>(kinds.size());
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const Stats s = MeanSd(by.at(kinds[i]));
    const int x0 = f.inner.x + static_cast<int>(i) * slot + slot / 5;
    const int x1 = x0 + slot * 3 / 5;
    cv::rectangle(f.img, cv::Point(x0, f.Y(s.mean)), cv::Point(x1, f.Y(0.0)),
                  KindColor(kinds[i]), cv::FILLED);
    const int xm = (x0 + x1) / 2;
    cv::line(f.img, {xm, f.Y(std::min(1.0, s.mean + s.sd))},
             {xm, f.Y(std::max(0.0, s.mean - s.sd))}, {0, 0, 0});
    Text(f.img, Fixed(s.mean, 3), {x0, f.Y(s.mean) - 6}, 0.35);
    Text(f.img, kinds[i], {x0, f.inner.y + f.inner.height + 16});
  }
  const int y = f.Y(0.5);
  cv::line(f.img, {f.inner.x, y}, {f.inner.x + f.inner.width, y}, {0, 0, 160});
  Save(f.img, path, out);
}

double NumericValue(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nan("");
}

// One line per attack kind along a numeric axis, categorical x spacing.
void AxisCurve(std::span<const ResultRecord> rs, const std::string& axis,
               const std::string& title, const std::filesystem::path& path,
               std::vector<std::filesystem::path>& out) {
  std::set<double> xs;
  std::map<std::string, std::map<double, std::vector<double>>> by;
  for (const auto& r : rs) {
    if (r.axis != axis) continue;
    const double x = NumericValue(r.axis_value);
    if (std::isnan(x)) continue;
    xs.insert(x);
    by[r.attack_kind][x].push_back(r.accuracy);
  }
  if (xs.empty()) return;
  Frame f = MakeFrame(title, "accuracy", 0.0, 1.0);
  const std::vector<double> xv(xs.begin(), xs.end());
  auto px = [&](double x) {
    const auto i = std::find(xv.begin(), xv.end(), x) - xv.begin();
    const int n = static_cast<int>(xv.size());
    return f.inner.x + static_cast<int>((i + 0.5) * f.inner.width / n);
  };
  for (const double x : xv) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", x);
    Text(f.img, buf, {px(x) - 10, f.inner.y + f.inner.height + 16});
  }
  Text(f.img, axis, {f.inner.x + f.inner.width / 2 - 20,
                     f.inner.y + f.inner.height + 36});
  std::map<std::string, std::vector<double>> kinds_only;
  for (const auto& [k, m] : by) kinds_only[k];
  const auto kinds = SortedKinds(kinds_only);
  for (const auto& k : kinds) {
    cv::Point prev(-1, -1);
    for (const auto& [x, accs] : by.at(k)) {
      const cv::Point p(px(x), f.Y(MeanSd(accs).mean));
      cv::circle(f.img, p, 3, KindColor(k), cv::FILLED, cv::LINE_AA);
      if (prev.x >= 0) cv::line(f.img, prev, p, KindColor(k), 2, cv::LINE_AA);
      prev = p;
    }
  }
  Legend(f, kinds);
  Save(f.img, path, out);
}

void FidDifference(std::span<const ResultRecord> rs,
                   const std::filesystem::path& path,
                   std::vector<std::filesystem::path>& out) {
  // One (member, non-member) FID pair per setting; records of one run share it.
  std::map<double, std::pair<double, double>> pts;
  for (const auto& r : rs) {
    if (r.axis != "steps") continue;
    const double x = NumericValue(r.axis_value);
    if (!std::isnan(x)) pts[x] = {r.fid_member, r.fid_nonmember};
  }
  if (pts.empty()) return;
  double lo = 0.0, hi = 0.0;
  for (const auto& [x, p] : pts) {
    lo = std::min(lo, p.second - p.first);
    hi = std::max(hi, p.second - p.first);
  }
  if (hi - lo < 1e-9) hi = lo + 1.0;
  Frame f = MakeFrame("FID(non-member) - FID(member) vs denoising steps",
                      "FID gap", lo, hi + 0.1 * (hi - lo));
  const int n = static_cast<int>(pts.size());
  int i = 0;
  cv::Point prev(-1, -1);
  for (const auto& [x, p] : pts) {
    const cv::Point pt(f.inner.x + static_cast<int>((i + 0.5) * f.inner.width / n),
                       f.Y(p.second - p.first));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", x);
    Text(f.img, buf, {pt.x - 10, f.inner.y + f.inner.height + 16});
    cv::circle(f.img, pt, 3, {40, 39, 214}, cv::FILLED, cv::LINE_AA);
    if (prev.x >= 0) cv::line(f.img, prev, pt, {40, 39, 214}, 2, cv::LINE_AA);
    prev = pt;
    ++i;
  }
  Save(f.img, path, out);
}

int OpGrid(std::span<const ResultRecord> rs, const std::filesystem::path& path,
           std::vector<std::filesystem::path>& out) {
  std::map<std::pair<int, int>, std::vector<double>> cells;
  for (const auto& r : rs) {
    if (r.axis != "ops") continue;
    const auto slash = r.axis_value.find('/');
    if (slash == std::string::npos) continue;
    const auto a = std::find(kOpOrder.begin(), kOpOrder.end(),
                             r.axis_value.substr(0, slash));
    const auto b = std::find(kOpOrder.begin(), kOpOrder.end(),
                             r.axis_value.substr(slash + 1));
    if (a == kOpOrder.end() || b == kOpOrder.end()) continue;
    cells[{static_cast<int>(a - kOpOrder.begin()),
           static_cast<int>(b - kOpOrder.begin())}]
        .push_back(r.accuracy);
  }
  if (cells.empty()) return 0;
  const int cell = 90, left = 120, top = 50;
  cv::Mat img(top + 5 * cell + 60, left + 5 * cell + 20, CV_8UC3,
              cv::Scalar(255, 255, 255));
  Text(img, "Accuracy by (same-modality op, cross-modality op)", {10, 24}, 0.5);
  for (int i = 0; i < 5; ++i) {
    Text(img, kOpOrder[i], {8, top + i * cell + cell / 2 + 4}, 0.4);
    Text(img, kOpOrder[i], {left + i * cell + 6, top + 5 * cell + 18}, 0.4);
  }
  Text(img, "rows: same-modality, columns: cross-modality",
       {left, top + 5 * cell + 44}, 0.4);
  for (const auto& [ij, accs] : cells) {
    const double m = MeanSd(accs).mean;
    // White at 0.5 shading to dark red at 1.0.
    const double t = std::clamp((m - 0.5) / 0.5, 0.0, 1.0);
    const cv::Scalar color(255 * (1 - t), 255 * (1 - t), 255 - 100 * t);
    const cv::Rect r(left + ij.second * cell, top + ij.first * cell, cell, cell);
    cv::rectangle(img, r, color, cv::FILLED);
    cv::rectangle(img, r, {90, 90, 90}, 1);
    Text(img, Fixed(m, 3), {r.x + 22, r.y + cell / 2 + 5}, 0.45,
         t > 0.6 ? cv::Scalar(255, 255, 255) : cv::Scalar(0, 0, 0));
  }
  Save(img, path, out);
  return static_cast<int>(cells.size());
}

void CosineHistograms(std::span<const ResultRecord> rs,
                      const std::filesystem::path& path,
                      std::vector<std::filesystem::path>& out) {
  const ResultRecord* rec = nullptr;
  for (const auto& r : rs) {
    if (!r.member_cosine_hist.empty() &&
        r.member_cosine_hist.size() == r.nonmember_cosine_hist.size()) {
      rec = &r;
      break;
    }
  }
  if (!rec) return;
  const auto& m = rec->member_cosine_hist;
  const auto& nm = rec->nonmember_cosine_hist;
  double total_m = 0, total_nm = 0;
  for (const int c : m) total_m += c;
  for (const int c : nm) total_nm += c;
  double top = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    top = std::max({top, total_m > 0 ? m[i] / total_m : 0.0,
                    total_nm > 0 ? nm[i] / total_nm : 0.0});
  }
  if (top <= 0.0) top = 1.0;
  Frame f = MakeFrame("Cosine similarity, query vs generated image embeddings",
                      "fraction", 0.0, top * 1.1);
  const int bins = static_cast<int>(m.size());
  const double w = static_cast<double>(f.inner.width) / bins;
  for (int i = 0; i < bins; ++i) {
    const int x0 = f.inner.x + static_cast<int>(i * w);
    const int xm = f.inner.x + static_cast<int>((i + 0.5) * w);
    const int x1 = f.inner.x + static_cast<int>((i + 1) * w);
    if (total_m > 0) {
      cv::rectangle(f.img, cv::Point(x0 + 1, f.Y(m[i] / total_m)),
                    cv::Point(xm, f.Y(0.0)), {40, 39, 214}, cv::FILLED);
    }
    if (total_nm > 0) {
      cv::rectangle(f.img, cv::Point(xm, f.Y(nm[i] / total_nm)),
                    cv::Point(x1 - 1, f.Y(0.0)), {180, 119, 31}, cv::FILLED);
    }
  }
  for (const double v : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    const int x = f.inner.x + static_cast<int>((v + 1.0) / 2.0 * f.inner.width);
    Text(f.img, Fixed(v, 1), {x - 10, f.inner.y + f.inner.height + 16});
  }
  const int x = f.inner.x + f.inner.width + 12;
  cv::rectangle(f.img, cv::Rect(x, f.inner.y + 4, 10, 10), {40, 39, 214},
                cv::FILLED);
  Text(f.img, "member", {x + 16, f.inner.y + 13});
  cv::rectangle(f.img, cv::Rect(x, f.inner.y + 22, 10, 10), {180, 119, 31},
                cv::FILLED);
  Text(f.img, "non-member", {x + 16, f.inner.y + 31});
  Save(f.img, path, out);
}

}  // namespace

void ResultRecord::Validate() const {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw Error("accuracy " + std::to_string(accuracy) + " outside [0, 1]");
  }
  if (!(fid_member >= 0.0) || !(fid_nonmember >= 0.0)) {
    throw Error("negative FID in result record");
  }
}

nlohmann::json ResultRecord::ToJson() const {
  Validate();
  nlohmann::json j;
  j["schema_version"] = kResultSchemaVersion;
  j["experiment_id"] = experiment_id;
  j["attack_kind"] = attack_kind;
  j["accuracy"] = accuracy;
  j["fid_member"] = fid_member;
  j["fid_nonmember"] = fid_nonmember;
  j["axis"] = axis;
  j["axis_value"] = axis_value;
  j["config"] = config;
  j["timings_seconds"] = timings_seconds;
  j["seeds"] = seeds;
  j["member_cosine_hist"] = member_cosine_hist;
  j["nonmember_cosine_hist"] = nonmember_cosine_hist;
  return j;
}

ResultRecord ResultRecord::FromJson(const nlohmann::json& j) {
  ResultRecord r;
  try {
    if (j.at("schema_version").get<int>() != kResultSchemaVersion) {
      throw Error("unsupported result schema version " +
                  j.at("schema_version").dump());
    }
    r.experiment_id = j.at("experiment_id").get<std::string>();
    r.attack_kind = j.at("attack_kind").get<std::string>();
    r.accuracy = j.at("accuracy").get<double>();
    r.fid_member = j.at("fid_member").get<double>();
    r.fid_nonmember = j.at("fid_nonmember").get<double>();
    r.axis = j.value("axis", "");
    r.axis_value = j.value("axis_value", "");
    r.config = j.value("config", nlohmann::json::object());
    r.timings_seconds =
        j.value("timings_seconds", std::map<std::string, double>{});
    r.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    r.member_cosine_hist = j.value("member_cosine_hist", std::vector<int>{});
    r.nonmember_cosine_hist =
        j.value("nonmember_cosine_hist", std::vector<int>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed result record: ") + e.what());
  }
  r.Validate();
  return r;
}

ReportFiles EmitReport(std::span<const ResultRecord> records,
                       const std::filesystem::path& out_dir) {
  if (records.empty()) throw Error("no result records to report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw Error("cannot create report directory " + out_dir.string());
  }
  ReportFiles files;
  files.results = out_dir / "results.jsonl";
  files.summary = out_dir / "summary.jsonl";

  std::string results;
  using Key = std::tuple<std::string, std::string, std::string, int, std::string>;
  std::map<Key, std::vector<const ResultRecord*>> groups;
  for (const auto& r : records) {
    results += r.ToJson().dump() + "\n";
    groups[{r.experiment_id, r.axis, r.axis_value, KindRank(r.attack_kind),
            r.attack_kind}]
        .push_back(&r);
  }
  std::string summary;
  for (const auto& [key, rs] : groups) {
    std::vector<double> acc, fm, fn;
    for (const auto* r : rs) {
      acc.push_back(r->accuracy);
      fm.push_back(r->fid_member);
      fn.push_back(r->fid_nonmember);
    }
    const Stats s = MeanSd(acc);
    nlohmann::json row{{"experiment_id", std::get<0>(key)},
                       {"axis", std::get<1>(key)},
                       {"axis_value", std::get<2>(key)},
                       {"attack_kind", std::get<4>(key)},
                       {"mean_accuracy", s.mean},
                       {"std_accuracy", s.sd},
                       {"runs", s.n},
                       {"mean_fid_member", MeanSd(fm).mean},
                       {"mean_fid_nonmember", MeanSd(fn).mean}};
    summary += row.dump() + "\n";
  }
  WriteFileBytes(files.results, results);
  WriteFileBytes(files.summary, summary);

  AccuracyBars(records, out_dir / "accuracy_bars.png", files.plots);
  AxisCurve(records, "steps", "Accuracy vs denoising steps",
            out_dir / "steps_curve.png", files.plots);
  AxisCurve(records, "fraction", "Accuracy vs auxiliary dataset fraction",
            out_dir / "size_curve.png", files.plots);
  AxisCurve(records, "noise_rate", "Accuracy vs captioner noise rate",
            out_dir / "captioner_curve.png", files.plots);
  FidDifference(records, out_dir / "fid_difference.png", files.plots);
  files.grid_cells = OpGrid(records, out_dir / "op_grid.png", files.plots);
  CosineHistograms(records, out_dir / "cosine_histograms.png", files.plots);
  return files;
}

std::vector<ResultRecord> ReadResults(const std::filesystem::path& jsonl) {
  std::ifstream in(jsonl);
  if (!in) throw Error("cannot open results file " + jsonl.string());
  std::vector<ResultRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(ResultRecord::FromJson(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("bad line in " + jsonl.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace t2i_mia
