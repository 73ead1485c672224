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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// writes the same lines to <work>/acceptance.txt. The exit code is non-zero
// only if the evaluation itself could not be completed; a FAIL line is a
// finding, not a crash.
//
// Work directory: argv[1], else ./acceptance_work. The artifact home inside
// it is wiped first so the reference run includes target training.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "t2i_mia/attacks/attack.h"
#include "t2i_mia/core/rng.h"
#include "t2i_mia/eval/metrics.h"
#include "t2i_mia/features/features.h"
#include "t2i_mia/harness/harness.h"

namespace t2i_mia {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class Sheet {
 public:
  explicit Sheet(fs::path path) : path_(std::move(path)) {}

  void Line(int id, bool pass, const std::string& detail) {
    char head[32];
    std::snprintf(head, sizeof head, "criterion %2d: %s", id, pass ? "PASS" : "FAIL");
    lines_[id] = std::string(head) + "  " + detail;
    Emit(lines_[id]);
    ++(pass ? passed_ : failed_);
  }

  void Note(const std::string& text) { Emit("  " + text); }

  void Summary() {
    Emit("");
    for (const auto& [id, line] : lines_) Emit(line);
    Emit("acceptance: " + std::to_string(passed_) + " passed, " +
         std::to_string(failed_) + " failed");
  }

 private:
  void Emit(const std::string& s) {
    std::printf("%s\n", s.c_str());
    std::fflush(stdout);
    std::ofstream(path_, std::ios::app) << s << "\n";
  }

  fs::path path_;
  std::map<int, std::string> lines_;
  int passed_ = 0;
  int failed_ = 0;
};

std::string Fmt(const char* f, double a) {
  char b[64];
  std::snprintf(b, sizeof b, f, a);
  return b;
}

// Mean accuracy per attack kind over attack seeds, for one (axis, value).
std::map<std::string, double> MeanByKind(const std::vector<ResultRecord>& rs,
                                         const std::string& axis = "",
                                         const std::string& value = "") {
  std::map<std::string, std::pair<double, int>> acc;
  for (const ResultRecord& r : rs) {
    if (r.axis != axis || r.axis_value != value) continue;
    auto& [s, n] = acc[r.attack_kind];
    s += r.accuracy;
    ++n;
  }
  std::map<std::string, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

std::string Accuracies(const std::map<std::string, double>& m) {
  std::string s;
  for (const auto& [k, v] : m) s += k + "=" + Fmt("%.3f", v) + " ";
  if (!s.empty()) s.pop_back();
  return s;
}

// Query and generated embeddings from a II-S concatenation feature cache.
struct PairSet {
  std::vector<std::vector<double>> query, generated;
};

std::map<bool, PairSet> ReadPairs(const fs::path& features_dir) {
  std::map<bool, PairSet> by_member;
  for (const char* split : {"train", "test"}) {
    for (const AttackFeature& f :
         ReadFeatureCache(features_dir / (std::string("II-S.") + split + ".jsonl"))) {
      const auto& v = f.vector_payload.at(0);
      const std::size_t d = v.size() / 2;
      PairSet& p = by_member[*f.label == MembershipLabel::kMember];
      p.query.emplace_back(v.begin(), v.begin() + static_cast<long>(d));
      p.generated.emplace_back(v.begin() + static_cast<long>(d), v.end());
    }
  }
  return by_member;
}

double MeanCosine(const PairSet& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.query.size(); ++i) {
    double dot = 0.0, a = 0.0, b = 0.0;
    for (std::size_t k = 0; k < p.query[i].size(); ++k) {
      dot += p.query[i][k] * p.generated[i][k];
      a += p.query[i][k] * p.query[i][k];
      b += p.generated[i][k] * p.generated[i][k];
    }
    s += dot / std::sqrt(a * b);
  }
  return s / static_cast<double>(p.query.size());
}

// Frechet distance with Tr((S1 S2)^1/2) taken from the eigenvalues of the
// (non-symmetric) product, independent of the library's PSD square root.
double OracleFid(const std::vector<std::vector<double>>& xs,
                 const std::vector<std::vector<double>>& ys) {
  auto moments = [](const std::vector<std::vector<double>>& v) {
    const Eigen::Index n = static_cast<Eigen::Index>(v.size());
    const Eigen::Index d = static_cast<Eigen::Index>(v.front().size());
    Eigen::MatrixXd m(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) m(i, k) = v[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    const Eigen::VectorXd mu = m.colwise().mean().transpose();
    const Eigen::MatrixXd c = m.rowwise() - mu.transpose();
    return std::pair(mu, Eigen::MatrixXd(c.transpose() * c / static_cast<double>(n - 1)));
  };
  const auto [m1, s1] = moments(xs);
  const auto [m2, s2] = moments(ys);
  const Eigen::EigenSolver<Eigen::MatrixXd> es(s1 * s2);
  double tr = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    tr += std::sqrt(std::max(0.0, es.eigenvalues()(i).real()));
  }
  return (m1 - m2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * tr;
}

std::string StripTimings(const ResultRecord& r) {
  json j = r.ToJson();
  j.erase("timings_seconds");
  return j.dump();
}

// Criterion 8: closed forms and counting oracles.
void MetricOracles(Sheet& sheet) {
  bool ok = true;
  std::ostringstream d;
  auto g1 = [](double mu, double var) {
    return GaussianSummary{Eigen::VectorXd::Constant(1, mu), Eigen::MatrixXd::Constant(1, 1, var), 2};
  };
  // (m1-m2)^2 + v1 + v2 - 2 sqrt(v1 v2)
  const std::vector<std::tuple<double, double, double, double>> cases = {
      {0, 1, 1, 1}, {0, 1, 0, 4}, {2, 9, -1, 1}, {0.5, 0.25, 0.5, 0.25}};
  double worst = 0.0;
  for (const auto& [a, va, b, vb] : cases) {
    const double expect = (a - b) * (a - b) + va + vb - 2.0 * std::sqrt(va * vb);
    worst = std::max(worst, std::abs(Fid(g1(a, va), g1(b, vb)) - expect));
  }
  ok = ok && worst <= 1e-6;
  d << "fid1d max err " << worst;

  Rng rng(RngSeed{11});
  Eigen::MatrixXd x(200, 16);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.Normal();
  const GaussianSummary sx = SummarizeGaussian(x);
  const double self = Fid(sx, sx);
  ok = ok && std::abs(self) <= 1e-6;
  d << "; fid(X,X) " << self;

  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.Index(200));
    std::vector<MembershipLabel> p(static_cast<std::size_t>(n)), t(static_cast<std::size_t>(n));
    int same = 0;
    for (int i = 0; i < n; ++i) {
      p[static_cast<std::size_t>(i)] = rng.Index(2) ? MembershipLabel::kMember : MembershipLabel::kNonmember;
      t[static_cast<std::size_t>(i)] = rng.Index(2) ? MembershipLabel::kMember : MembershipLabel::kNonmember;
      same += p[static_cast<std::size_t>(i)] == t[static_cast<std::size_t>(i)];
    }
    mismatches += Accuracy(p, t) != static_cast<double>(same) / n;
  }
  ok = ok && mismatches == 0;
  d << "; accuracy mismatches " << mismatches;

  double sqrt_err = 0.0;
  for (const int dim : {1, 8, 32, 64}) {
    Eigen::MatrixXd a(dim, dim);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.Normal();
    const Eigen::MatrixXd s = a * a.transpose();
    const Eigen::MatrixXd r = PsdSqrt(s);
    sqrt_err = std::max(sqrt_err, (r * r - s).norm() / s.norm());
  }
  ok = ok && sqrt_err <= 1e-6;
  d << "; sqrt round trip " << sqrt_err;
  sheet.Line(8, ok, d.str());
}

// Criterion 9: the five pairwise formulas by hand, plus invariants.
void PairwiseSuite(Sheet& sheet) {
  using V = std::vector<float>;
  const V u = {1.0f, -2.0f, 0.5f}, v = {3.0f, 1.0f, 0.5f};
  const std::map<PairwiseOpKind, V> hand = {
      {PairwiseOpKind::kL1, {2.0f, 3.0f, 0.0f}},
      {PairwiseOpKind::kL2, {4.0f, 9.0f, 0.0f}},
      {PairwiseOpKind::kHadamard, {3.0f, -2.0f, 0.25f}},
      {PairwiseOpKind::kAverage, {2.0f, -0.5f, 0.5f}},
      {PairwiseOpKind::kConcatenation, {1.0f, -2.0f, 0.5f, 3.0f, 1.0f, 0.5f}}};
  int bad = 0;
  for (const auto& [op, expect] : hand) bad += PairwiseOp(u, v, op) != expect;
  int invariant_bad = 0;
  Rng rng(RngSeed{12});
  for (const int d : {1, 48, 64}) {
    V a(static_cast<std::size_t>(d)), b(static_cast<std::size_t>(d));
    for (auto& x : a) x = static_cast<float>(rng.Normal());
    for (auto& x : b) x = static_cast<float>(rng.Normal());
    for (const PairwiseOpKind op : kAllPairwiseOps) {
      const V ab = PairwiseOp(a, b, op);
      const int want = op == PairwiseOpKind::kConcatenation ? 2 * d : d;
      invariant_bad += static_cast<int>(ab.size()) != want || PairwiseOpDim(op, d) != want;
      if (op != PairwiseOpKind::kConcatenation) invariant_bad += ab != PairwiseOp(b, a, op);
    }
  }
  sheet.Line(9, bad == 0 && invariant_bad == 0,
             "hand formulas wrong " + std::to_string(bad) + "/5, invariant violations " +
                 std::to_string(invariant_bad) + " (d in {1,48,64})");
}

// Criterion 10: finite differences on each attack architecture.
void Gradchecks(Sheet& sheet) {
  Rng rng(RngSeed{13});
  auto label = [](int i) { return i % 2 ? MembershipLabel::kMember : MembershipLabel::kNonmember; };
  auto vec = [&](int d) {
    std::vector<float> x(static_cast<std::size_t>(d));
    for (auto& e : x) e = static_cast<float>(rng.Normal());
    return x;
  };
  std::vector<AttackFeature> pix, mlp, fused;
  for (int i = 0; i < 32; ++i) {
    AttackFeature p;
    p.kind = AttackKind::kIIP;
    p.pixel_payload = PixelMap{3, 32, 32, vec(3 * 32 * 32)};
    p.label = label(i);
    pix.push_back(p);
    AttackFeature m;
    m.kind = AttackKind::kIIS;
    m.vector_payload = {vec(128)};
    m.label = label(i);
    mlp.push_back(m);
    AttackFeature f;
    f.kind = AttackKind::kIV;
    f.vector_payload = {vec(64), vec(128), vec(128)};
    f.label = label(i);
    fused.push_back(f);
  }
  AttackHyper h;
  h.epochs = 3;
  const double e_cnn = AttackGradcheck(TrainAttack(pix, AttackArch::kCnn, h), pix[1], 1e-4);
  const double e_mlp = AttackGradcheck(TrainAttack(mlp, AttackArch::kMlp3, h), mlp[1], 1e-4);
  const double e_fus = AttackGradcheck(TrainAttack(fused, AttackArch::kFusion3, h), fused[1], 1e-4);
  const double worst = std::max({e_cnn, e_mlp, e_fus});
  sheet.Line(10, worst < 1e-3,
             "max relative error cnn " + Fmt("%.2e", e_cnn) + ", mlp3 " + Fmt("%.2e", e_mlp) +
                 ", fusion3 " + Fmt("%.2e", e_fus) + " (bound 1e-3)");
}

int Main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_work");
  fs::create_directories(work);
  const fs::path home = work / "home";
  fs::remove_all(home);
  fs::create_directories(home);
  setenv("T2I_MIA_HOME", home.c_str(), 1);
  Sheet sheet(work / "acceptance.txt");
  fs::remove(work / "acceptance.txt");

  MetricOracles(sheet);
  PairwiseSuite(sheet);
  Gradchecks(sheet);

  ExperimentConfig ref = ExperimentConfig::Preset("reference");
  ref.out_dir = work / "reference";
  fs::remove_all(ref.out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<ResultRecord> records = RunExperiment(ref);
  const double ref_seconds = Seconds(t0);
  const auto acc = MeanByKind(records);

  // 1: leakage detected within budget.
  {
    bool ok = ref_seconds <= 1800.0;
    for (const auto& [k, a] : acc) ok = ok && a >= 0.55;
    ok = ok && acc.at("II-S") >= 0.75 && acc.at("IV") >= 0.75;
    sheet.Line(1, ok, Accuracies(acc) + "; wall clock " + Fmt("%.0f s", ref_seconds) +
                          " (need II-S,IV >= 0.75, all >= 0.55, <= 1800 s)");
  }
  // 2: orderings.
  {
    const bool a = acc.at("I-S") > acc.at("I-P");
    const bool b = acc.at("II-S") > acc.at("II-P");
    const bool c = acc.at("II-S") > acc.at("III");
    const bool d = acc.at("IV") >= acc.at("III");
    sheet.Line(2, a && b && c && d,
               std::string("I-S>I-P ") + (a ? "yes" : "no") + ", II-S>II-P " + (b ? "yes" : "no") +
                   ", II-S>III " + (c ? "yes" : "no") + ", IV>=III " + (d ? "yes" : "no"));
  }
  const auto pairs = ReadPairs(ref.out_dir / "features");
  // 3: FID direction, recomputed from the cached embeddings.
  {
    const double fm = records.front().fid_member, fn = records.front().fid_nonmember;
    const double om = OracleFid(pairs.at(true).query, pairs.at(true).generated);
    const double on = OracleFid(pairs.at(false).query, pairs.at(false).generated);
    const double gap = (fn - fm) / fn;
    const bool agree = std::abs(om - fm) <= 1e-6 * std::max(1.0, fm) &&
                       std::abs(on - fn) <= 1e-6 * std::max(1.0, fn);
    sheet.Line(3, fm < fn && gap >= 0.2 && agree,
               "fid member " + Fmt("%.5f", fm) + " nonmember " + Fmt("%.5f", fn) + " gap " +
                   Fmt("%.1f%%", 100.0 * gap) + "; oracle " + Fmt("%.5f", om) + " / " +
                   Fmt("%.5f", on) + (agree ? " (agrees)" : " (DISAGREES)"));
  }
  // 4: cosine direction.
  {
    const double cm = MeanCosine(pairs.at(true)), cn = MeanCosine(pairs.at(false));
    sheet.Line(4, cm > cn,
               "mean cosine member " + Fmt("%.4f", cm) + " nonmember " + Fmt("%.4f", cn));
  }
  // 11: determinism and the single-query counter.
  {
    ExperimentConfig again = ref;
    again.out_dir = work / "reference_again";
    fs::remove_all(again.out_dir);
    const std::vector<ResultRecord> second = RunExperiment(again);
    bool same = second.size() == records.size();
    for (std::size_t i = 0; same && i < records.size(); ++i) {
      same = StripTimings(records[i]) == StripTimings(second[i]);
    }
    std::ifstream fid_file(ref.out_dir / "features" / "fid.json");
    const long queries = json::parse(fid_file).at("target_queries").get<long>();
    const long expect = 2L * std::min(ref.data.member_pool, ref.data.nonmember_pool);
    const long cached = static_cast<long>(pairs.at(true).query.size() + pairs.at(false).query.size());
    sheet.Line(11, same && queries == expect && cached == expect,
               std::string("records ") + (same ? "byte-identical" : "DIFFER") + " across runs; "
                   "target queries " + std::to_string(queries) + ", auxiliary images " +
                   std::to_string(expect) + ", cached features " + std::to_string(cached));
  }
  // 5: null calibration on a freshly initialized target.
  {
    std::map<std::string, std::vector<double>> per_kind;
    for (std::uint64_t s = 1; s <= 5; ++s) {
      ExperimentConfig null = ref;
      null.target.untrained = true;
      null.seed = s;
      null.out_dir = work / ("null_" + std::to_string(s));
      fs::remove_all(null.out_dir);
      for (const auto& [k, a] : MeanByKind(RunExperiment(null))) per_kind[k].push_back(a);
    }
    bool ok = true;
    std::string d;
    for (const auto& [k, v] : per_kind) {
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      ok = ok && *lo >= 0.43 && *hi <= 0.57;
      d += k + " " + Fmt("%.3f", mean) + " [" + Fmt("%.3f", *lo) + "," + Fmt("%.3f", *hi) + "] ";
    }
    sheet.Line(5, ok, d + "(every seed in 0.5 +- 0.07)");
  }
  // 6: auxiliary fraction 0.05.
  {
    const auto rs = RunAblation(ref, AblationSpec{AblationAxis::kAuxiliaryFraction, {0.05}});
    const auto m = MeanByKind(rs, "fraction", "0.05");
    sheet.Line(6, m.at("II-S") >= 0.65 && m.at("IV") >= 0.65,
               Accuracies(m) + " (need II-S, IV >= 0.65)");
  }
  // 7: denoising steps, semantic attacks only.
  {
    ExperimentConfig c = ref;
    c.attack.kinds = {AttackKind::kIS, AttackKind::kIIS, AttackKind::kIII, AttackKind::kIV};
    const auto rs = RunAblation(c, AblationSpec::Default(AblationAxis::kDenoisingSteps));
    std::set<std::string> done;
    for (const ResultRecord& r : rs) done.insert(r.axis_value);
    const auto a20 = MeanByKind(rs, "steps", "20"), a200 = MeanByKind(rs, "steps", "200");
    bool ok = done == std::set<std::string>{"20", "50", "100", "200"};
    std::string d;
    for (const auto& [k, a] : a20) {
      const double diff = std::abs(a - a200.at(k));
      ok = ok && diff <= 0.1;
      d += k + " " + Fmt("%.3f", a) + "->" + Fmt("%.3f", a200.at(k)) + " ";
    }
    sheet.Line(7, ok, std::to_string(done.size()) + "/4 settings; 20->200 steps: " + d +
                          "(need |diff| <= 0.1)");
  }
  // 12: operation grid.
  {
    const auto rs = RunAblation(ref, AblationSpec::Default(AblationAxis::kOperationGrid));
    std::map<std::string, std::pair<double, int>> cells;
    for (const ResultRecord& r : rs) {
      cells[r.axis_value].first += r.accuracy;
      ++cells[r.axis_value].second;
    }
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& [cell, v] : cells) ranked.emplace_back(v.first / v.second, cell);
    std::sort(ranked.rbegin(), ranked.rend());
    const std::string target = "concatenation/concatenation";
    double concat = 0.0;
    for (const auto& [a, cell] : ranked) {
      if (cell == target) concat = a;
    }
    const long better = std::count_if(ranked.begin(), ranked.end(),
                                      [&](const auto& p) { return p.first > concat; });
    const bool heatmap = fs::exists(ref.out_dir / "operation_grid" / "op_grid.png");
    sheet.Line(12, cells.size() == 25 && heatmap && better < 3,
               std::to_string(cells.size()) + " cells, heatmap " + (heatmap ? "written" : "MISSING") +
                   "; concat/concat " + Fmt("%.3f", concat) + " rank " + std::to_string(better + 1) +
                   "; best " + ranked.front().second + " " + Fmt("%.3f", ranked.front().first));
    for (const auto& [a, cell] : ranked) sheet.Note(cell + " " + Fmt("%.3f", a));
  }
  sheet.Summary();
  return 0;
}

}  // namespace
}  // namespace t2i_mia

int main(int argc, char** argv) {
  try {
    return t2i_mia::Main(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: %s\n", e.what());
    return 1;
  }
}
