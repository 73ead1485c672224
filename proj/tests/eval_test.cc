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

#include <Eigen/Core>
#include <cmath>
#include <filesystem>
#include <vector>

#include "gtest/gtest.h"
#include "t2i_mia/core/error.h"
#include "t2i_mia/core/rng.h"
#include "t2i_mia/core/serialize.h"
#include "t2i_mia/eval/metrics.h"
#include "t2i_mia/eval/report.h"

namespace t2i_mia {
namespace {

constexpr auto kM = MembershipLabel::kMember;
constexpr auto kN = MembershipLabel::kNonmember;

GaussianSummary Summary1d(double mean, double var) {
  return {Eigen::VectorXd::Constant(1, mean), Eigen::MatrixXd::Constant(1, 1, var),
          10};
}

Eigen::MatrixXd RandomPsd(int d, Rng& rng, int rank) {
  Eigen::MatrixXd a(d, rank);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.Normal();
  return a * a.transpose() / rank;
}

TEST(AccuracyTest, HandCounts) {
  const std::vector<MembershipLabel> t = {kM, kN, kM, kN};
  EXPECT_EQ(Accuracy(t, t), 1.0);
  EXPECT_EQ(Accuracy(std::vector{kM, kN}, std::vector{kN, kM}), 0.0);
  EXPECT_EQ(Accuracy(std::vector{kM, kN, kM, kM}, t), 0.75);
  EXPECT_THROW(Accuracy(std::vector{kM}, t), Error);
  EXPECT_THROW(Accuracy(std::vector<MembershipLabel>{},
                        std::vector<MembershipLabel>{}),
               Error);
}

TEST(AccuracyTest, MatchesCountingOracle) {
  Rng rng(RngSeed{1});
  for (int len = 1; len <= 1000; len += 37) {
    std::vector<MembershipLabel> p, t;
    int hits = 0;
    for (int i = 0; i < len; ++i) {
      p.push_back(rng.Bernoulli(0.5) ? kM : kN);
      t.push_back(rng.Bernoulli(0.5) ? kM : kN);
      if (p.back() == t.back()) ++hits;
    }
    EXPECT_EQ(Accuracy(p, t), static_cast<double>(hits) / len);
  }
}

TEST(GaussianTest, HandArithmetic) {
  Eigen::MatrixXd x(2, 1);
  x << 0, 2;
  const auto g = SummarizeGaussian(x);
  EXPECT_EQ(g.mean(0), 1.0);
  EXPECT_EQ(g.covariance(0, 0), 2.0);
  Eigen::MatrixXd same(2, 3);
  same << 1, 2, 3, 1, 2, 3;
  EXPECT_EQ(SummarizeGaussian(same).covariance.norm(), 0.0);
  EXPECT_THROW(SummarizeGaussian(Eigen::MatrixXd(1, 3)), Error);
}

TEST(GaussianTest, RecoversKnownGaussian) {
  // x = mu + L z, Sigma = L L^T.
  Rng rng(RngSeed{2});
  const Eigen::Vector2d mu(1.0, -2.0);
  Eigen::Matrix2d l;
  l << 1.0, 0.0, 0.6, 0.8;
  const Eigen::Matrix2d sigma = l * l.transpose();
  const int n = 10000;
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d z(rng.Normal(), rng.Normal());
    x.row(i) = (mu + l * z).transpose();
  }
  const auto g = SummarizeGaussian(x);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(g.mean(i), mu(i), 3.0 * std::sqrt(sigma(i, i) / n));
    for (int j = 0; j < 2; ++j) {
      // Var of a sample covariance entry: (s_ii s_jj + s_ij^2) / n.
      const double se =
          std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) / n);
      EXPECT_NEAR(g.covariance(i, j), sigma(i, j), 3.0 * se);
    }
  }
  EXPECT_LT((g.covariance - g.covariance.transpose()).norm(), 1e-8);
}

TEST(FidTest, ClosedForms) {
  EXPECT_NEAR(Fid(Summary1d(0, 1), Summary1d(1, 1)), 1.0, 1e-12);
  EXPECT_NEAR(Fid(Summary1d(0, 1), Summary1d(0, 4)), 1.0, 1e-12);
  Rng rng(RngSeed{3});
  Eigen::MatrixXd x(50, 8);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.Normal();
  const auto a = SummarizeGaussian(x);
  EXPECT_NEAR(Fid(a, a), 0.0, 1e-6);
  x.col(0).array() += 0.5;
  const auto b = SummarizeGaussian(x);
  EXPECT_GT(Fid(a, b), 0.0);
  EXPECT_NEAR(Fid(a, b), Fid(b, a), 1e-9);
  EXPECT_THROW(Fid(a, Summary1d(0, 1)), Error);
  GaussianSummary bad = Summary1d(0, -1);
  EXPECT_THROW(Fid(bad, Summary1d(0, 1)), Error);
}

TEST(FidTest, MatchesDirectFormulaOnCommutingCovariances) {
  // Diagonal covariances commute, so Tr((AB)^1/2) = sum sqrt(a_i b_i).
  const Eigen::Vector3d da(1.0, 2.0, 0.5), db(3.0, 0.25, 0.5);
  const GaussianSummary a{Eigen::Vector3d(0, 1, 2), da.asDiagonal().toDenseMatrix(), 5};
  const GaussianSummary b{Eigen::Vector3d(1, 1, 0), db.asDiagonal().toDenseMatrix(), 5};
  double expect = 1.0 + 4.0;
  for (int i = 0; i < 3; ++i) {
    expect += da(i) + db(i) - 2.0 * std::sqrt(da(i) * db(i));
  }
  EXPECT_NEAR(Fid(a, b), expect, 1e-10);
}

TEST(PsdSqrtTest, SquaresBack) {
  Rng rng(RngSeed{4});
  for (const int d : {1, 2, 8, 32, 64}) {
    for (const int rank : {d, std::max(1, d / 2)}) {
      const Eigen::MatrixXd s = RandomPsd(d, rng, rank);
      const Eigen::MatrixXd r = PsdSqrt(s);
      EXPECT_LT((r * r - s).norm() / s.norm(), 1e-6) << "d=" << d;
    }
  }
  Eigen::MatrixXd neg = Eigen::MatrixXd::Identity(3, 3);
  neg(2, 2) = -0.5;
  EXPECT_THROW(PsdSqrt(neg), Error);
}

TEST(HistogramTest, BinsAndMass) {
  const EmbeddingVector u({1.0f, 0.0f}, Modality::kImage);
  const EmbeddingVector v({0.0f, 1.0f}, Modality::kImage);
  const EmbeddingVector w({-1.0f, 0.0f}, Modality::kImage);
  const std::vector<std::pair<EmbeddingVector, EmbeddingVector>> pairs = {
      {u, u}, {u, v}, {u, w}, {v, v}};
  const Histogram h = CosineHistogram(pairs, 21);
  EXPECT_EQ(h.total(), 4);
  EXPECT_EQ(h.counts[20], 2);
  EXPECT_EQ(h.counts[10], 1);
  EXPECT_EQ(h.counts[0], 1);
  EXPECT_NEAR(h.mean, 0.25, 1e-12);
  EXPECT_THROW(CosineHistogram(pairs, 1), Error);
}

ResultRecord Record(const std::string& kind, double acc, const std::string& axis = "",
                    const std::string& value = "") {
  ResultRecord r;
  r.experiment_id = "exp";
  r.attack_kind = kind;
  r.accuracy = acc;
  r.fid_member = 1.0;
  r.fid_nonmember = 2.0;
  r.axis = axis;
  r.axis_value = value;
  r.seeds = {7};
  r.timings_seconds = {{"attack", 1.5}};
  return r;
}

TEST(ReportTest, OneRecordOneSummaryRow) {
  const auto dir = std::filesystem::temp_directory_path() / "t2i_mia_report1";
  std::filesystem::remove_all(dir);
  const std::vector<ResultRecord> rs = {Record("II-S", 0.8)};
  const ReportFiles f = EmitReport(rs, dir);
  const std::string summary = ReadFileBytes(f.summary);
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 1);
  const auto back = ReadResults(f.results);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].ToJson(), rs[0].ToJson());
  EXPECT_EQ(f.grid_cells, 0);
  ASSERT_EQ(f.plots.size(), 1u);
  EXPECT_TRUE(std::filesystem::exists(f.plots[0]));
  std::filesystem::remove_all(dir);
}

TEST(ReportTest, RerunIsByteIdenticalAndGridHas25Cells) {
  const auto dir = std::filesystem::temp_directory_path() / "t2i_mia_report2";
  std::filesystem::remove_all(dir);
  const char* ops[] = {"l1", "l2", "hadamard", "average", "concatenation"};
  std::vector<ResultRecord> rs;
  for (const char* a : ops) {
    for (const char* b : ops) {
      rs.push_back(Record("IV", 0.6, "ops", std::string(a) + "/" + b));
    }
  }
  for (const int s : {20, 50, 100, 200}) {
    rs.push_back(Record("II-S", 0.7, "steps", std::to_string(s)));
  }
  rs.push_back(Record("IV", 0.8));
  rs.back().member_cosine_hist = {0, 1, 5};
  rs.back().nonmember_cosine_hist = {1, 3, 2};
  const ReportFiles f1 = EmitReport(rs, dir);
  EXPECT_EQ(f1.grid_cells, 25);
  const std::string results = ReadFileBytes(f1.results);
  const std::string summary = ReadFileBytes(f1.summary);
  std::vector<std::string> plots;
  for (const auto& p : f1.plots) plots.push_back(ReadFileBytes(p));
  EXPECT_EQ(f1.plots.size(), 5u);
  const ReportFiles f2 = EmitReport(rs, dir);
  EXPECT_EQ(ReadFileBytes(f2.results), results);
  EXPECT_EQ(ReadFileBytes(f2.summary), summary);
  for (std::size_t i = 0; i < plots.size(); ++i) {
    EXPECT_EQ(ReadFileBytes(f2.plots[i]), plots[i]);
  }
  std::filesystem::remove_all(dir);
}

TEST(ReportTest, Errors) {
  EXPECT_THROW(EmitReport(std::vector<ResultRecord>{}, "/tmp"), Error);
  const std::vector<ResultRecord> rs = {Record("I-P", 0.6)};
  EXPECT_THROW(EmitReport(rs, "/proc/t2i_mia_nope"), Error);
  ResultRecord bad = Record("I-P", 1.5);
  EXPECT_THROW(bad.ToJson(), Error);
}

}  // namespace
}  // namespace t2i_mia
