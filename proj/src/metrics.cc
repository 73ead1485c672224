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

#include "t2i_mia/eval/metrics.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

#include "t2i_mia/core/error.h"

namespace t2i_mia {

double Accuracy(std::span<const MembershipLabel> preds,
                std::span<const MembershipLabel> truth) {
  if (preds.size() != truth.size()) {
    throw Error("accuracy over " + std::to_string(preds.size()) +
                " predictions and " + std::to_string(truth.size()) + " labels");
  }
  if (preds.empty()) throw Error("accuracy of an empty list");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

GaussianSummary SummarizeGaussian(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw Error("a Gaussian summary needs at least 2 samples");
  GaussianSummary g;
  g.n = static_cast<int>(n);
  g.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - g.mean.transpose();
  g.covariance = (centered.transpose() * centered) / static_cast<double>(n - 1);
  // Exact symmetry regardless of GEMM rounding.
  g.covariance = (0.5 * (g.covariance + g.covariance.transpose())).eval();
  return g;
}

GaussianSummary SummarizeGaussian(std::span<const EmbeddingVector> embeddings) {
  if (embeddings.size() < 2) {
    throw Error("a Gaussian summary needs at least 2 samples");
  }
  const int d = embeddings.front().dim();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(embeddings.size()), d);
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].dim() != d) {
      throw Error("embeddings of mixed dimension in a Gaussian summary");
    }
    for (int j = 0; j < d; ++j) {
      x(static_cast<Eigen::Index>(i), j) = embeddings[i].values()[j];
    }
  }
  return SummarizeGaussian(x);
}

Eigen::MatrixXd PsdSqrt(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw Error("square root of a non-square matrix");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -kPsdTolerance * scale) {
    throw Error("matrix is not positive semi-definite (eigenvalue " +
                std::to_string(ev.minCoeff()) + ")");
  }
  const Eigen::VectorXd root =
      ev.unaryExpr([](double v) { return v < kSqrtClamp ? 0.0 : std::sqrt(v); });
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double Fid(const GaussianSummary& a, const GaussianSummary& b) {
  if (a.dim() != b.dim()) {
    throw Error("FID between summaries of dimension " + std::to_string(a.dim()) +
                " and " + std::to_string(b.dim()));
  }
  const Eigen::MatrixXd ra = PsdSqrt(a.covariance);
  PsdSqrt(b.covariance);  // PSD check only.
  const Eigen::MatrixXd inner = ra * b.covariance * ra;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  double trace_sqrt = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double v = es.eigenvalues()(i);
    if (v >= kSqrtClamp) trace_sqrt += std::sqrt(v);
  }
  const double d = (a.mean - b.mean).squaredNorm() + a.covariance.trace() +
                   b.covariance.trace() - 2.0 * trace_sqrt;
  // Round-off can leave tiny negatives for identical inputs.
  return std::max(0.0, d);
}

int Histogram::total() const {
  int t = 0;
  for (const int c : counts) t += c;
  return t;
}

Histogram CosineHistogram(
    std::span<const std::pair<EmbeddingVector, EmbeddingVector>> pairs,
    int bins) {
  if (bins < 2) throw Error("a histogram needs at least 2 bins");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  double sum = 0.0;
  for (const auto& [u, v] : pairs) {
    const double c = std::clamp(CosineSimilarity(u, v), -1.0, 1.0);
    sum += c;
    const int bin = std::min(bins - 1, static_cast<int>((c + 1.0) / 2.0 * bins));
    ++h.counts[static_cast<std::size_t>(bin)];
  }
  h.mean = pairs.empty() ? 0.0 : sum / static_cast<double>(pairs.size());
  return h;
}

}  // namespace t2i_mia
