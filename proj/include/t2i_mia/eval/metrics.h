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

#ifndef T2I_MIA_EVAL_METRICS_H_
#define T2I_MIA_EVAL_METRICS_H_

#include <Eigen/Core>
#include <span>
#include <utility>
#include <vector>

#include "t2i_mia/core/types.h"

namespace t2i_mia {

// Fraction of positions where preds and truth agree. Throws Error on empty
// or unequal-length inputs.
double Accuracy(std::span<const MembershipLabel> preds,
                std::span<const MembershipLabel> truth);

struct GaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  int n = 0;

  int dim() const { return static_cast<int>(mean.size()); }
};

// Sample mean and unbiased covariance. Throws Error if n < 2 or dims differ.
GaussianSummary SummarizeGaussian(std::span<const EmbeddingVector> embeddings);
GaussianSummary SummarizeGaussian(const Eigen::MatrixXd& samples_by_row);

// Square root of a symmetric PSD matrix via eigendecomposition; eigenvalues
// below kSqrtClamp are treated as zero. Throws Error if the matrix has an
// eigenvalue below -kPsdTolerance * max(1, largest |eigenvalue|).
inline constexpr double kSqrtClamp = 1e-10;
inline constexpr double kPsdTolerance = 1e-8;
Eigen::MatrixXd PsdSqrt(const Eigen::MatrixXd& m);

// Frechet distance between two Gaussians:
// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).
// The trace of (S_a S_b)^(1/2) is taken from the symmetric matrix
// S_a^(1/2) S_b S_a^(1/2), which has the same eigenvalues.
double Fid(const GaussianSummary& a, const GaussianSummary& b);

struct Histogram {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<int> counts;
  // Mean of the raw values (not of the bins).
  double mean = 0.0;
  int total() const;
};

// Cosine similarity of each pair, binned uniformly over [-1, 1]; the top
// edge belongs to the last bin. Throws Error if bins < 2 or dims differ.
Histogram CosineHistogram(
    std::span<const std::pair<EmbeddingVector, EmbeddingVector>> pairs,
    int bins);

}  // namespace t2i_mia

#endif  // T2I_MIA_EVAL_METRICS_H_
