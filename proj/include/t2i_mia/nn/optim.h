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

#ifndef T2I_MIA_NN_OPTIM_H_
#define T2I_MIA_NN_OPTIM_H_

#include <cmath>
#include <span>
#include <vector>

#include "t2i_mia/nn/layers.h"

namespace t2i_mia::nn {

template <typename S>
class Adam {
 public:
  Adam(ParameterRefs<S> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)),
        lr_(lr),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps) {
    for (const Parameter<S>* p : params_) {
      m_.push_back(Matrix<S>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void ZeroGrad() { ZeroGrads(params_); }

  void Step() {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    const S step = static_cast<S>(lr_ / c1);
    const S b1 = static_cast<S>(beta1_), b2 = static_cast<S>(beta2_);
    const S inv_c2 = static_cast<S>(1.0 / c2), eps = static_cast<S>(eps_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Parameter<S>& p = *params_[i];
      m_[i] = b1 * m_[i] + (S(1) - b1) * p.grad;
      v_[i] = b2 * v_[i] + (S(1) - b2) * p.grad.cwiseProduct(p.grad);
      p.value.array() -=
          step * m_[i].array() / ((v_[i].array() * inv_c2).sqrt() + eps);
    }
  }

  void set_lr(double lr) { lr_ = lr; }

 private:
  ParameterRefs<S> params_;
  std::vector<Matrix<S>> m_;
  std::vector<Matrix<S>> v_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  int t_ = 0;
};

template <typename S>
struct LossAndGrad {
  S loss = S(0);
  Matrix<S> grad;
};

// Mean softmax cross-entropy over the batch; logits are (classes x batch).
template <typename S>
LossAndGrad<S> SoftmaxCrossEntropy(const Matrix<S>& logits,
                                   std::span<const int> labels) {
  const Eigen::Index batch = logits.cols();
  LossAndGrad<S> out;
  out.grad.resize(logits.rows(), batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const S mx = logits.col(b).maxCoeff();
    const Vector<S> e = (logits.col(b).array() - mx).exp();
    const S z = e.sum();
    const int y = labels[static_cast<std::size_t>(b)];
    out.loss += -(logits(y, b) - mx - std::log(z));
    out.grad.col(b) = e / z;
    out.grad(y, b) -= S(1);
  }
  out.loss /= static_cast<S>(batch);
  out.grad /= static_cast<S>(batch);
  return out;
}

// Softmax of one logit column.
template <typename S>
Vector<S> Softmax(const Vector<S>& logits) {
  const Vector<S> e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

// Mean squared error over every element.
template <typename S>
LossAndGrad<S> MeanSquaredError(const Matrix<S>& pred, const Matrix<S>& target) {
  LossAndGrad<S> out;
  const Matrix<S> diff = pred - target;
  const S n = static_cast<S>(diff.size());
  out.loss = diff.squaredNorm() / n;
  out.grad = (S(2) / n) * diff;
  return out;
}

}  // namespace t2i_mia::nn

#endif  // T2I_MIA_NN_OPTIM_H_
