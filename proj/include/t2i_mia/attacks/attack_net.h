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

#ifndef T2I_MIA_ATTACKS_ATTACK_NET_H_
#define T2I_MIA_ATTACKS_ATTACK_NET_H_

#include <string>
#include <vector>

#include "t2i_mia/core/error.h"
#include "t2i_mia/core/rng.h"
#include "t2i_mia/nn/layers.h"

namespace t2i_mia {

enum class AttackArch : std::uint8_t { kCnn, kMlp3, kFusion3 };

// cnn: 3 stride-2 convs (16/32/64) + global average pool + linear.
// mlp3: in -> 256 -> 64 -> 2 over the concatenated vectors.
// fusion3: one 2-layer MLP (width 32) per vector, concat, linear.
template <typename S>
class AttackNet {
 public:
  static constexpr int kSubWidth = 32;

  // `vector_dims` is empty for cnn; `channels` is ignored otherwise.
  AttackNet(AttackArch arch, int channels, const std::vector<int>& vector_dims,
            Rng& rng)
      : arch_(arch) {
    switch (arch) {
      case AttackArch::kCnn:
        c1_ = nn::Conv2d<S>("cnn.c1", channels, 16, 2, rng);
        c2_ = nn::Conv2d<S>("cnn.c2", 16, 32, 2, rng);
        c3_ = nn::Conv2d<S>("cnn.c3", 32, 64, 2, rng);
        head_ = nn::Linear<S>("cnn.head", 64, 2, rng);
        break;
      case AttackArch::kMlp3: {
        int in = 0;
        for (const int d : vector_dims) in += d;
        l1_ = nn::Linear<S>("mlp.l1", in, 256, rng);
        l2_ = nn::Linear<S>("mlp.l2", 256, 64, rng);
        head_ = nn::Linear<S>("mlp.head", 64, 2, rng);
        break;
      }
      case AttackArch::kFusion3:
        if (vector_dims.size() != 3) {
          throw Error("fusion3 needs exactly three input vectors");
        }
        for (int k = 0; k < 3; ++k) {
          const std::string n = "fusion.sub" + std::to_string(k);
          sub1_.emplace_back(n + ".l1", vector_dims[k], kSubWidth, rng);
          sub2_.emplace_back(n + ".l2", kSubWidth, kSubWidth, rng);
        }
        head_ = nn::Linear<S>("fusion.head", 3 * kSubWidth, 2, rng);
        break;
    }
  }

  AttackArch arch() const { return arch_; }

  // Pixel inputs for cnn; one (dim x batch) matrix per payload otherwise.
  struct Batch {
    nn::Map2d<S> pixels;
    std::vector<nn::Matrix<S>> vectors;
  };

  struct Cache {
    typename nn::Conv2d<S>::Cache cc1, cc2, cc3;
    nn::Map2d<S> a1, a2, a3;
    nn::Matrix<S> x, z1, z2;
    std::vector<nn::Matrix<S>> s1, s2;
    nn::Matrix<S> features;
  };

  // (2 x batch) logits; row 1 is the member class.
  nn::Matrix<S> Forward(const Batch& in, Cache* cache) const {
    Cache local;
    Cache& c = cache ? *cache : local;
    switch (arch_) {
      case AttackArch::kCnn:
        c.a1 = c1_.Forward(in.pixels, &c.cc1);
        c.a2 = c2_.Forward(nn::Silu(c.a1), &c.cc2);
        c.a3 = c3_.Forward(nn::Silu(c.a2), &c.cc3);
        c.features = nn::GlobalAvgPool(nn::Silu(c.a3));
        break;
      case AttackArch::kMlp3: {
        Eigen::Index rows = 0;
        for (const auto& v : in.vectors) rows += v.rows();
        c.x.resize(rows, in.vectors.front().cols());
        Eigen::Index r = 0;
        for (const auto& v : in.vectors) {
          c.x.middleRows(r, v.rows()) = v;
          r += v.rows();
        }
        c.z1 = l1_.Forward(c.x);
        c.z2 = l2_.Forward(nn::Silu(c.z1));
        c.features = nn::Silu(c.z2);
        break;
      }
      case AttackArch::kFusion3: {
        c.s1.resize(3);
        c.s2.resize(3);
        c.features.resize(3 * kSubWidth, in.vectors.front().cols());
        for (int k = 0; k < 3; ++k) {
          c.s1[k] = sub1_[k].Forward(in.vectors[k]);
          c.s2[k] = sub2_[k].Forward(nn::Silu(c.s1[k]));
          c.features.middleRows(k * kSubWidth, kSubWidth) = nn::Silu(c.s2[k]);
        }
        break;
      }
    }
    return head_.Forward(c.features);
  }

  // Accumulates parameter gradients.
  void Backward(const Cache& c, const Batch& in, const nn::Matrix<S>& dlogits) {
    const nn::Matrix<S> df = head_.Backward(c.features, dlogits);
    switch (arch_) {
      case AttackArch::kCnn: {
        const auto d3 = nn::SiluBackward(
            c.a3, nn::GlobalAvgPoolBackward<S>(df, c.a3.height, c.a3.width));
        const auto d2 = nn::SiluBackward(c.a2, c3_.Backward(c.cc3, d3));
        const auto d1 = nn::SiluBackward(c.a1, c2_.Backward(c.cc2, d2));
        c1_.Backward(c.cc1, d1);
        break;
      }
      case AttackArch::kMlp3: {
        const nn::Matrix<S> dz2 = nn::SiluBackward(c.z2, df);
        const nn::Matrix<S> dz1 =
            nn::SiluBackward(c.z1, l2_.Backward(nn::Silu(c.z1), dz2));
        l1_.Backward(c.x, dz1);
        break;
      }
      case AttackArch::kFusion3:
        for (int k = 0; k < 3; ++k) {
          const nn::Matrix<S> ds2 = nn::SiluBackward(
              c.s2[k], df.middleRows(k * kSubWidth, kSubWidth).eval());
          const nn::Matrix<S> ds1 = nn::SiluBackward(
              c.s1[k], sub2_[k].Backward(nn::Silu(c.s1[k]), ds2));
          sub1_[k].Backward(in.vectors[k], ds1);
        }
        break;
    }
  }

  nn::ParameterRefs<S> Params() {
    nn::ParameterRefs<S> p;
    switch (arch_) {
      case AttackArch::kCnn:
        c1_.Collect(p);
        c2_.Collect(p);
        c3_.Collect(p);
        break;
      case AttackArch::kMlp3:
        l1_.Collect(p);
        l2_.Collect(p);
        break;
      case AttackArch::kFusion3:
        for (int k = 0; k < 3; ++k) {
          sub1_[k].Collect(p);
          sub2_[k].Collect(p);
        }
        break;
    }
    head_.Collect(p);
    return p;
  }

 private:
  AttackArch arch_;
  nn::Conv2d<S> c1_, c2_, c3_;
  nn::Linear<S> l1_, l2_;
  std::vector<nn::Linear<S>> sub1_, sub2_;
  nn::Linear<S> head_;
};

}  // namespace t2i_mia

#endif  // T2I_MIA_ATTACKS_ATTACK_NET_H_
