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

#ifndef T2I_MIA_TARGETMODELS_DENOISER_H_
#define T2I_MIA_TARGETMODELS_DENOISER_H_

#include <cmath>
#include <span>
#include <vector>

#include "t2i_mia/core/vocabulary.h"
#include "t2i_mia/nn/layers.h"

namespace t2i_mia {

// Clean-image predictor of the diffusion target. A small U-shaped conv net on
// 32x32 inputs: two stride-2 encoder convs, a spatial caption map joined at
// 8x8, two middle convs, and a decoder with skips from the 16x16 encoder
// features and from the raw input. Timestep and caption enter every block
// as additive per-channel biases.
template <typename S>
class DenoiserNet {
 public:
  using M = nn::Matrix<S>;
  using Map = nn::Map2d<S>;

  static constexpr int kTimeDim = 32;
  static constexpr int kContextDim = 64;
  static constexpr int kCondMapChannels = 8;
  // Bias rows in `film` for e1, e2, m1, m2, d1.
  static constexpr int kFilmOffsets[6] = {0, 32, 96, 160, 192, 208};

  struct Cache {
    M ctx_in, a1, h1, a2, h;
    Map z1, z2, z3, z4, z5, z6;
    typename nn::Conv2d<S>::Cache c1, c2, c3, c4, c5, c6, c7;
  };

  DenoiserNet(int cond_dim, Rng& rng)
      : words("words", Vocabulary::size(), cond_dim, rng),
        ctx1("ctx1", kTimeDim + cond_dim, kContextDim, rng),
        ctx2("ctx2", kContextDim, kContextDim, rng),
        film("film", kContextDim, kFilmOffsets[5], rng),
        cmap("cmap", kContextDim, kCondMapChannels * 64, rng),
        e1("e1", 3, 32, 2, rng),
        e2("e2", 32, 64, 2, rng),
        m1("m1", 64 + kCondMapChannels, 64, 1, rng),
        m2("m2", 64, 32, 1, rng),
        d1("d1", 32, 16, 1, rng),
        d2("d2", 16 + 3, 16, 1, rng),
        out("out", 16, 3, 1, rng) {}

  nn::ParameterRefs<S> Params() {
    nn::ParameterRefs<S> p;
    words.Collect(p);
    for (auto* l : {&ctx1, &ctx2, &film, &cmap}) l->Collect(p);
    for (auto* c : {&e1, &e2, &m1, &m2, &d1, &d2, &out}) c->Collect(p);
    return p;
  }

  static M TimeEmbedding(std::span<const int> t) {
    M emb(kTimeDim, static_cast<Eigen::Index>(t.size()));
    constexpr int half = kTimeDim / 2;
    for (std::size_t b = 0; b < t.size(); ++b) {
      for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        const double arg = t[b] * freq;
        emb(i, static_cast<Eigen::Index>(b)) = static_cast<S>(std::sin(arg));
        emb(half + i, static_cast<Eigen::Index>(b)) = static_cast<S>(std::cos(arg));
      }
    }
    return emb;
  }

  // x: 3 x (B*32*32) in [-1, 1] scale; returns the predicted clean image.
  Map Forward(const Map& x, std::span<const int> t,
              std::span<const std::vector<int>> tokens, Cache* cache) const {
    Cache local;
    Cache& c = cache != nullptr ? *cache : local;
    const M cond = words.Forward(tokens);
    c.ctx_in.resize(kTimeDim + cond.rows(), cond.cols());
    c.ctx_in << TimeEmbedding(t), cond;
    c.a1 = ctx1.Forward(c.ctx_in);
    c.h1 = nn::Silu(c.a1);
    c.a2 = ctx2.Forward(c.h1);
    c.h = nn::Silu(c.a2);
    const M f = film.Forward(c.h);
    const Map cm = nn::Unflatten<S>(cmap.Forward(c.h), kCondMapChannels, 8, 8);

    c.z1 = e1.Forward(x, &c.c1);
    AddBias(c.z1, f, 0);
    const Map s1 = nn::Silu(c.z1);
    c.z2 = e2.Forward(s1, &c.c2);
    AddBias(c.z2, f, 1);
    c.z3 = m1.Forward(nn::ConcatChannels(nn::Silu(c.z2), cm), &c.c3);
    AddBias(c.z3, f, 2);
    c.z4 = m2.Forward(nn::Silu(c.z3), &c.c4);
    AddBias(c.z4, f, 3);
    Map u1 = nn::Upsample2x(nn::Silu(c.z4));
    u1.data += s1.data;
    c.z5 = d1.Forward(u1, &c.c5);
    AddBias(c.z5, f, 4);
    c.z6 = d2.Forward(nn::ConcatChannels(nn::Upsample2x(nn::Silu(c.z5)), x),
                      &c.c6);
    return out.Forward(nn::Silu(c.z6), &c.c7);
  }

  // Accumulates parameter gradients for dL/d(output) = dy.
  void Backward(const Cache& c, std::span<const std::vector<int>> tokens,
                const Map& dy) {
    M df = M::Zero(kFilmOffsets[5], dy.batch);
    const Map dz6 = nn::SiluBackward(c.z6, out.Backward(c.c7, dy));
    const Map dcat2 = d2.Backward(c.c6, dz6);
    const Map dz5 = nn::SiluBackward(
        c.z5, nn::Upsample2xBackward(Rows(dcat2, 0, 16)));
    BiasGrad(df, dz5, 4);
    const Map du1 = d1.Backward(c.c5, dz5);
    const Map dz4 = nn::SiluBackward(c.z4, nn::Upsample2xBackward(du1));
    BiasGrad(df, dz4, 3);
    const Map dz3 = nn::SiluBackward(c.z3, m2.Backward(c.c4, dz4));
    BiasGrad(df, dz3, 2);
    const Map dcat = m1.Backward(c.c3, dz3);
    const Map dz2 = nn::SiluBackward(c.z2, Rows(dcat, 0, 64));
    BiasGrad(df, dz2, 1);
    Map ds1 = e2.Backward(c.c2, dz2);
    ds1.data += du1.data;
    const Map dz1 = nn::SiluBackward(c.z1, ds1);
    BiasGrad(df, dz1, 0);
    e1.Backward(c.c1, dz1);

    M dh = film.Backward(c.h, df);
    dh += cmap.Backward(c.h, nn::Flatten(Rows(dcat, 64, kCondMapChannels)));
    const M dh1 = ctx2.Backward(c.h1, nn::SiluBackward(c.a2, dh));
    const M dctx = ctx1.Backward(c.ctx_in, nn::SiluBackward(c.a1, dh1));
    words.Backward(tokens, dctx.bottomRows(dctx.rows() - kTimeDim));
  }

  nn::MeanEmbedding<S> words;
  nn::Linear<S> ctx1, ctx2, film, cmap;
  nn::Conv2d<S> e1, e2, m1, m2, d1, d2, out;

 private:
  static void AddBias(Map& z, const M& f, int block) {
    nn::AddChannelBias(z, M(f.middleRows(kFilmOffsets[block],
                                         kFilmOffsets[block + 1] -
                                             kFilmOffsets[block])));
  }

  static void BiasGrad(M& df, const Map& dz, int block) {
    df.middleRows(kFilmOffsets[block],
                  kFilmOffsets[block + 1] - kFilmOffsets[block]) +=
        nn::AddChannelBiasBackward(dz);
  }

  static Map Rows(const Map& m, int start, int count) {
    return {m.data.middleRows(start, count), m.height, m.width, m.batch};
  }
};

}  // namespace t2i_mia

#endif  // T2I_MIA_TARGETMODELS_DENOISER_H_
