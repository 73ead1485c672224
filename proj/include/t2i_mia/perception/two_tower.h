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

#ifndef T2I_MIA_PERCEPTION_TWO_TOWER_H_
#define T2I_MIA_PERCEPTION_TWO_TOWER_H_

#include <cmath>
#include <span>
#include <vector>

#include "t2i_mia/core/vocabulary.h"
#include "t2i_mia/nn/layers.h"

namespace t2i_mia {

// Image and text encoders mapping into one unit sphere of dimension `dim`.
// Image: three stride-2 convs (16, 32, 32 channels) on 32x32 inputs, flatten,
// linear. Text: token-embedding average, two-layer MLP. Both outputs are L2
// normalized.
template <typename S>
class TwoTowerNet {
 public:
  using M = nn::Matrix<S>;
  using Map = nn::Map2d<S>;

  static constexpr int kWordDim = 32;
  static constexpr int kTextHidden = 64;

  struct ImageCache {
    typename nn::Conv2d<S>::Cache c1, c2, c3;
    Map z1, z2, z3;
    M flat, unit;
    nn::Vector<S> norms;
  };

  struct TextCache {
    M mean, a1, h1, unit;
    nn::Vector<S> norms;
  };

  TwoTowerNet(int dim, Rng& rng)
      : conv1("img.conv1", 3, 16, 2, rng),
        conv2("img.conv2", 16, 32, 2, rng),
        conv3("img.conv3", 32, 32, 2, rng),
        img_proj("img.proj", 32 * 4 * 4, dim, rng),
        words("txt.words", Vocabulary::size(), kWordDim, rng),
        txt1("txt.fc1", kWordDim, kTextHidden, rng),
        txt2("txt.fc2", kTextHidden, dim, rng) {}

  int dim() const { return img_proj.out(); }

  nn::ParameterRefs<S> Params() {
    nn::ParameterRefs<S> p;
    for (auto* c : {&conv1, &conv2, &conv3}) c->Collect(p);
    img_proj.Collect(p);
    words.Collect(p);
    txt1.Collect(p);
    txt2.Collect(p);
    return p;
  }

  // x: 3 x (B*32*32) with pixels in [0, 1]. Returns dim x B unit columns.
  M ImageForward(const Map& x, ImageCache* cache) const {
    ImageCache local;
    ImageCache& c = cache != nullptr ? *cache : local;
    c.z1 = conv1.Forward(x, &c.c1);
    c.z2 = conv2.Forward(nn::Silu(c.z1), &c.c2);
    c.z3 = conv3.Forward(nn::Silu(c.z2), &c.c3);
    c.flat = nn::Flatten(nn::Silu(c.z3));
    c.unit = nn::NormalizeColumns<S>(img_proj.Forward(c.flat), &c.norms);
    return c.unit;
  }

  void ImageBackward(const ImageCache& c, const M& dunit) {
    const M dproj = nn::NormalizeColumnsBackward(c.unit, c.norms, dunit);
    const M dflat = img_proj.Backward(c.flat, dproj);
    const Map dz3 = nn::SiluBackward(
        c.z3, nn::Unflatten<S>(dflat, 32, c.z3.height, c.z3.width));
    const Map dz2 = nn::SiluBackward(c.z2, conv3.Backward(c.c3, dz3));
    const Map dz1 = nn::SiluBackward(c.z1, conv2.Backward(c.c2, dz2));
    conv1.Backward(c.c1, dz1);
  }

  M TextForward(std::span<const std::vector<int>> tokens, TextCache* cache) const {
    TextCache local;
    TextCache& c = cache != nullptr ? *cache : local;
    c.mean = words.Forward(tokens);
    c.a1 = txt1.Forward(c.mean);
    c.h1 = nn::Silu(c.a1);
    c.unit = nn::NormalizeColumns<S>(txt2.Forward(c.h1), &c.norms);
    return c.unit;
  }

  void TextBackward(const TextCache& c, std::span<const std::vector<int>> tokens,
                    const M& dunit) {
    const M dout = nn::NormalizeColumnsBackward(c.unit, c.norms, dunit);
    const M dh1 = txt2.Backward(c.h1, dout);
    const M dmean = txt1.Backward(c.mean, nn::SiluBackward(c.a1, dh1));
    words.Backward(tokens, dmean);
  }

  nn::Conv2d<S> conv1, conv2, conv3;
  nn::Linear<S> img_proj;
  nn::MeanEmbedding<S> words;
  nn::Linear<S> txt1, txt2;
};

template <typename S>
struct ContrastiveLoss {
  S loss = S(0);
  nn::Matrix<S> d_image;
  nn::Matrix<S> d_text;
};

// Symmetric InfoNCE over a batch of matched columns: the mean of the
// image-to-text and text-to-image cross-entropies of the logits
// image^T text / temperature, where pair (i, i) is the positive.
template <typename S>
ContrastiveLoss<S> SymmetricInfoNce(const nn::Matrix<S>& image,
                                    const nn::Matrix<S>& text, S temperature) {
  const Eigen::Index n = image.cols();
  const nn::Matrix<S> logits = image.transpose() * text / temperature;
  nn::Matrix<S> p_rows(n, n), p_cols(n, n);
  ContrastiveLoss<S> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const S mr = logits.row(i).maxCoeff();
    const auto er = (logits.row(i).array() - mr).exp();
    const S zr = er.sum();
    p_rows.row(i) = er / zr;
    out.loss -= logits(i, i) - mr - std::log(zr);
    const S mc = logits.col(i).maxCoeff();
    const auto ec = (logits.col(i).array() - mc).exp();
    const S zc = ec.sum();
    p_cols.col(i) = ec / zc;
    out.loss -= logits(i, i) - mc - std::log(zc);
  }
  out.loss /= S(2 * n);
  nn::Matrix<S> dlogits = p_rows + p_cols;
  dlogits.diagonal().array() -= S(2);
  dlogits /= S(2 * n);
  out.d_image = text * dlogits.transpose() / temperature;
  out.d_text = image * dlogits / temperature;
  return out;
}

}  // namespace t2i_mia

#endif  // T2I_MIA_PERCEPTION_TWO_TOWER_H_
