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

#include <vector>

#include "gtest/gtest.h"
#include "t2i_mia/nn/gradcheck.h"
#include "t2i_mia/nn/layers.h"
#include "t2i_mia/nn/optim.h"

namespace t2i_mia::nn {
namespace {

using M = Matrix<double>;

// A toy network touching every layer type; the input itself is a parameter
// so input gradients are checked too.
struct ToyNet {
  explicit ToyNet(Rng& rng)
      : input("input", 3, 2 * 8 * 8),
        conv1("conv1", 3, 4, 2, rng),
        conv2("conv2", 4, 4, 1, rng),
        head("head", 4 + 3, 5, rng),
        words("words", 6, 3, rng),
        positions("positions", 4, 3, rng) {
    InitUniform(input.value, 1.0, rng);
  }

  ParameterRefs<double> Params() {
    ParameterRefs<double> p{&input};
    conv1.Collect(p);
    conv2.Collect(p);
    head.Collect(p);
    words.Collect(p);
    positions.Collect(p);
    return p;
  }

  double LossAndBackward(bool backward) {
    const std::vector<std::vector<int>> tokens = {{0, 2, 5}, {1, 1, 4, 3}};
    const std::vector<int> pos = {1, 3};
    const std::vector<int> labels = {2, 4};

    Map2d<double> x{input.value, 8, 8, 2};
    Conv2d<double>::Cache c1, c2;
    const Map2d<double> a1 = conv1.Forward(x, &c1);
    const Map2d<double> h1 = Silu(a1);
    const Map2d<double> a2 = conv2.Forward(h1, &c2);
    const Map2d<double> up = Upsample2x(a2);
    const M pooled = GlobalAvgPool(up);
    const M text = words.Forward(tokens) + positions.Forward(pos);
    M joint(pooled.rows() + text.rows(), 2);
    joint << pooled, text;
    Vector<double> norms;
    const M unit = NormalizeColumns(joint, &norms);
    const M logits = head.Forward(unit);
    const auto ce = SoftmaxCrossEntropy<double>(logits, labels);
    if (!backward) return ce.loss;

    ZeroGrads(Params());
    const M dunit = head.Backward(unit, ce.grad);
    const M djoint = NormalizeColumnsBackward(unit, norms, dunit);
    words.Backward(tokens, djoint.bottomRows(3));
    positions.Backward(pos, djoint.bottomRows(3));
    const Map2d<double> dup =
        GlobalAvgPoolBackward<double>(djoint.topRows(4), up.height, up.width);
    const Map2d<double> da2 = Upsample2xBackward(dup);
    const Map2d<double> dh1 = conv2.Backward(c2, da2);
    const Map2d<double> da1 = SiluBackward(a1, dh1);
    const Map2d<double> dx = conv1.Backward(c1, da1);
    input.grad = dx.data;
    return ce.loss;
  }

  Parameter<double> input;
  Conv2d<double> conv1;
  Conv2d<double> conv2;
  Linear<double> head;
  MeanEmbedding<double> words;
  Embedding<double> positions;
};

TEST(NnTest, AnalyticGradientsMatchFiniteDifferences) {
  Rng rng(RngSeed{11});
  ToyNet net(rng);
  net.LossAndBackward(true);
  Rng pick(RngSeed{12});
  const auto result = CheckGradients<double>(
      net.Params(), [&] { return net.LossAndBackward(false); }, 1e-5, 300,
      pick);
  EXPECT_EQ(result.coordinates_checked, 300);
  EXPECT_LT(result.max_relative_error, 1e-5);
}

TEST(NnTest, ConvOutputShapes) {
  Rng rng(RngSeed{1});
  Conv2d<float> s2("c", 3, 8, 2, rng);
  Map2d<float> x{Matrix<float>::Ones(3, 2 * 32 * 32), 32, 32, 2};
  const auto y = s2.Forward(x);
  EXPECT_EQ(y.height, 16);
  EXPECT_EQ(y.width, 16);
  EXPECT_EQ(y.data.rows(), 8);
  EXPECT_EQ(y.data.cols(), 2 * 16 * 16);
}

TEST(NnTest, FlattenIsAReshapeOfOneSample) {
  Map2d<double> x{M(2, 2 * 4), 2, 2, 2};
  for (int i = 0; i < x.data.size(); ++i) x.data.data()[i] = i;
  const M flat = Flatten(x);
  ASSERT_EQ(flat.rows(), 8);
  ASSERT_EQ(flat.cols(), 2);
  EXPECT_EQ(flat(0, 1), 8.0);
  const auto back = Unflatten(flat, 2, 2, 2);
  EXPECT_EQ(back.data, x.data);
}

TEST(NnTest, AdamMinimisesAQuadratic) {
  Parameter<double> p("p", 3, 1);
  p.value << 1.0, -2.0, 0.5;
  Adam<double> opt({&p}, 0.05);
  for (int i = 0; i < 2000; ++i) {
    opt.ZeroGrad();
    p.grad = 2.0 * p.value;
    opt.Step();
  }
  EXPECT_LT(p.value.norm(), 1e-3);
}

TEST(NnTest, SoftmaxCrossEntropyOfUniformLogits) {
  const M logits = M::Zero(2, 4);
  const std::vector<int> labels = {0, 1, 0, 1};
  const auto ce = SoftmaxCrossEntropy<double>(logits, labels);
  EXPECT_NEAR(ce.loss, std::log(2.0), 1e-12);
}

}  // namespace
}  // namespace t2i_mia::nn
