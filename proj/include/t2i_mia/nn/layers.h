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

// Minimal layers with hand-written backward passes.
//
// Dense activations are (features x batch). Spatial activations are
// (channels x batch*height*width) with column (b * height + y) * width + x,
// so the memory of one sample is contiguous and flattening is a reshape.
// Forward passes are const; per-call state needed by the backward pass goes
// into caller-owned cache structs, so a trained model can run forward from
// several threads at once.

#ifndef T2I_MIA_NN_LAYERS_H_
#define T2I_MIA_NN_LAYERS_H_

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "t2i_mia/core/checkpoint.h"
#include "t2i_mia/core/error.h"
#include "t2i_mia/core/rng.h"

namespace t2i_mia::nn {

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
struct Parameter {
  Parameter() = default;
  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)),
        value(Matrix<S>::Zero(rows, cols)),
        grad(Matrix<S>::Zero(rows, cols)) {}

  std::string name;
  Matrix<S> value;
  Matrix<S> grad;
};

template <typename S>
using ParameterRefs = std::vector<Parameter<S>*>;

template <typename S>
void InitUniform(Matrix<S>& m, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<S>(rng.Uniform(-bound, bound));
  }
}

template <typename S>
void ZeroGrads(const ParameterRefs<S>& params) {
  for (Parameter<S>* p : params) p->grad.setZero();
}

template <typename S>
std::size_t CountParameters(const ParameterRefs<S>& params) {
  std::size_t n = 0;
  for (const Parameter<S>* p : params) n += static_cast<std::size_t>(p->value.size());
  return n;
}

template <typename S>
void SaveParameters(const ParameterRefs<S>& params, Checkpoint& ckpt) {
  for (const Parameter<S>* p : params) ckpt.Put<S>(p->name, p->value);
}

template <typename S>
void LoadParameters(const Checkpoint& ckpt, const ParameterRefs<S>& params) {
  for (Parameter<S>* p : params) {
    p->value = ckpt.Get<S>(p->name, static_cast<int>(p->value.rows()),
                           static_cast<int>(p->value.cols()));
  }
}

template <typename S>
bool AllFinite(const ParameterRefs<S>& params) {
  for (const Parameter<S>* p : params) {
    if (!p->value.allFinite()) return false;
  }
  return true;
}

// Spatial activation; see the layout note at the top of the file.
template <typename S>
struct Map2d {
  Matrix<S> data;
  int height = 0;
  int width = 0;
  int batch = 0;

  int channels() const { return static_cast<int>(data.rows()); }
  int pixels() const { return height * width; }
};

// y = W x + b.
template <typename S>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out, Rng& rng)
      : weight(name + ".weight", out, in), bias(name + ".bias", out, 1) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    InitUniform(weight.value, bound, rng);
    InitUniform(bias.value, bound, rng);
  }

  int in() const { return static_cast<int>(weight.value.cols()); }
  int out() const { return static_cast<int>(weight.value.rows()); }

  Matrix<S> Forward(const Matrix<S>& x) const {
    Matrix<S> y = weight.value * x;
    y.colwise() += bias.value.col(0);
    return y;
  }

  // Accumulates parameter gradients and returns dL/dx.
  Matrix<S> Backward(const Matrix<S>& x, const Matrix<S>& dy) {
    weight.grad.noalias() += dy * x.transpose();
    bias.grad.col(0) += dy.rowwise().sum();
    return weight.value.transpose() * dy;
  }

  void Collect(ParameterRefs<S>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }

  Parameter<S> weight;
  Parameter<S> bias;
};

// 3x3 convolution with zero padding 1 and stride 1 or 2, via im2col.
// Weight columns are ordered (ky * 3 + kx) * in_channels + c.
template <typename S>
class Conv2d {
 public:
  struct Cache {
    Map2d<S> input;
  };

  Conv2d() = default;
  Conv2d(const std::string& name, int in_channels, int out_channels,
         int stride, Rng& rng)
      : weight(name + ".weight", out_channels, 9 * in_channels),
        bias(name + ".bias", out_channels, 1),
        in_channels_(in_channels),
        stride_(stride) {
    if (stride != 1 && stride != 2) throw Error("conv stride must be 1 or 2");
    const double bound = 1.0 / std::sqrt(9.0 * in_channels);
    InitUniform(weight.value, bound, rng);
    InitUniform(bias.value, bound, rng);
  }

  int in_channels() const { return in_channels_; }
  int out_channels() const { return static_cast<int>(weight.value.rows()); }
  int stride() const { return stride_; }

  int OutSize(int in) const { return (in - 1) / stride_ + 1; }

  // The batch is processed in chunks of whole samples so the unfolded
  // columns stay cache-sized.
  Map2d<S> Forward(const Map2d<S>& x, Cache* cache = nullptr) const {
    if (x.channels() != in_channels_) throw Error("conv input channel mismatch");
    if (cache != nullptr) cache->input = x;
    Map2d<S> y;
    y.height = OutSize(x.height);
    y.width = OutSize(x.width);
    y.batch = x.batch;
    y.data.resize(out_channels(), static_cast<Eigen::Index>(x.batch) * y.pixels());
    Matrix<S> cols;
    const int chunk = ChunkSize(y.pixels());
    for (int b0 = 0; b0 < x.batch; b0 += chunk) {
      const int nb = std::min(chunk, x.batch - b0);
      Im2Col(x, b0, nb, cols);
      y.data.middleCols(static_cast<Eigen::Index>(b0) * y.pixels(), cols.cols())
          .noalias() = weight.value * cols;
    }
    y.data.colwise() += bias.value.col(0);
    return y;
  }

  Map2d<S> Backward(const Cache& cache, const Map2d<S>& dy) {
    const Map2d<S>& x = cache.input;
    bias.grad.col(0) += dy.data.rowwise().sum();
    Map2d<S> dx;
    dx.height = x.height;
    dx.width = x.width;
    dx.batch = x.batch;
    dx.data = Matrix<S>::Zero(in_channels_, x.data.cols());
    Matrix<S> cols, dcols;
    const int opix = dy.pixels();
    const int chunk = ChunkSize(opix);
    for (int b0 = 0; b0 < x.batch; b0 += chunk) {
      const int nb = std::min(chunk, x.batch - b0);
      Im2Col(x, b0, nb, cols);
      const auto dy_chunk =
          dy.data.middleCols(static_cast<Eigen::Index>(b0) * opix, cols.cols());
      weight.grad.noalias() += dy_chunk * cols.transpose();
      dcols.noalias() = weight.value.transpose() * dy_chunk;
      Col2Im(dcols, b0, nb, dx);
    }
    return dx;
  }

  void Collect(ParameterRefs<S>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }

  Parameter<S> weight;
  Parameter<S> bias;

 private:
  static int ChunkSize(int out_pixels) {
    return std::max(1, 512 / out_pixels);
  }

  // Unfolds samples [b0, b0 + nb) into (9 * C) x (nb * out_pixels) columns.
  // Row (ky * 3 + kx) * C + c holds input channel c at that kernel tap.
  void Im2Col(const Map2d<S>& x, int b0, int nb, Matrix<S>& cols) const {
    const int oh = OutSize(x.height), ow = OutSize(x.width);
    const int ih = x.height, iw = x.width, ch = in_channels_;
    cols.setZero(9 * ch, static_cast<Eigen::Index>(nb) * oh * ow);
    const S* src = x.data.data();
    S* dst = cols.data();
    for (int b = b0; b < b0 + nb; ++b) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, dst += 9 * ch) {
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy * stride_ + ky - 1;
            if (iy < 0 || iy >= ih) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox * stride_ + kx - 1;
              if (ix < 0 || ix >= iw) continue;
              std::copy_n(src + ((static_cast<std::size_t>(b) * ih + iy) * iw + ix) * ch,
                          ch, dst + (ky * 3 + kx) * ch);
            }
          }
        }
      }
    }
  }

  void Col2Im(const Matrix<S>& dcols, int b0, int nb, Map2d<S>& dx) const {
    const int oh = OutSize(dx.height), ow = OutSize(dx.width);
    const int ih = dx.height, iw = dx.width, ch = in_channels_;
    const S* src = dcols.data();
    S* dst = dx.data.data();
    for (int b = b0; b < b0 + nb; ++b) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, src += 9 * ch) {
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy * stride_ + ky - 1;
            if (iy < 0 || iy >= ih) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox * stride_ + kx - 1;
              if (ix < 0 || ix >= iw) continue;
              S* out = dst + ((static_cast<std::size_t>(b) * ih + iy) * iw + ix) * ch;
              const S* in = src + (ky * 3 + kx) * ch;
              for (int c = 0; c < ch; ++c) out[c] += in[c];
            }
          }
        }
      }
    }
  }

  int in_channels_ = 0;
  int stride_ = 1;
};

template <typename S>
S Sigmoid(S x) {
  return S(1) / (S(1) + std::exp(-x));
}

// SiLU(x) = x * sigmoid(x).
template <typename S>
Matrix<S> Silu(const Matrix<S>& x) {
  return (x.array() / (S(1) + (-x.array()).exp())).matrix();
}

template <typename S>
Matrix<S> SiluBackward(const Matrix<S>& x, const Matrix<S>& dy) {
  const auto s = (S(1) / (S(1) + (-x.array()).exp())).eval();
  return (dy.array() * s * (S(1) + x.array() * (S(1) - s))).matrix();
}

template <typename S>
Map2d<S> Silu(const Map2d<S>& x) {
  return {Silu(x.data), x.height, x.width, x.batch};
}

template <typename S>
Map2d<S> SiluBackward(const Map2d<S>& x, const Map2d<S>& dy) {
  return {SiluBackward(x.data, dy.data), x.height, x.width, x.batch};
}

// Nearest-neighbour 2x upsampling.
template <typename S>
Map2d<S> Upsample2x(const Map2d<S>& x) {
  Map2d<S> y;
  y.height = 2 * x.height;
  y.width = 2 * x.width;
  y.batch = x.batch;
  y.data.resize(x.data.rows(), static_cast<Eigen::Index>(x.batch) * y.height * y.width);
  for (int b = 0; b < x.batch; ++b) {
    for (int yy = 0; yy < y.height; ++yy) {
      for (int xx = 0; xx < y.width; ++xx) {
        y.data.col((static_cast<Eigen::Index>(b) * y.height + yy) * y.width + xx) =
            x.data.col((static_cast<Eigen::Index>(b) * x.height + yy / 2) * x.width + xx / 2);
      }
    }
  }
  return y;
}

template <typename S>
Map2d<S> Upsample2xBackward(const Map2d<S>& dy) {
  Map2d<S> dx;
  dx.height = dy.height / 2;
  dx.width = dy.width / 2;
  dx.batch = dy.batch;
  dx.data = Matrix<S>::Zero(dy.data.rows(),
                            static_cast<Eigen::Index>(dy.batch) * dx.height * dx.width);
  for (int b = 0; b < dy.batch; ++b) {
    for (int yy = 0; yy < dy.height; ++yy) {
      for (int xx = 0; xx < dy.width; ++xx) {
        dx.data.col((static_cast<Eigen::Index>(b) * dx.height + yy / 2) * dx.width + xx / 2) +=
            dy.data.col((static_cast<Eigen::Index>(b) * dy.height + yy) * dy.width + xx);
      }
    }
  }
  return dx;
}

// (C x B*HW) -> (C x B).
template <typename S>
Matrix<S> GlobalAvgPool(const Map2d<S>& x) {
  const int hw = x.pixels();
  Matrix<S> y(x.data.rows(), x.batch);
  for (int b = 0; b < x.batch; ++b) {
    y.col(b) = x.data.middleCols(static_cast<Eigen::Index>(b) * hw, hw).rowwise().mean();
  }
  return y;
}

template <typename S>
Map2d<S> GlobalAvgPoolBackward(const Matrix<S>& dy, int height, int width) {
  const int hw = height * width;
  Map2d<S> dx;
  dx.height = height;
  dx.width = width;
  dx.batch = static_cast<int>(dy.cols());
  dx.data.resize(dy.rows(), dy.cols() * hw);
  for (Eigen::Index b = 0; b < dy.cols(); ++b) {
    dx.data.middleCols(b * hw, hw) = (dy.col(b) / static_cast<S>(hw)).replicate(1, hw);
  }
  return dx;
}

// The memory of one sample is already contiguous, so this is a reshape.
template <typename S>
Matrix<S> Flatten(const Map2d<S>& x) {
  return Eigen::Map<const Matrix<S>>(x.data.data(),
                                     x.data.rows() * x.pixels(), x.batch);
}

template <typename S>
Map2d<S> Unflatten(const Matrix<S>& x, int channels, int height, int width) {
  Map2d<S> y;
  y.height = height;
  y.width = width;
  y.batch = static_cast<int>(x.cols());
  y.data = Eigen::Map<const Matrix<S>>(x.data(), channels,
                                       x.cols() * height * width);
  return y;
}

// Adds a per-sample channel vector (C x B) to every pixel of x.
template <typename S>
void AddChannelBias(Map2d<S>& x, const Matrix<S>& bias) {
  const int hw = x.pixels();
  for (int b = 0; b < x.batch; ++b) {
    x.data.middleCols(static_cast<Eigen::Index>(b) * hw, hw).colwise() += bias.col(b);
  }
}

template <typename S>
Matrix<S> AddChannelBiasBackward(const Map2d<S>& dy) {
  return GlobalAvgPool(dy) * static_cast<S>(dy.pixels());
}

template <typename S>
Map2d<S> ConcatChannels(const Map2d<S>& a, const Map2d<S>& b) {
  Map2d<S> y{Matrix<S>(a.data.rows() + b.data.rows(), a.data.cols()), a.height,
             a.width, a.batch};
  y.data << a.data, b.data;
  return y;
}

// L2 normalisation of each column.
template <typename S>
Matrix<S> NormalizeColumns(const Matrix<S>& x, Vector<S>* norms = nullptr) {
  Vector<S> n = x.colwise().norm().transpose();
  Matrix<S> y = x;
  for (Eigen::Index b = 0; b < x.cols(); ++b) y.col(b) /= n(b);
  if (norms != nullptr) *norms = std::move(n);
  return y;
}

template <typename S>
Matrix<S> NormalizeColumnsBackward(const Matrix<S>& y, const Vector<S>& norms,
                                   const Matrix<S>& dy) {
  Matrix<S> dx(y.rows(), y.cols());
  for (Eigen::Index b = 0; b < y.cols(); ++b) {
    const S proj = y.col(b).dot(dy.col(b));
    dx.col(b) = (dy.col(b) - proj * y.col(b)) / norms(b);
  }
  return dx;
}

// Mean of learned token embeddings; the table is (dim x vocab).
template <typename S>
class MeanEmbedding {
 public:
  MeanEmbedding() = default;
  MeanEmbedding(const std::string& name, int vocab, int dim, Rng& rng)
      : table(name + ".table", dim, vocab) {
    InitUniform(table.value, 1.0, rng);
  }

  int dim() const { return static_cast<int>(table.value.rows()); }
  int vocab() const { return static_cast<int>(table.value.cols()); }

  Matrix<S> Forward(std::span<const std::vector<int>> batch) const {
    Matrix<S> y = Matrix<S>::Zero(dim(), static_cast<Eigen::Index>(batch.size()));
    for (std::size_t b = 0; b < batch.size(); ++b) {
      for (const int t : batch[b]) {
        if (t < 0 || t >= vocab()) throw Error("token outside embedding table");
        y.col(static_cast<Eigen::Index>(b)) += table.value.col(t);
      }
      y.col(static_cast<Eigen::Index>(b)) /= static_cast<S>(batch[b].size());
    }
    return y;
  }

  void Backward(std::span<const std::vector<int>> batch, const Matrix<S>& dy) {
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const S scale = S(1) / static_cast<S>(batch[b].size());
      for (const int t : batch[b]) {
        table.grad.col(t) += scale * dy.col(static_cast<Eigen::Index>(b));
      }
    }
  }

  void Collect(ParameterRefs<S>& out) { out.push_back(&table); }

  Parameter<S> table;
};

// Lookup table (dim x n); used for positions and previous-token context.
template <typename S>
class Embedding {
 public:
  Embedding() = default;
  Embedding(const std::string& name, int n, int dim, Rng& rng)
      : table(name + ".table", dim, n) {
    InitUniform(table.value, 1.0, rng);
  }

  Matrix<S> Forward(std::span<const int> ids) const {
    Matrix<S> y(table.value.rows(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      y.col(static_cast<Eigen::Index>(i)) = table.value.col(ids[i]);
    }
    return y;
  }

  void Backward(std::span<const int> ids, const Matrix<S>& dy) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      table.grad.col(ids[i]) += dy.col(static_cast<Eigen::Index>(i));
    }
  }

  void Collect(ParameterRefs<S>& out) { out.push_back(&table); }

  Parameter<S> table;
};

}  // namespace t2i_mia::nn

#endif  // T2I_MIA_NN_LAYERS_H_
