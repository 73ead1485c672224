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

#ifndef T2I_MIA_CORE_CHECKPOINT_H_
#define T2I_MIA_CORE_CHECKPOINT_H_

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "json.hpp"
#include "t2i_mia/core/error.h"

namespace t2i_mia {

enum class TensorDType : std::uint8_t { kFloat32 = 1, kFloat64 = 2 };

struct NamedTensor {
  std::string name;
  TensorDType dtype = TensorDType::kFloat64;
  int rows = 0;
  int cols = 0;
  // Column-major values. Float32 tensors hold exactly representable values.
  std::vector<double> values;
};

// Versioned binary container shared by every trained artifact (target
// models, embedders, attack models).
//
// Layout (little-endian):
//   "T2IMCKPT" | u32 version | str family | str hyperparameters (JSON)
//   | str train manifest (JSON) | u32 tensor count
//   | per tensor: str name | u8 dtype | u32 rows | u32 cols | raw values
// where str is a u32 byte length followed by the bytes.
class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  Checkpoint() = default;
  explicit Checkpoint(std::string family) : family_(std::move(family)) {}

  const std::string& family() const { return family_; }
  nlohmann::json& hyperparameters() { return hyperparameters_; }
  const nlohmann::json& hyperparameters() const { return hyperparameters_; }
  nlohmann::json& train_manifest() { return train_manifest_; }
  const nlohmann::json& train_manifest() const { return train_manifest_; }
  const std::vector<NamedTensor>& tensors() const { return tensors_; }

  template <typename Scalar>
  void Put(std::string name,
           const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m) {
    NamedTensor t;
    t.name = std::move(name);
    t.dtype = std::is_same_v<Scalar, float> ? TensorDType::kFloat32
                                            : TensorDType::kFloat64;
    t.rows = static_cast<int>(m.rows());
    t.cols = static_cast<int>(m.cols());
    t.values.assign(m.data(), m.data() + m.size());
    tensors_.push_back(std::move(t));
  }

  // Throws Error when the tensor is missing or has the wrong shape.
  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> Get(
      std::string_view name, int rows, int cols) const {
    const NamedTensor& t = Find(name);
    if (t.rows != rows || t.cols != cols) {
      throw Error("checkpoint tensor '" + std::string(name) +
                  "' has the wrong shape");
    }
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
    for (int i = 0; i < rows * cols; ++i) {
      m.data()[i] = static_cast<Scalar>(t.values[static_cast<std::size_t>(i)]);
    }
    return m;
  }

  const NamedTensor& Find(std::string_view name) const;

  std::string Serialize() const;
  static Checkpoint Deserialize(std::string_view bytes);

  void Save(const std::filesystem::path& path) const;
  static Checkpoint Load(const std::filesystem::path& path);

 private:
  std::string family_;
  nlohmann::json hyperparameters_ = nlohmann::json::object();
  nlohmann::json train_manifest_ = nlohmann::json::object();
  std::vector<NamedTensor> tensors_;
};

}  // namespace t2i_mia

#endif  // T2I_MIA_CORE_CHECKPOINT_H_
