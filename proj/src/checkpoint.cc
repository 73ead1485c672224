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

#include "t2i_mia/core/checkpoint.h"

#include "t2i_mia/core/serialize.h"

namespace t2i_mia {
namespace {

constexpr std::string_view kMagic = "T2IMCKPT";

}  // namespace

const NamedTensor& Checkpoint::Find(std::string_view name) const {
  for (const NamedTensor& t : tensors_) {
    if (t.name == name) return t;
  }
  throw Error("checkpoint has no tensor '" + std::string(name) + "'");
}

std::string Checkpoint::Serialize() const {
  ByteWriter w;
  w.Raw(kMagic);
  w.U32(kVersion);
  w.String(family_);
  w.String(hyperparameters_.dump());
  w.String(train_manifest_.dump());
  w.U32(static_cast<std::uint32_t>(tensors_.size()));
  for (const NamedTensor& t : tensors_) {
    w.String(t.name);
    w.U8(static_cast<std::uint8_t>(t.dtype));
    w.U32(static_cast<std::uint32_t>(t.rows));
    w.U32(static_cast<std::uint32_t>(t.cols));
    for (const double v : t.values) {
      if (t.dtype == TensorDType::kFloat32) {
        w.F32(static_cast<float>(v));
      } else {
        w.F64(v);
      }
    }
  }
  return w.Take();
}

Checkpoint Checkpoint::Deserialize(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.Raw(kMagic.size()) != kMagic) throw Error("not a t2i-mia checkpoint");
  if (const auto version = r.U32(); version != kVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt(r.String());
  try {
    ckpt.hyperparameters_ = nlohmann::json::parse(r.String());
    ckpt.train_manifest_ = nlohmann::json::parse(r.String());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("corrupt checkpoint metadata: ") + e.what());
  }
  const std::uint32_t n = r.U32();
  for (std::uint32_t i = 0; i < n; ++i) {
    NamedTensor t;
    t.name = r.String();
    const std::uint8_t dtype = r.U8();
    if (dtype != 1 && dtype != 2) throw Error("bad tensor dtype in checkpoint");
    t.dtype = static_cast<TensorDType>(dtype);
    t.rows = static_cast<int>(r.U32());
    t.cols = static_cast<int>(r.U32());
    t.values.resize(static_cast<std::size_t>(t.rows) * t.cols);
    for (double& v : t.values) {
      v = t.dtype == TensorDType::kFloat32 ? r.F32() : r.F64();
    }
    ckpt.tensors_.push_back(std::move(t));
  }
  if (!r.AtEnd()) throw Error("trailing bytes in checkpoint");
  return ckpt;
}

void Checkpoint::Save(const std::filesystem::path& path) const {
  WriteFileBytes(path, Serialize());
}

Checkpoint Checkpoint::Load(const std::filesystem::path& path) {
  return Deserialize(ReadFileBytes(path));
}

}  // namespace t2i_mia
