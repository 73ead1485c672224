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

#ifndef T2I_MIA_CORE_SERIALIZE_H_
#define T2I_MIA_CORE_SERIALIZE_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "t2i_mia/core/types.h"

namespace t2i_mia {

// Little-endian binary writer used by every on-disk format in the library.
class ByteWriter {
 public:
  void U8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F32(float v);
  void F64(double v);
  void String(std::string_view s);
  void Raw(std::string_view s) { bytes_.append(s); }

  const std::string& bytes() const { return bytes_; }
  std::string Take() { return std::move(bytes_); }

 private:
  std::string bytes_;
};

// Throws Error on truncated input.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint8_t U8();
  std::uint32_t U32();
  std::uint64_t U64();
  float F32();
  double F64();
  std::string String();
  std::string_view Raw(std::size_t n);
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) const;

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

// Canonical array serialization of an ImageSample. The output is a pure
// function of the sample; pixels are stored as float32 so the round trip is
// exact.
std::string SerializeSample(const ImageSample& sample);
ImageSample DeserializeSample(std::string_view bytes);

std::string SerializeCaption(const Caption& caption);
Caption DeserializeCaption(std::string_view bytes);

std::string Base64Encode(std::string_view bytes);
std::string Base64Decode(std::string_view text);

// Base64 of the little-endian float32 bytes of `values`.
std::string EncodeFloat32(std::span<const float> values);
std::vector<float> DecodeFloat32(std::string_view base64);

// JSON-lines record: {"modality": ..., "dim": d, "data": base64 f32}.
nlohmann::json EmbeddingToJson(const EmbeddingVector& e);
EmbeddingVector EmbeddingFromJson(const nlohmann::json& j);

std::string ReadFileBytes(const std::filesystem::path& path);
// Creates parent directories; throws Error when the file cannot be written.
void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace t2i_mia

#endif  // T2I_MIA_CORE_SERIALIZE_H_
