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

#include "t2i_mia/core/serialize.h"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "t2i_mia/core/error.h"

namespace t2i_mia {
namespace {

constexpr std::string_view kSampleMagic = "T2IS";
constexpr std::uint32_t kSampleVersion = 1;
constexpr std::string_view kCaptionMagic = "T2IC";

constexpr char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int Base64Value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

void ByteWriter::U32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) U8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::U64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) U8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::String(std::string_view s) {
  U32(static_cast<std::uint32_t>(s.size()));
  bytes_.append(s);
}

void ByteReader::Need(std::size_t n) const {
  if (bytes_.size() - pos_ < n) throw Error("truncated binary record");
}

std::uint8_t ByteReader::U8() {
  Need(1);
  return static_cast<std::uint8_t>(bytes_[pos_++]);
}

std::uint32_t ByteReader::U32() {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(U8()) << (8 * i);
  return v;
}

std::uint64_t ByteReader::U64() {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(U8()) << (8 * i);
  return v;
}

float ByteReader::F32() { return std::bit_cast<float>(U32()); }

double ByteReader::F64() { return std::bit_cast<double>(U64()); }

std::string ByteReader::String() {
  const std::uint32_t n = U32();
  return std::string(Raw(n));
}

std::string_view ByteReader::Raw(std::size_t n) {
  Need(n);
  const std::string_view out = bytes_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::string SerializeSample(const ImageSample& sample) {
  ByteWriter w;
  w.Raw(kSampleMagic);
  w.U32(kSampleVersion);
  w.U32(static_cast<std::uint32_t>(sample.height()));
  w.U32(static_cast<std::uint32_t>(sample.width()));
  w.U32(static_cast<std::uint32_t>(sample.channels()));
  w.String(sample.id());
  w.U8(static_cast<std::uint8_t>(sample.origin()));
  const auto& scene = sample.scene();
  w.U8(scene.has_value() ? 1 : 0);
  if (scene) {
    w.U8(static_cast<std::uint8_t>(scene->shape));
    w.U8(static_cast<std::uint8_t>(scene->color));
    w.U8(static_cast<std::uint8_t>(scene->size));
    w.U8(static_cast<std::uint8_t>(scene->position));
    w.U8(static_cast<std::uint8_t>(scene->background));
  }
  for (const float v : sample.pixels()) w.F32(v);
  return w.Take();
}

ImageSample DeserializeSample(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.Raw(kSampleMagic.size()) != kSampleMagic) {
    throw Error("not a serialized image sample");
  }
  if (const auto version = r.U32(); version != kSampleVersion) {
    throw Error("unsupported image sample version " + std::to_string(version));
  }
  const int h = static_cast<int>(r.U32());
  const int w = static_cast<int>(r.U32());
  const int c = static_cast<int>(r.U32());
  std::string id = r.String();
  const std::uint8_t origin = r.U8();
  if (origin > static_cast<std::uint8_t>(Origin::kGenerated)) {
    throw Error("bad origin tag in image sample");
  }
  std::optional<SceneSpec> scene;
  if (r.U8() != 0) {
    SceneSpec s;
    s.shape = static_cast<Shape>(r.U8());
    s.color = static_cast<Color>(r.U8());
    s.size = static_cast<Size>(r.U8());
    s.position = static_cast<Position>(r.U8());
    s.background = static_cast<Background>(r.U8());
    if (static_cast<int>(s.shape) >= kNumShapes ||
        static_cast<int>(s.color) >= kNumColors ||
        static_cast<int>(s.size) >= kNumSizes ||
        static_cast<int>(s.position) >= kNumPositions ||
        static_cast<int>(s.background) >= kNumBackgrounds) {
      throw Error("bad scene fields in image sample");
    }
    scene = s;
  }
  std::vector<float> pixels(static_cast<std::size_t>(h) * w * c);
  for (float& v : pixels) v = r.F32();
  if (!r.AtEnd()) throw Error("trailing bytes after image sample");
  return ImageSample(std::move(id), static_cast<Origin>(origin), h, w, c,
                     std::move(pixels), scene);
}

std::string SerializeCaption(const Caption& caption) {
  ByteWriter w;
  w.Raw(kCaptionMagic);
  w.U32(static_cast<std::uint32_t>(caption.tokens().size()));
  for (const int t : caption.tokens()) w.U32(static_cast<std::uint32_t>(t));
  return w.Take();
}

Caption DeserializeCaption(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.Raw(kCaptionMagic.size()) != kCaptionMagic) {
    throw Error("not a serialized caption");
  }
  std::vector<int> tokens(r.U32());
  for (int& t : tokens) t = static_cast<int>(r.U32());
  if (!r.AtEnd()) throw Error("trailing bytes after caption");
  return Caption(std::move(tokens));
}

std::string Base64Encode(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t n = (static_cast<std::uint8_t>(bytes[i]) << 16) |
                            (static_cast<std::uint8_t>(bytes[i + 1]) << 8) |
                            static_cast<std::uint8_t>(bytes[i + 2]);
    out += kBase64Alphabet[(n >> 18) & 63];
    out += kBase64Alphabet[(n >> 12) & 63];
    out += kBase64Alphabet[(n >> 6) & 63];
    out += kBase64Alphabet[n & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t n = static_cast<std::uint8_t>(bytes[i]) << 16;
    out += kBase64Alphabet[(n >> 18) & 63];
    out += kBase64Alphabet[(n >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t n = (static_cast<std::uint8_t>(bytes[i]) << 16) |
                            (static_cast<std::uint8_t>(bytes[i + 1]) << 8);
    out += kBase64Alphabet[(n >> 18) & 63];
    out += kBase64Alphabet[(n >> 12) & 63];
    out += kBase64Alphabet[(n >> 6) & 63];
    out += '=';
  }
  return out;
}

std::string Base64Decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error("base64 length not a multiple of 4");
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> v{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
      } else {
        if (pad > 0) throw Error("bad base64 padding");
        v[k] = Base64Value(c);
        if (v[k] < 0) throw Error("invalid base64 character");
      }
    }
    const std::uint32_t n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out += static_cast<char>((n >> 16) & 0xff);
    if (pad < 2) out += static_cast<char>((n >> 8) & 0xff);
    if (pad < 1) out += static_cast<char>(n & 0xff);
  }
  return out;
}

std::string EncodeFloat32(std::span<const float> values) {
  ByteWriter w;
  for (const float v : values) w.F32(v);
  return Base64Encode(w.bytes());
}

std::vector<float> DecodeFloat32(std::string_view base64) {
  const std::string bytes = Base64Decode(base64);
  if (bytes.size() % 4 != 0) throw Error("float32 payload length not x4");
  ByteReader r(bytes);
  std::vector<float> out(bytes.size() / 4);
  for (float& v : out) v = r.F32();
  return out;
}

nlohmann::json EmbeddingToJson(const EmbeddingVector& e) {
  return nlohmann::json{{"modality", std::string(ModalityName(e.modality()))},
                        {"dim", e.dim()},
                        {"data", EncodeFloat32(e.values())}};
}

EmbeddingVector EmbeddingFromJson(const nlohmann::json& j) {
  const std::string modality = j.at("modality").get<std::string>();
  if (modality != "image" && modality != "text") {
    throw Error("unknown embedding modality: " + modality);
  }
  std::vector<float> values = DecodeFloat32(j.at("data").get<std::string>());
  if (static_cast<int>(values.size()) != j.at("dim").get<int>()) {
    throw Error("embedding record dim disagrees with payload");
  }
  return EmbeddingVector(std::move(values), modality == "image"
                                                ? Modality::kImage
                                                : Modality::kText);
}

std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw Error("cannot create directory " + path.parent_path().string() +
                  ": " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace t2i_mia
