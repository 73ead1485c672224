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

#ifndef T2I_MIA_CORE_PNG_H_
#define T2I_MIA_CORE_PNG_H_

#include <cstdint>
#include <filesystem>
#include <span>

#include "t2i_mia/core/types.h"

namespace t2i_mia {

// Writes an 8-bit RGB PNG; `rgb` is row-major, 3 bytes per pixel.
void WritePngRgb(const std::filesystem::path& path, int width, int height,
                 std::span<const std::uint8_t> rgb);

// 8-bit export for inspection; values are rounded to the nearest 1/255.
void ExportSamplePng(const ImageSample& sample,
                     const std::filesystem::path& path, int scale = 1);

}  // namespace t2i_mia

#endif  // T2I_MIA_CORE_PNG_H_
