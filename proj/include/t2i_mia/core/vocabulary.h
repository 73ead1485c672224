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

#ifndef T2I_MIA_CORE_VOCABULARY_H_
#define T2I_MIA_CORE_VOCABULARY_H_

#include <optional>
#include <string_view>

namespace t2i_mia {

// The closed caption vocabulary. Object colors and background colors use
// disjoint words, so a bag-of-tokens view of a caption still identifies
// which color belongs to the shape and which to the background.
class Vocabulary {
 public:
  static int size();
  static std::string_view Word(int id);
  static std::optional<int> Id(std::string_view word);
  static bool Contains(int id) { return id >= 0 && id < size(); }
};

}  // namespace t2i_mia

#endif  // T2I_MIA_CORE_VOCABULARY_H_
