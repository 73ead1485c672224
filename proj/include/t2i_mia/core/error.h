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

#ifndef T2I_MIA_CORE_ERROR_H_
#define T2I_MIA_CORE_ERROR_H_

#include <stdexcept>
#include <string>

namespace t2i_mia {

// Base class for every error the library raises on bad input or failed
// computation.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the experiment harness; carries the pipeline stage that failed
// (e.g. "caption", "generate", "attack-train").
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error("[" + stage + "] " + message), stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace t2i_mia

#endif  // T2I_MIA_CORE_ERROR_H_
