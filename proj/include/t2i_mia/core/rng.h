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

#ifndef T2I_MIA_CORE_RNG_H_
#define T2I_MIA_CORE_RNG_H_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

namespace t2i_mia {

struct RngSeed {
  std::uint64_t value = 0;

  auto operator<=>(const RngSeed&) const = default;
};

std::uint64_t SplitMix64(std::uint64_t x);

// 64-bit FNV-1a.
std::uint64_t HashBytes(std::string_view bytes);

// Seed splitting rule: child = SplitMix64(parent ^ SplitMix64(FNV1a(label))).
// Every module derives its sub-seed from the experiment seed with its own
// label, so adding a module never perturbs the streams of the others.
RngSeed DeriveSeed(RngSeed parent, std::string_view label);

// child = SplitMix64(parent ^ SplitMix64(index + 0x9e3779b97f4a7c15)).
RngSeed DeriveSeed(RngSeed parent, std::uint64_t index);

// Deterministic random stream. Uniform/Normal/Index are implemented here
// rather than through <random> distributions so the streams do not depend on
// the standard library vendor.
class Rng {
 public:
  explicit Rng(RngSeed seed) : engine_(seed.value) {}

  std::uint64_t Next() { return engine_(); }

  // Uniform in [0, 1).
  double Uniform() {
    return static_cast<double>(Next() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Standard normal via Box-Muller (no cached second value).
  double Normal();

  // Uniform integer in [0, n). n must be positive.
  std::size_t Index(std::size_t n);

  bool Bernoulli(double p) { return Uniform() < p; }

  template <typename RandomIt>
  void Shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = Index(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace t2i_mia

#endif  // T2I_MIA_CORE_RNG_H_
