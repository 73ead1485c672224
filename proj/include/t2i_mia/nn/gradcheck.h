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

#ifndef T2I_MIA_NN_GRADCHECK_H_
#define T2I_MIA_NN_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "t2i_mia/nn/layers.h"

namespace t2i_mia::nn {

struct GradcheckResult {
  double max_relative_error = 0.0;
  int coordinates_checked = 0;
};

// Compares the analytic gradients already stored in `params` against central
// finite differences of `loss` at `coordinates` randomly chosen entries (a
// uniformly chosen tensor, then a uniformly chosen entry, so small bias
// tensors are sampled as often as large weights).
//
// relative error = |analytic - numeric| / max(|analytic|, |numeric|, floor).
// The floor keeps coordinates whose true gradient is ~0 from reporting
// round-off as a large relative error.
template <typename S>
GradcheckResult CheckGradients(const ParameterRefs<S>& params,
                               const std::function<double()>& loss,
                               double epsilon, int coordinates, Rng& rng,
                               double floor = 1e-5) {
  GradcheckResult result;
  if (params.empty()) return result;
  for (int k = 0; k < coordinates; ++k) {
    Parameter<S>& p = *params[rng.Index(params.size())];
    const Eigen::Index i =
        static_cast<Eigen::Index>(rng.Index(static_cast<std::size_t>(p.value.size())));
    const S original = p.value.data()[i];
    p.value.data()[i] = original + static_cast<S>(epsilon);
    const double up = loss();
    p.value.data()[i] = original - static_cast<S>(epsilon);
    const double down = loss();
    p.value.data()[i] = original;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double analytic = static_cast<double>(p.grad.data()[i]);
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), floor});
    const double err = std::abs(analytic - numeric) / denom;
    if (!std::isfinite(err)) {
      result.max_relative_error = std::numeric_limits<double>::infinity();
    } else {
      result.max_relative_error = std::max(result.max_relative_error, err);
    }
    ++result.coordinates_checked;
  }
  return result;
}

}  // namespace t2i_mia::nn

#endif  // T2I_MIA_NN_GRADCHECK_H_
