// Copyright 2026 The qpovm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Pulse envelope shapes.

#include <cmath>
#include <vector>

namespace qpovm {

/// Default AWG sample duration, seconds.
inline constexpr double kSampleDt = 0.222e-9;

/// Gaussian with σ = T/4 sampled at sample midpoints, lifted so that it
/// vanishes at the pulse edges and peaks at 1.
inline std::vector<double> lifted_gaussian(int num_samples) {
  std::vector<double> env(num_samples > 0 ? num_samples : 0);
  if (num_samples <= 0) return env;
  const double centre = 0.5 * num_samples;
  const double sigma = 0.25 * num_samples;
  const double edge = std::exp(-0.5 * (centre / sigma) * (centre / sigma));
  for (int k = 0; k < num_samples; ++k) {
    const double x = (k + 0.5 - centre) / sigma;
    env[k] = (std::exp(-0.5 * x * x) - edge) / (1.0 - edge);
  }
  return env;
}

inline int samples_for(double duration, double sample_dt = kSampleDt) {
  return static_cast<int>(std::lround(duration / sample_dt));
}

}  // namespace qpovm
