// Copyright 2026 The Synthtwin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SYNTHTWIN_PRIVACY_GAUSSIAN_MECHANISM_H_
#define SYNTHTWIN_PRIVACY_GAUSSIAN_MECHANISM_H_

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

namespace synthtwin::privacy {

// Rescales v in place to Euclidean norm min(|v|, clip_norm). Returns the
// original norm.
double ClipToNorm(Eigen::Ref<Eigen::VectorXd> v, double clip_norm);

// Sum of per-example gradients (one per row), each clipped to `clip_norm`,
// plus N(0, (sigma * clip_norm)^2 I), divided by `normalizer`. The normalizer
// defaults to the number of rows; DP-SGD with Poisson sampling passes the
// expected batch size so that the divisor does not depend on the data.
//
// clip_norm may be +inf only with sigma == 0.
Eigen::VectorXd ClipAndNoise(const Eigen::MatrixXd& per_example_grads,
                             double clip_norm, double sigma,
                             std::uint64_t seed,
                             std::optional<double> normalizer = std::nullopt);

}  // namespace synthtwin::privacy

#endif  // SYNTHTWIN_PRIVACY_GAUSSIAN_MECHANISM_H_
