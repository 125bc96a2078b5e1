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

#include "synthtwin/privacy/gaussian_mechanism.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include "synthtwin/common/random.h"

namespace synthtwin::privacy {

double ClipToNorm(Eigen::Ref<Eigen::VectorXd> v, double clip_norm) {
  const double norm = v.norm();
  if (!std::isfinite(norm)) {
    // A non-finite contribution is dropped; the sum's sensitivity is unchanged.
    v.setZero();
    return norm;
  }
  if (norm > clip_norm) v *= clip_norm / norm;
  return norm;
}

Eigen::VectorXd ClipAndNoise(const Eigen::MatrixXd& per_example_grads,
                             double clip_norm, double sigma, std::uint64_t seed,
                             std::optional<double> normalizer) {
  if (!(clip_norm > 0.0)) {
    throw std::invalid_argument("clip_and_noise: clip norm must be positive");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("clip_and_noise: sigma must be finite and >= 0");
  }
  if (std::isinf(clip_norm) && sigma > 0.0) {
    throw std::invalid_argument("clip_and_noise: infinite clip norm with noise");
  }
  const double divisor =
      normalizer.value_or(static_cast<double>(per_example_grads.rows()));
  if (!(divisor > 0.0)) {
    throw std::invalid_argument("clip_and_noise: normalizer must be positive");
  }
  const Eigen::Index dim = per_example_grads.cols();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd g(dim);
  for (Eigen::Index i = 0; i < per_example_grads.rows(); ++i) {
    g = per_example_grads.row(i).transpose();
    ClipToNorm(g, clip_norm);
    sum += g;
  }
  if (sigma > 0.0) {
    Engine rng(seed);
    std::normal_distribution<double> noise(0.0, sigma * clip_norm);
    for (Eigen::Index k = 0; k < dim; ++k) sum(k) += noise(rng);
  }
  return sum / divisor;
}

}  // namespace synthtwin::privacy
