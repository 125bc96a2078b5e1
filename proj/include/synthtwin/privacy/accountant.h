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

// Renyi-DP accounting for the Poisson-subsampled Gaussian mechanism.
//
// For an integer order alpha >= 2, sampling rate q and noise multiplier sigma
// the mechanism satisfies (alpha, rdp)-RDP with
//
//   rdp = log(A_alpha) / (alpha - 1),
//   A_alpha = sum_{k=0}^{alpha} C(alpha, k) (1-q)^(alpha-k) q^k
//             exp((k^2 - k) / (2 sigma^2)).
//
// Composition over T steps multiplies rdp by T, and the conversion to
// (epsilon, delta) is epsilon = min_alpha T * rdp(alpha) + log(1/delta)/(alpha-1).

#ifndef SYNTHTWIN_PRIVACY_ACCOUNTANT_H_
#define SYNTHTWIN_PRIVACY_ACCOUNTANT_H_

#include <cstdint>
#include <vector>

#include "json.hpp"

namespace synthtwin::privacy {

struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 1e-5;

  // Throws std::invalid_argument unless epsilon >= 0 and delta in [0, 1].
  void Validate() const;
};

// Orders 2, 3, ..., 64.
std::vector<int> DefaultAlphaGrid();

struct AccountantState {
  double sampling_rate = 0.0;  // q
  double noise_multiplier = 1.0;  // sigma
  std::int64_t steps = 0;  // T
  std::vector<int> alphas = DefaultAlphaGrid();

  // T * rdp(q, sigma, alpha) for every alpha in the grid.
  std::vector<double> RdpCurve() const;
};

double RdpSubsampledGaussian(double q, double sigma, int alpha);

// Throws std::invalid_argument on an empty grid or delta outside (0, 1).
double TotalEpsilon(const AccountantState& state, double delta);

// The order attaining the minimum in TotalEpsilon.
int OptimalAlpha(const AccountantState& state, double delta);

// Smallest sigma in [0.3, 1e4] (to relative precision `tol`) with
// TotalEpsilon <= target.epsilon. Throws std::runtime_error when the target is
// not bracketed by that interval.
double CalibrateSigma(const PrivacyBudget& target, double q, std::int64_t steps,
                      double tol = 1e-3,
                      const std::vector<int>& alphas = DefaultAlphaGrid());

// What a training run publishes about its privacy cost.
struct AccountantSummary {
  double sampling_rate = 0.0;
  double noise_multiplier = 0.0;
  std::int64_t steps = 0;
  std::int64_t dataset_size = 0;
  double epsilon = 0.0;  // certified by TotalEpsilon; +inf when non-private
  double delta = 0.0;
  double target_epsilon = 0.0;
  bool non_private = false;

  nlohmann::json ToJson() const;
  static AccountantSummary FromJson(const nlohmann::json& j);
};

}  // namespace synthtwin::privacy

#endif  // SYNTHTWIN_PRIVACY_ACCOUNTANT_H_
