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

#include "synthtwin/privacy/accountant.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace synthtwin::privacy {
namespace {

constexpr double kSigmaLower = 0.3;
constexpr double kSigmaUpper = 1e4;

double LogAdd(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double LogBinomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

void PrivacyBudget::Validate() const {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("budget: epsilon must be >= 0");
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("budget: delta must be in [0, 1]");
  }
}

std::vector<int> DefaultAlphaGrid() {
  std::vector<int> grid(63);
  std::iota(grid.begin(), grid.end(), 2);
  return grid;
}

double RdpSubsampledGaussian(double q, double sigma, int alpha) {
  if (alpha < 2) throw std::invalid_argument("rdp: alpha must be >= 2");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("rdp: q must be in [0, 1]");
  if (!(sigma > 0.0)) throw std::invalid_argument("rdp: sigma must be > 0");
  if (q == 0.0) return 0.0;
  if (q == 1.0) return alpha / (2.0 * sigma * sigma);

  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  double log_a = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= alpha; ++k) {
    const double term = LogBinomial(alpha, k) + k * log_q +
                        (alpha - k) * log_1mq +
                        (static_cast<double>(k) * k - k) / (2.0 * sigma * sigma);
    log_a = LogAdd(log_a, term);
  }
  // log_a >= 0 analytically (A_alpha >= 1); clamp rounding noise.
  return std::max(0.0, log_a / (alpha - 1));
}

std::vector<double> AccountantState::RdpCurve() const {
  std::vector<double> curve;
  curve.reserve(alphas.size());
  for (int alpha : alphas) {
    curve.push_back(steps == 0 ? 0.0
                               : static_cast<double>(steps) *
                                     RdpSubsampledGaussian(sampling_rate,
                                                           noise_multiplier,
                                                           alpha));
  }
  return curve;
}

namespace {

std::pair<double, int> MinimizeOverAlpha(const AccountantState& state,
                                         double delta) {
  if (state.alphas.empty()) throw std::invalid_argument("accountant: empty alpha grid");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("accountant: delta must be in (0, 1)");
  }
  if (state.steps < 0) throw std::invalid_argument("accountant: negative step count");
  if (state.steps == 0 || state.sampling_rate == 0.0) {
    return {0.0, state.alphas.front()};
  }
  const std::vector<double> curve = state.RdpCurve();
  double best = std::numeric_limits<double>::infinity();
  int best_alpha = state.alphas.front();
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double eps = curve[i] + std::log(1.0 / delta) / (state.alphas[i] - 1);
    if (eps < best) {
      best = eps;
      best_alpha = state.alphas[i];
    }
  }
  return {best, best_alpha};
}

}  // namespace

double TotalEpsilon(const AccountantState& state, double delta) {
  return MinimizeOverAlpha(state, delta).first;
}

int OptimalAlpha(const AccountantState& state, double delta) {
  return MinimizeOverAlpha(state, delta).second;
}

double CalibrateSigma(const PrivacyBudget& target, double q, std::int64_t steps,
                      double tol, const std::vector<int>& alphas) {
  target.Validate();
  if (!(target.epsilon > 0.0)) {
    throw std::invalid_argument("calibrate_sigma: target epsilon must be > 0");
  }
  if (steps < 1) throw std::invalid_argument("calibrate_sigma: steps must be >= 1");
  if (!(tol > 0.0 && tol < 1.0)) {
    throw std::invalid_argument("calibrate_sigma: tol must be in (0, 1)");
  }
  AccountantState state{q, kSigmaUpper, steps, alphas};
  auto eps_at = [&](double sigma) {
    state.noise_multiplier = sigma;
    return TotalEpsilon(state, target.delta);
  };
  if (eps_at(kSigmaUpper) > target.epsilon) {
    throw std::runtime_error("calibrate_sigma: epsilon " +
                             std::to_string(target.epsilon) +
                             " unreachable with sigma <= 1e4");
  }
  if (eps_at(kSigmaLower) <= target.epsilon) {
    throw std::runtime_error("calibrate_sigma: epsilon " +
                             std::to_string(target.epsilon) +
                             " already met at sigma = 0.3; target not bracketed");
  }
  // Invariant: eps(lo) > target >= eps(hi).
  double lo = kSigmaLower;
  double hi = kSigmaUpper;
  while (lo < hi * (1.0 - tol)) {
    const double mid = std::sqrt(lo * hi);
    if (eps_at(mid) > target.epsilon) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

nlohmann::json AccountantSummary::ToJson() const {
  return {{"sampling_rate", sampling_rate}, {"noise_multiplier", noise_multiplier},
          {"steps", steps},                 {"dataset_size", dataset_size},
          {"epsilon", std::isfinite(epsilon) ? nlohmann::json(epsilon)
                                             : nlohmann::json(nullptr)},
          {"delta", delta},
          {"target_epsilon", target_epsilon}, {"non_private", non_private}};
}

AccountantSummary AccountantSummary::FromJson(const nlohmann::json& j) {
  AccountantSummary s;
  s.sampling_rate = j.at("sampling_rate").get<double>();
  s.noise_multiplier = j.at("noise_multiplier").get<double>();
  s.steps = j.at("steps").get<std::int64_t>();
  s.dataset_size = j.at("dataset_size").get<std::int64_t>();
  s.epsilon = j.at("epsilon").is_null()
                  ? std::numeric_limits<double>::infinity()
                  : j.at("epsilon").get<double>();
  s.delta = j.at("delta").get<double>();
  s.target_epsilon = j.at("target_epsilon").get<double>();
  s.non_private = j.value("non_private", false);
  return s;
}

}  // namespace synthtwin::privacy
