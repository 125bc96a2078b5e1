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

// Monte-Carlo predictive log-likelihood distributions, the ranked Welch test
// and box-plot summaries.
//
// Log-likelihood values may be -inf: a coefficient drawn from a very wide
// Gaussian can make the fitted rate overflow on a test row. All summaries
// below order -inf below every finite value.

#ifndef SYNTHTWIN_EVAL_EVAL_H_
#define SYNTHTWIN_EVAL_EVAL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "synthtwin/glm/poisson.h"
#include "synthtwin/pooling/pooling.h"

namespace synthtwin::eval {

inline constexpr int kDefaultDraws = 100;

struct LogLikSamples {
  std::vector<double> values;
  bool normalized = true;
  nlohmann::json provenance = nlohmann::json::object();
};

// values[d] = TestLogLikelihood(w_d, test) with w_d ~ N(point, diag(variance))
// drawn from a per-draw counter stream of `seed`.
LogLikSamples SampleLlDistribution(const Eigen::VectorXd& point,
                                   const Eigen::VectorXd& variance,
                                   const glm::Patterns& test, int n_draws,
                                   std::uint64_t seed, bool normalize = true);
LogLikSamples SampleLlDistribution(const Eigen::VectorXd& point,
                                   const Eigen::VectorXd& variance,
                                   const tabular::Dataset& test, int n_draws,
                                   std::uint64_t seed, bool normalize = true);
// Squared standard errors of a single fit.
LogLikSamples SampleLlDistribution(const glm::RegressionFit& fit,
                                   const glm::Patterns& test, int n_draws,
                                   std::uint64_t seed, bool normalize = true);
// Total variance of a pooled fit.
LogLikSamples SampleLlDistribution(const pooling::PooledFit& fit,
                                   const glm::Patterns& test, int n_draws,
                                   std::uint64_t seed, bool normalize = true);

namespace serial {
LogLikSamples SampleLlDistribution(const Eigen::VectorXd& point,
                                   const Eigen::VectorXd& variance,
                                   const glm::Patterns& test, int n_draws,
                                   std::uint64_t seed, bool normalize = true);
}  // namespace serial

enum class Sided { kOneGreater, kTwo };

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Mid-ranks (ties averaged, 1-based) of the concatenation a ++ b.
std::vector<double> MidRanks(std::span<const double> values);

// Welch's t-test on mid-ranks of the pooled samples. kOneGreater tests
// mean(a) > mean(b). Throws std::invalid_argument for fewer than two values
// in either sample, NaN values, or zero variance of the rank difference.
WelchResult RankedWelchTest(std::span<const double> a, std::span<const double> b,
                            Sided sided);

struct BoxStats {
  std::size_t n = 0;
  double mean = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::size_t outliers = 0;

  // q75 - q25; 0 when both are equal, +inf when q25 is -inf.
  double iqr() const;
  nlohmann::json ToJson() const;
};

// Quantile of sorted values by linear interpolation at h = (n - 1) p.
double Quantile(std::span<const double> sorted, double p);

// Throws std::invalid_argument on empty input or NaN values.
BoxStats SummarizeBox(std::span<const double> values);

}  // namespace synthtwin::eval

#endif  // SYNTHTWIN_EVAL_EVAL_H_
