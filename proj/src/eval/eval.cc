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

#include "synthtwin/eval/eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "synthtwin/common/random.h"
#include "synthtwin/kernels/kernels.h"

namespace synthtwin::eval {
namespace {

template <typename ForEach>
LogLikSamples SampleWith(const Eigen::VectorXd& point, const Eigen::VectorXd& variance,
                         const glm::Patterns& test, int n_draws, std::uint64_t seed,
                         bool normalize, ForEach for_each) {
  if (test.rows == 0) throw std::invalid_argument("sample_ll: empty test set");
  if (n_draws < 1) throw std::invalid_argument("sample_ll: n_draws must be >= 1");
  if (point.size() != variance.size() || point.size() != test.x.cols()) {
    throw std::invalid_argument("sample_ll: dimension mismatch");
  }
  if (!((variance.array() >= 0.0).all())) {
    throw std::invalid_argument("sample_ll: variances must be nonnegative");
  }
  const Eigen::VectorXd sd = variance.cwiseSqrt();
  LogLikSamples out;
  out.normalized = normalize;
  out.values.resize(n_draws);
  for_each(static_cast<std::size_t>(n_draws), [&](std::size_t d) {
    CounterEngine rng(seed, d);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd w(point.size());
    for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = point(k) + sd(k) * normal(rng);
    out.values[d] = glm::TestLogLikelihood(
        std::span<const double>(w.data(), w.size()), test, normalize);
  });
  return out;
}

void CheckNoNan(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (std::isnan(x)) throw std::invalid_argument(std::string(what) + ": NaN value");
  }
}

double SampleVariance(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (n - 1.0);
}

}  // namespace

LogLikSamples SampleLlDistribution(const Eigen::VectorXd& point,
                                   const Eigen::VectorXd& variance,
                                   const glm::Patterns& test, int n_draws,
                                   std::uint64_t seed, bool normalize) {
  return SampleWith(point, variance, test, n_draws, seed, normalize,
                    [](std::size_t n, auto&& f) { kernels::omp::ForEach(n, f); });
}

LogLikSamples SampleLlDistribution(const Eigen::VectorXd& point,
                                   const Eigen::VectorXd& variance,
                                   const tabular::Dataset& test, int n_draws,
                                   std::uint64_t seed, bool normalize) {
  if (test.empty()) throw std::invalid_argument("sample_ll: empty test set");
  return SampleLlDistribution(point, variance, glm::CompressRows(test), n_draws,
                              seed, normalize);
}

LogLikSamples SampleLlDistribution(const glm::RegressionFit& fit,
                                   const glm::Patterns& test, int n_draws,
                                   std::uint64_t seed, bool normalize) {
  return SampleLlDistribution(fit.coefficients, fit.std_errors.cwiseAbs2(), test,
                              n_draws, seed, normalize);
}

LogLikSamples SampleLlDistribution(const pooling::PooledFit& fit,
                                   const glm::Patterns& test, int n_draws,
                                   std::uint64_t seed, bool normalize) {
  return SampleLlDistribution(fit.point, fit.total_variance, test, n_draws, seed,
                              normalize);
}

namespace serial {
LogLikSamples SampleLlDistribution(const Eigen::VectorXd& point,
                                   const Eigen::VectorXd& variance,
                                   const glm::Patterns& test, int n_draws,
                                   std::uint64_t seed, bool normalize) {
  return SampleWith(point, variance, test, n_draws, seed, normalize,
                    [](std::size_t n, auto&& f) { kernels::serial::ForEach(n, f); });
}
}  // namespace serial

std::vector<double> MidRanks(std::span<const double> values) {
  CheckNoNan(values, "mid_ranks");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() && values[order[end]] == values[order[start]]) ++end;
    // Positions start..end-1 hold rank start+1..end.
    const double mid = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) ranks[order[k]] = mid;
    start = end;
  }
  return ranks;
}

WelchResult RankedWelchTest(std::span<const double> a, std::span<const double> b,
                            Sided sided) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("ranked_welch: need at least two values per sample");
  }
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::vector<double> ranks = MidRanks(pooled);
  std::span<const double> ra(ranks.data(), a.size());
  std::span<const double> rb(ranks.data() + a.size(), b.size());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double mean_a = std::accumulate(ra.begin(), ra.end(), 0.0) / na;
  const double mean_b = std::accumulate(rb.begin(), rb.end(), 0.0) / nb;
  const double va = SampleVariance(ra) / na;
  const double vb = SampleVariance(rb) / nb;
  if (!(va + vb > 0.0)) {
    throw std::invalid_argument("ranked_welch: zero variance, statistic undefined");
  }
  WelchResult r;
  r.t = (mean_a - mean_b) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t dist(r.df);
  if (sided == Sided::kOneGreater) {
    r.p = boost::math::cdf(boost::math::complement(dist, r.t));
  } else {
    r.p = 2.0 * boost::math::cdf(dist, -std::abs(r.t));
  }
  return r;
}

double BoxStats::iqr() const {
  if (q75 == q25) return 0.0;
  return q75 - q25;
}

nlohmann::json BoxStats::ToJson() const {
  // JSON has no infinities; -inf is written as null.
  auto num = [](double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  };
  return {{"n", n},
          {"mean", num(mean)},
          {"q25", num(q25)},
          {"median", num(median)},
          {"q75", num(q75)},
          {"whisker_low", num(whisker_low)},
          {"whisker_high", num(whisker_high)},
          {"outliers", outliers}};
}

double Quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  const double a = sorted[lo];
  const double b = sorted[hi];
  if (frac == 0.0 || a == b) return a;
  if (!std::isfinite(a)) return a;
  if (!std::isfinite(b)) return b;
  return a + frac * (b - a);
}

BoxStats SummarizeBox(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summarize_box: empty input");
  CheckNoNan(values, "summarize_box");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  BoxStats s;
  s.n = v.size();
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.q25 = Quantile(v, 0.25);
  s.median = Quantile(v, 0.5);
  s.q75 = Quantile(v, 0.75);
  const double iqr = s.iqr();
  const double lo_fence = iqr == 0.0 ? s.q25 : s.q25 - 1.5 * iqr;
  const double hi_fence = iqr == 0.0 ? s.q75 : s.q75 + 1.5 * iqr;
  s.whisker_low = s.q25;
  s.whisker_high = s.q75;
  for (double x : v) {
    if (x < lo_fence || x > hi_fence) {
      ++s.outliers;
      continue;
    }
    s.whisker_low = std::min(s.whisker_low, x);
    s.whisker_high = std::max(s.whisker_high, x);
  }
  return s;
}

}  // namespace synthtwin::eval
