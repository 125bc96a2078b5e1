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


#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "synthtwin/common/random.h"
#include "synthtwin/eval/eval.h"
#include "synthtwin/glm/poisson.h"
#include "synthtwin/kernels/kernels.h"
#include "oracles.h"
#include "test_util.h"

namespace synthtwin::eval {
namespace {

using ::synthtwin::testing::MakeSchema;
using ::synthtwin::testing::NormalQuadrature;
using ::synthtwin::testing::RandomDataset;

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(SampleLlTest, ZeroVarianceRepeatsPointEstimate) {
  auto schema = MakeSchema({2, 3});
  tabular::Dataset test = RandomDataset(schema, 200, 1);
  Eigen::VectorXd point(4);
  point << -0.5, 0.2, -0.1, 0.3;
  LogLikSamples s = SampleLlDistribution(point, Eigen::VectorXd::Zero(4), test, 25, 3);
  const double want =
      glm::TestLogLikelihood({point.data(), 4}, test, true);
  ASSERT_EQ(s.values.size(), 25u);
  for (double v : s.values) EXPECT_NEAR(v, want, 1e-12);
  EXPECT_TRUE(s.normalized);
  EXPECT_EQ(SampleLlDistribution(point, Eigen::VectorXd::Ones(4), test, 1, 3).values.size(), 1u);
}

TEST(SampleLlTest, GaussHermiteExpectation) {
  // Only the intercept varies: u(w0) = mean(y) * w0 + mean(y * w1 x) - e^w0 mean(e^(w1 x)).
  auto schema = MakeSchema({2});
  tabular::Dataset test = RandomDataset(schema, 300, 2);
  const double m = -0.7, v = 0.09, w1 = 0.4;
  Eigen::Vector2d point(m, w1);
  Eigen::Vector2d var(v, 0.0);
  auto u = [&](double w0) {
    const std::vector<double> w = {w0, w1};
    return glm::TestLogLikelihood(w, test, true);
  };
  auto [nodes, weights] = NormalQuadrature(40);
  double expected = 0.0;
  for (int k = 0; k < nodes.size(); ++k) expected += weights(k) * u(m + std::sqrt(v) * nodes(k));

  constexpr int kDraws = 100000;
  LogLikSamples s = SampleLlDistribution(point, var, test, kDraws, 4);
  const double mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / kDraws;
  double ss = 0.0;
  for (double x : s.values) ss += (x - mean) * (x - mean);
  const double se = std::sqrt(ss / (kDraws - 1) / kDraws);
  EXPECT_NEAR(mean, expected, 3 * se);
}

TEST(SampleLlTest, BoundedByPerRowOptimum) {
  auto schema = MakeSchema({2, 3});
  tabular::Dataset test = RandomDataset(schema, 150, 5);
  // sup over lambda of y ln(lambda) - lambda is -1 for y = 1 and 0 for y = 0.
  double positives = 0.0;
  for (std::size_t i = 0; i < test.rows(); ++i) positives += test.target(i);
  const double bound = -positives / test.rows();
  Eigen::VectorXd point = Eigen::VectorXd::LinSpaced(4, -1, 1);
  LogLikSamples s = SampleLlDistribution(point, Eigen::VectorXd::Constant(4, 0.5), test, 500, 6);
  for (double x : s.values) EXPECT_LE(x, bound);
}

TEST(SampleLlTest, DeterministicAndParallelMatchesSerial) {
  auto schema = MakeSchema({2, 3, 4});
  glm::Patterns test = glm::CompressRows(RandomDataset(schema, 700, 7));
  Eigen::VectorXd point = Eigen::VectorXd::LinSpaced(7, -1, 0.5);
  Eigen::VectorXd var = Eigen::VectorXd::Constant(7, 0.04);
  const int saved = kernels::MaxThreads();
  kernels::SetThreads(3);
  LogLikSamples a = SampleLlDistribution(point, var, test, 300, 8);
  kernels::SetThreads(saved);
  LogLikSamples b = serial::SampleLlDistribution(point, var, test, 300, 8);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.values, SampleLlDistribution(point, var, test, 300, 8).values);
  EXPECT_NE(a.values, SampleLlDistribution(point, var, test, 300, 9).values);
}

TEST(SampleLlTest, PatternsAndDatasetAgree) {
  auto schema = MakeSchema({2, 3});
  tabular::Dataset test = RandomDataset(schema, 400, 10);
  Eigen::VectorXd point = Eigen::VectorXd::LinSpaced(4, -0.8, 0.3);
  Eigen::VectorXd var = Eigen::VectorXd::Constant(4, 0.01);
  LogLikSamples a = SampleLlDistribution(point, var, test, 50, 11);
  LogLikSamples b = SampleLlDistribution(point, var, glm::CompressRows(test), 50, 11);
  for (std::size_t k = 0; k < 50; ++k) EXPECT_NEAR(a.values[k], b.values[k], 1e-12);
}

TEST(SampleLlTest, Errors) {
  auto schema = MakeSchema({2});
  Eigen::Vector2d point(0, 0);
  EXPECT_THROW(SampleLlDistribution(point, Eigen::Vector2d(1, 1), tabular::Dataset(schema), 5, 1),
               std::invalid_argument);
  tabular::Dataset test = RandomDataset(schema, 10, 1);
  EXPECT_THROW(SampleLlDistribution(point, Eigen::Vector2d(-1, 1), test, 5, 1),
               std::invalid_argument);
  EXPECT_THROW(SampleLlDistribution(point, Eigen::Vector2d(1, 1), test, 0, 1),
               std::invalid_argument);
}

TEST(MidRanksTest, TiesAveraged) {
  const std::vector<double> v = {1, 2, 2, 5, 7, 7.5, 2, 3, 8, 9, 9, 10, 11};
  const std::vector<double> want = {1, 3, 3, 6, 7, 8, 3, 5, 9, 10.5, 10.5, 12, 13};
  EXPECT_EQ(MidRanks(v), want);
  const std::vector<double> inf = {-kInf, -kInf, 0.0};
  EXPECT_EQ(MidRanks(inf), (std::vector<double>{1.5, 1.5, 3}));
}

TEST(RankedWelchTest, HandComputedCase) {
  const std::vector<double> a = {1, 2, 3}, b = {4, 5, 6};
  WelchResult r = RankedWelchTest(a, b, Sided::kTwo);
  EXPECT_NEAR(r.t, -3.6742, 1e-3);
  EXPECT_NEAR(r.df, 4.0, 1e-12);
  EXPECT_NEAR(r.p, 0.0214, 1e-3);
  WelchResult s = RankedWelchTest(b, a, Sided::kTwo);
  EXPECT_DOUBLE_EQ(s.t, -r.t);
  EXPECT_DOUBLE_EQ(s.p, r.p);
}

TEST(RankedWelchTest, TiedCaseAgainstReference) {
  // Reference values from an independent Welch implementation on mid-ranks.
  const std::vector<double> a = {1, 2, 2, 5, 7, 7.5}, b = {2, 3, 8, 9, 9, 10, 11};
  WelchResult two = RankedWelchTest(a, b, Sided::kTwo);
  EXPECT_NEAR(two.t, -2.428134783078241, 1e-12);
  EXPECT_NEAR(two.df, 10.822241111813668, 1e-9);
  EXPECT_NEAR(two.p, 0.03385386611316044, 1e-9);
  EXPECT_NEAR(RankedWelchTest(a, b, Sided::kOneGreater).p, 0.9830730669434198, 1e-9);
}

TEST(RankedWelchTest, InvariantUnderMonotoneTransform) {
  Engine rng(1);
  std::normal_distribution<double> n01;
  std::vector<double> a(40), b(55);
  for (double& x : a) x = n01(rng);
  for (double& x : b) x = 0.3 + n01(rng);
  WelchResult r = RankedWelchTest(a, b, Sided::kOneGreater);
  auto f = [](double x) { return std::exp(3 * x) - 7; };
  std::vector<double> fa, fb;
  for (double x : a) fa.push_back(f(x));
  for (double x : b) fb.push_back(f(x));
  WelchResult s = RankedWelchTest(fa, fb, Sided::kOneGreater);
  EXPECT_EQ(r.t, s.t);
  EXPECT_EQ(r.p, s.p);
}

TEST(RankedWelchTest, NullCalibration) {
  Engine rng(2);
  std::normal_distribution<double> n01;
  int rejections = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(100), b(100);
    for (double& x : a) x = n01(rng);
    for (double& x : b) x = n01(rng);
    rejections += RankedWelchTest(a, b, Sided::kOneGreater).p < 0.05;
  }
  EXPECT_GE(rejections, 30);
  EXPECT_LE(rejections, 70);
}

TEST(RankedWelchTest, Errors) {
  const std::vector<double> one = {1.0};
  const std::vector<double> two = {1.0, 2.0};
  const std::vector<double> same = {3.0, 3.0, 3.0};
  EXPECT_THROW(RankedWelchTest(one, two, Sided::kTwo), std::invalid_argument);
  EXPECT_THROW(RankedWelchTest(same, same, Sided::kTwo), std::invalid_argument);
}

TEST(BoxTest, LinearInterpolationQuantiles) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  std::shuffle(v.begin(), v.end(), Engine(3));
  BoxStats s = SummarizeBox(v);
  EXPECT_DOUBLE_EQ(s.q25, 25.75);
  EXPECT_DOUBLE_EQ(s.median, 50.5);
  EXPECT_DOUBLE_EQ(s.q75, 75.25);
  EXPECT_DOUBLE_EQ(s.mean, 50.5);
  EXPECT_EQ(s.whisker_low, 1.0);
  EXPECT_EQ(s.whisker_high, 100.0);
  EXPECT_EQ(s.outliers, 0u);
}

TEST(BoxTest, ConstantSamples) {
  BoxStats s = SummarizeBox(std::vector<double>(9, -0.8));
  for (double x : {s.q25, s.median, s.q75, s.whisker_low, s.whisker_high}) EXPECT_EQ(x, -0.8);
  EXPECT_EQ(s.iqr(), 0.0);
}

TEST(BoxTest, WhiskerRule) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  // Fence at 75.25 + 1.5 * 49.5 = 149.5.
  v.push_back(140.0);
  BoxStats near = SummarizeBox(v);
  EXPECT_EQ(near.whisker_high, 140.0);
  EXPECT_EQ(near.outliers, 0u);
  v.back() = 1000.0;
  BoxStats far = SummarizeBox(v);
  EXPECT_EQ(far.whisker_high, 100.0);
  EXPECT_EQ(far.outliers, 1u);
}

TEST(BoxTest, NegativeInfinityValues) {
  const std::vector<double> v = {-kInf, -kInf, -1.0, -0.9, -0.8};
  BoxStats s = SummarizeBox(v);
  EXPECT_EQ(s.q25, -kInf);
  EXPECT_EQ(s.median, -1.0);
  EXPECT_EQ(s.iqr(), kInf);
  EXPECT_EQ(s.mean, -kInf);
  EXPECT_TRUE(s.ToJson().at("q25").is_null());
  EXPECT_EQ(s.ToJson().at("median"), -1.0);
}

}  // namespace
}  // namespace synthtwin::eval
