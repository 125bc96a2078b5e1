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


#include <atomic>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "synthtwin/common/random.h"
#include "synthtwin/kernels/kernels.h"
#include "synthtwin/tabular/ops.h"
#include "test_util.h"

namespace synthtwin::kernels {
namespace {

using ::synthtwin::testing::MakeSchema;
using ::synthtwin::testing::RandomDataset;

struct Problem {
  Eigen::MatrixXd x;
  Eigen::VectorXd count;
  Eigen::VectorXd positives;
  Eigen::VectorXd w;
};

Problem MakeProblem(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  Engine rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Problem pr{Eigen::MatrixXd(n, p), Eigen::VectorXd(n), Eigen::VectorXd(n),
             Eigen::VectorXd(p)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) pr.x(i, k) = k == 0 ? 1.0 : u(rng);
    pr.count(i) = 1 + rng() % 5;
    pr.positives(i) = rng() % static_cast<std::uint64_t>(pr.count(i) + 1);
  }
  for (auto& v : pr.w) v = u(rng);
  return pr;
}

class ThreadGuard {
 public:
  explicit ThreadGuard(int n) : saved_(MaxThreads()) { SetThreads(n); }
  ~ThreadGuard() { SetThreads(saved_); }

 private:
  int saved_;
};

TEST(PoissonScoreInfoTest, MatchesDenseFormulas) {
  Problem pr = MakeProblem(300, 5, 1);
  PoissonStats s = serial::PoissonScoreInfo(pr.x, pr.count, pr.positives, pr.w);
  const Eigen::VectorXd eta = pr.x * pr.w;
  const Eigen::VectorXd mass = pr.count.cwiseProduct(eta.array().exp().matrix());
  const Eigen::VectorXd score = pr.x.transpose() * (pr.positives - mass);
  const Eigen::MatrixXd info = pr.x.transpose() * mass.asDiagonal() * pr.x;
  EXPECT_TRUE(s.score.isApprox(score, 1e-12));
  EXPECT_TRUE(s.info.isApprox(info, 1e-12));
  EXPECT_NEAR(s.loglik, pr.positives.dot(eta) - mass.sum(), 1e-9);
  EXPECT_EQ(s.info, s.info.transpose());
}

TEST(PoissonScoreInfoTest, OmpEqualsSerialBelowOneBlock) {
  ThreadGuard threads(4);
  Problem pr = MakeProblem(kBlockRows - 1, 6, 2);
  PoissonStats a = serial::PoissonScoreInfo(pr.x, pr.count, pr.positives, pr.w);
  PoissonStats b = omp::PoissonScoreInfo(pr.x, pr.count, pr.positives, pr.w);
  EXPECT_EQ(a.score, b.score);
  EXPECT_EQ(a.info, b.info);
  EXPECT_EQ(a.loglik, b.loglik);
}

TEST(PoissonScoreInfoTest, OmpIndependentOfThreadCount) {
  Problem pr = MakeProblem(5000, 6, 3);
  PoissonStats one, many;
  {
    ThreadGuard threads(1);
    one = omp::PoissonScoreInfo(pr.x, pr.count, pr.positives, pr.w);
  }
  {
    ThreadGuard threads(5);
    many = omp::PoissonScoreInfo(pr.x, pr.count, pr.positives, pr.w);
  }
  EXPECT_EQ(one.score, many.score);
  EXPECT_EQ(one.info, many.info);
  EXPECT_EQ(one.loglik, many.loglik);
  PoissonStats ref = serial::PoissonScoreInfo(pr.x, pr.count, pr.positives, pr.w);
  EXPECT_TRUE(one.score.isApprox(ref.score, 1e-12));
  EXPECT_TRUE(one.info.isApprox(ref.info, 1e-12));
  EXPECT_NEAR(one.loglik, ref.loglik, 1e-12 * std::abs(ref.loglik));
}

TEST(PoissonLogLikTest, SerialMatchesDesignMatrix) {
  auto schema = MakeSchema({2, 3, 4});
  tabular::Dataset ds = RandomDataset(schema, 700, 4);
  Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(schema->EncodedWidth(), -1, 0.5);
  tabular::Design d = tabular::OneHotEncode(ds);
  const Eigen::VectorXd eta = d.x * w;
  const double want = d.y.dot(eta) - eta.array().exp().sum();
  EXPECT_NEAR(serial::PoissonLogLik(ds, {w.data(), static_cast<std::size_t>(w.size())}),
              want, 1e-10 * std::abs(want));
}

TEST(PoissonLogLikTest, OmpMatchesSerial) {
  auto schema = MakeSchema({2, 3, 4});
  Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(schema->EncodedWidth(), -1, 0.5);
  std::span<const double> ws(w.data(), w.size());
  for (std::size_t n : {1u, 100u, 511u, 512u, 513u, 4000u}) {
    tabular::Dataset ds = RandomDataset(schema, n, n);
    const double ref = serial::PoissonLogLik(ds, ws);
    double one, many;
    {
      ThreadGuard threads(1);
      one = omp::PoissonLogLik(ds, ws);
    }
    {
      ThreadGuard threads(3);
      many = omp::PoissonLogLik(ds, ws);
    }
    EXPECT_EQ(one, many) << n;
    if (n <= kBlockRows) {
      EXPECT_EQ(one, ref) << n;
    } else {
      EXPECT_NEAR(one, ref, 1e-12 * std::abs(ref)) << n;
    }
  }
}

TEST(ForEachTest, VisitsEveryIndexOnce) {
  ThreadGuard threads(4);
  std::vector<std::atomic<int>> hits(1000);
  omp::ForEach(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  std::vector<int> order;
  serial::ForEach(5, [&](std::size_t i) { order.push_back(static_cast<int>(i)); });
  EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3, 4}));
}

}  // namespace
}  // namespace synthtwin::kernels
