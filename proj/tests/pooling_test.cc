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
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "synthtwin/common/random.h"
#include "synthtwin/pooling/pooling.h"
#include "synthtwin/tabular/ops.h"
#include "synthtwin/tabular/population.h"
#include "test_util.h"

namespace synthtwin::pooling {
namespace {

using ::synthtwin::testing::MakeSchema;
using ::synthtwin::testing::RandomDataset;

SyntheticRelease MakeRelease(const std::string& party, const tabular::SchemaPtr& schema,
                             std::size_t rows, std::size_t K, std::uint64_t seed) {
  std::vector<tabular::Dataset> sets;
  for (std::size_t k = 0; k < K; ++k) sets.push_back(RandomDataset(schema, rows, seed + k));
  privacy::AccountantSummary acc{0.5, 3.0, 100, static_cast<std::int64_t>(rows), 0.9,
                                 1.0 / rows, 1.0, false};
  return SyntheticRelease(party, std::move(sets), acc, {{"seed", seed}});
}

glm::RegressionFit Fit(std::vector<double> w, std::vector<double> se, bool converged = true) {
  glm::RegressionFit f;
  f.coefficients = Eigen::Map<Eigen::VectorXd>(w.data(), w.size());
  f.std_errors = Eigen::Map<Eigen::VectorXd>(se.data(), se.size());
  f.converged = converged;
  return f;
}

// Rows as sortable tuples.
std::multiset<std::vector<int>> RowSet(const tabular::Dataset& ds) {
  std::multiset<std::vector<int>> rows;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    std::vector<int> r(ds.row(i).begin(), ds.row(i).end());
    r.push_back(ds.target(i));
    rows.insert(r);
  }
  return rows;
}

TEST(SyntheticReleaseTest, Invariants) {
  auto schema = MakeSchema({2, 3});
  EXPECT_THROW(SyntheticRelease("A", {}, {}), std::invalid_argument);
  EXPECT_THROW(SyntheticRelease("A", {RandomDataset(schema, 5, 1), RandomDataset(schema, 6, 2)}, {}),
               std::invalid_argument);
  EXPECT_THROW(SyntheticRelease("A", {RandomDataset(schema, 5, 1),
                                      RandomDataset(MakeSchema({2, 4}), 5, 2)},
                                {}),
               std::invalid_argument);
}

TEST(SyntheticReleaseTest, SaveLoadRoundTrip) {
  auto schema = MakeSchema({2, 3});
  SyntheticRelease r = MakeRelease("North", schema, 40, 3, 7);
  const auto dir = std::filesystem::temp_directory_path() / "synthtwin_release_test";
  std::filesystem::remove_all(dir);
  r.Save(dir);
  SyntheticRelease back = SyntheticRelease::Load(dir);
  std::filesystem::remove_all(dir);
  EXPECT_EQ(back.party(), "North");
  ASSERT_EQ(back.K(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_TRUE(back.set(k).SameRows(r.set(k)));
  EXPECT_EQ(back.accountant().dataset_size, 40);
  EXPECT_EQ(back.accountant().epsilon, 0.9);
  EXPECT_EQ(back.metadata().at("seed"), 7);
}

TEST(AssembleTest, NoReleasesGivesLocalCopies) {
  auto schema = MakeSchema({2, 3});
  tabular::Dataset local = RandomDataset(schema, 30, 1);
  auto sets = AssembleCombinedSets(local, std::span<const SyntheticRelease>(), 4);
  ASSERT_EQ(sets.size(), 4u);
  for (const auto& s : sets) EXPECT_TRUE(s.SameRows(local));
}

TEST(AssembleTest, AssessmentCentreSizeArithmetic) {
  auto schema = MakeSchema({2, 3});
  const auto& centres = tabular::AssessmentCentreSizes();
  // Newcastle is local; the other 15 release 10% of their training split.
  tabular::Dataset local =
      RandomDataset(schema, tabular::FloorCount(0.1, tabular::FloorCount(0.8, centres[0].second)), 1);
  std::vector<SyntheticRelease> releases;
  std::size_t expected = local.rows();
  for (std::size_t m = 1; m < centres.size(); ++m) {
    const std::size_t n = tabular::FloorCount(0.1, tabular::FloorCount(0.8, centres[m].second));
    releases.push_back(MakeRelease(centres[m].first, schema, n, 2, m * 10));
    expected += n;
  }
  auto sets = AssembleCombinedSets(local, releases, 2);
  ASSERT_EQ(sets.size(), 2u);
  EXPECT_EQ(sets[0].rows(), expected);
  EXPECT_EQ(sets[1].rows(), expected);
  // Oxford: 1867 -> 1493 -> 149.
  EXPECT_EQ(releases.back().set_size(), 149u);
}

TEST(AssembleTest, LayoutAndOrderInvariance) {
  auto schema = MakeSchema({2, 3});
  tabular::Dataset local = RandomDataset(schema, 20, 1);
  std::vector<SyntheticRelease> releases = {MakeRelease("A", schema, 10, 3, 100),
                                            MakeRelease("B", schema, 15, 3, 200),
                                            MakeRelease("C", schema, 5, 4, 300)};
  auto sets = AssembleCombinedSets(local, releases, 3);
  std::vector<SyntheticRelease> reversed(releases.rbegin(), releases.rend());
  auto other = AssembleCombinedSets(local, reversed, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    ASSERT_EQ(sets[k].rows(), 50u);
    std::vector<std::size_t> head(20);
    std::iota(head.begin(), head.end(), 0);
    EXPECT_TRUE(sets[k].Select(head).SameRows(local));
    EXPECT_EQ(RowSet(sets[k]), RowSet(other[k]));
    std::multiset<std::vector<int>> want = RowSet(local);
    for (const auto& r : releases) {
      auto s = RowSet(r.set(k));
      want.insert(s.begin(), s.end());
    }
    EXPECT_EQ(RowSet(sets[k]), want);
  }
  auto synthetic_only = AssembleCombinedSets(local, releases, 3, false);
  EXPECT_EQ(synthetic_only[0].rows(), 30u);
}

TEST(AssembleTest, Errors) {
  auto schema = MakeSchema({2, 3});
  tabular::Dataset local = RandomDataset(schema, 20, 1).WithPartyLabel("A");
  std::vector<SyntheticRelease> mismatch = {MakeRelease("B", MakeSchema({2, 4}), 10, 3, 1)};
  EXPECT_THROW(AssembleCombinedSets(local, mismatch, 2), std::invalid_argument);
  std::vector<SyntheticRelease> few = {MakeRelease("B", schema, 10, 2, 1)};
  EXPECT_THROW(AssembleCombinedSets(local, few, 3), std::invalid_argument);
  std::vector<SyntheticRelease> own = {MakeRelease("A", schema, 10, 2, 1)};
  EXPECT_THROW(AssembleCombinedSets(local, own, 2), std::invalid_argument);
}

TEST(RubinTest, HandExample) {
  std::vector<glm::RegressionFit> fits = {Fit({0.0}, {1.0}), Fit({2.0}, {1.0})};
  PooledFit p = RubinCombine(fits);
  EXPECT_EQ(p.point(0), 1.0);
  EXPECT_EQ(p.within(0), 1.0);
  EXPECT_EQ(p.between(0), 2.0);
  EXPECT_EQ(p.total_variance(0), 4.0);
  EXPECT_EQ(p.K, 2u);
}

TEST(RubinTest, IdenticalFitsReproduceTheFit) {
  glm::RegressionFit f = Fit({0.3, -1.25, 2.5}, {0.5, 0.125, 2.0});
  std::vector<glm::RegressionFit> fits(7, f);
  PooledFit p = RubinCombine(fits);
  EXPECT_EQ(p.point, f.coefficients);
  EXPECT_TRUE(p.between.isZero());
  EXPECT_EQ(p.total_variance, f.std_errors.cwiseAbs2());
}

TEST(RubinTest, PermutationInvariantAndTotalAtLeastWithin) {
  Engine rng(3);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t K = 2 + rng() % 20;
    std::vector<glm::RegressionFit> fits;
    for (std::size_t k = 0; k < K; ++k) {
      fits.push_back(Fit({n01(rng), 10 * n01(rng)}, {std::abs(n01(rng)), std::abs(n01(rng))}));
    }
    PooledFit p = RubinCombine(fits);
    ASSERT_TRUE((p.total_variance.array() >= p.within.array()).all());
    if (trial < 100) {
      std::shuffle(fits.begin(), fits.end(), rng);
      PooledFit q = RubinCombine(fits);
      EXPECT_TRUE(p.point.isApprox(q.point, 1e-12));
      EXPECT_TRUE(p.total_variance.isApprox(q.total_variance, 1e-12));
    }
  }
}

TEST(RubinTest, Errors) {
  EXPECT_THROW(RubinCombine(std::vector<glm::RegressionFit>{Fit({1.0}, {1.0})}),
               std::invalid_argument);
  EXPECT_THROW(RubinCombine(std::vector<glm::RegressionFit>{Fit({1.0}, {1.0}),
                                                            Fit({1.0, 2.0}, {1.0, 1.0})}),
               std::invalid_argument);
  EXPECT_THROW(RubinCombine(std::vector<glm::RegressionFit>{Fit({1.0}, {1.0}),
                                                            Fit({1.0}, {1.0}, false)}),
               std::invalid_argument);
}

TEST(CombineConvergedTest, DropsAndCounts) {
  std::vector<glm::RegressionFit> fits = {Fit({0.0}, {1.0}), Fit({9.0}, {1.0}, false),
                                          Fit({2.0}, {1.0})};
  PooledFit p = CombineConverged(fits);
  EXPECT_EQ(p.K, 2u);
  EXPECT_EQ(p.dropped, 1u);
  EXPECT_EQ(p.total_variance(0), 4.0);
  fits[2].converged = false;
  EXPECT_THROW(CombineConverged(fits), std::runtime_error);
}

}  // namespace
}  // namespace synthtwin::pooling
