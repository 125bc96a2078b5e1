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


#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "synthtwin/runner/config.h"
#include "synthtwin/runner/report.h"
#include "synthtwin/runner/scenarios.h"
#include "synthtwin/runner/vault.h"
#include "test_util.h"

namespace synthtwin::runner {
namespace {

namespace fs = std::filesystem;

ScenarioConfig Small(ScenarioKind kind) {
  ScenarioConfig c = ScenarioConfig::Defaults(kind);
  c.fractions = {0.2};
  c.K = 3;
  c.repeats = 1;
  c.permutations = 2;
  c.n_draws = 8;
  c.dpvi.iterations = 60;
  c.dpvi.components = 2;
  c.master_seed = 11;
  return c;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path TempDir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("synthtwin_runner_test_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(ConfigTest, JsonRoundTrip) {
  ScenarioConfig c = Small(ScenarioKind::kSkewSweep);
  c.focal_parties = {"a", "b"};
  c.skew.keep_probs = {0.3, 1.0};
  ScenarioConfig d = ScenarioConfig::FromJson(c.ToJson());
  EXPECT_EQ(d.ToJson(), c.ToJson());
  EXPECT_EQ(d.kind, ScenarioKind::kSkewSweep);
}

TEST(ConfigTest, MissingKeysTakeScenarioDefaults) {
  ScenarioConfig c = ScenarioConfig::FromJson({{"scenario", "size_sweep"}});
  EXPECT_EQ(c.fractions, (std::vector<double>{0.2, 0.5, 1.0}));
  EXPECT_EQ(c.K, 100u);
  EXPECT_EQ(c.repeats, 10);
  EXPECT_EQ(c.n_draws, 100);
  EXPECT_EQ(c.epsilon, 1.0);
}

TEST(ConfigTest, RejectsBadInput) {
  EXPECT_THROW(ScenarioConfig::FromJson({{"scenario", "baseline_sharing"}, {"Kay", 3}}),
               std::invalid_argument);
  EXPECT_THROW(ParseScenarioKind("nope"), std::invalid_argument);
  ScenarioConfig c = Small(ScenarioKind::kBaselineSharing);
  c.K = 1;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = Small(ScenarioKind::kBaselineSharing);
  c.fractions = {1.5};
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  EXPECT_THROW(PopulationSource::FromJson({{"preset", "desk"}, {"csv_dir", "/tmp"}}),
               std::invalid_argument);
}

TEST(SeedTreeTest, DistinctAndStable) {
  SeedTree a(1, "baseline"), b(1, "baseline"), c(2, "baseline"), d(1, "skew");
  EXPECT_EQ(a("train", "x", 0), b("train", "x", 0));
  std::set<std::uint64_t> seen = {a("train", "x", 0), a("train", "y", 0), a("train", "x", 1),
                                  a("sample", "x", 0), a("train", "x", 0, 1), c("train", "x", 0),
                                  d("train", "x", 0)};
  EXPECT_EQ(seen.size(), 7u);
}

TEST(VaultTest, CrossPartyReadThrowsAndIsAudited) {
  auto schema = testing::MakeSchema({2});
  PartyVault v;
  v.AddParty("a");
  v.AddParty("b");
  v.Put("a", "train", testing::RandomDataset(schema, 5, 1));
  EXPECT_EQ(v.Get("a", "train", "a").rows(), 5u);
  EXPECT_EQ(v.Get("a", "train", std::string(kEvaluator)).rows(), 5u);
  EXPECT_THROW(v.Get("a", "train", "b"), std::logic_error);
  EXPECT_THROW(v.Get("a", "test", "a"), std::out_of_range);
  AuditReport r = v.Audit();
  EXPECT_EQ(r.total, 4u);
  EXPECT_EQ(r.cross_party, 1u);
}

TEST(VaultTest, ReservedAndDuplicateNames) {
  PartyVault v;
  EXPECT_THROW(v.AddParty(std::string(kEvaluator)), std::invalid_argument);
  EXPECT_THROW(v.AddParty(std::string(kPooledRealBaseline)), std::invalid_argument);
  v.AddParty("a");
  EXPECT_THROW(v.AddParty("a"), std::invalid_argument);
  EXPECT_THROW(v.Put("zz", "train", tabular::Dataset(testing::MakeSchema({2}))),
               std::invalid_argument);
}

class BaselineRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    record_ = new RunRecord(RunBaselineSharing(Small(ScenarioKind::kBaselineSharing)));
  }
  static void TearDownTestSuite() { delete record_; }
  static RunRecord* record_;
};
RunRecord* BaselineRun::record_ = nullptr;

TEST_F(BaselineRun, OutputShape) {
  std::set<std::string> parties, arms;
  for (const auto& g : record_->samples) {
    parties.insert(g.party);
    arms.insert(g.arm);
    EXPECT_EQ(g.values.size(), 8u);
    EXPECT_EQ(g.eval_set, kGlobalTest);
  }
  // Eight parties plus the pooled-real reference.
  EXPECT_EQ(parties.size(), 9u);
  EXPECT_TRUE(parties.count(kAllParties));
  EXPECT_TRUE(arms.count(kPooledReal));
  EXPECT_TRUE(arms.count(kLocal));
  EXPECT_TRUE(arms.count(kCombined));
  EXPECT_EQ(record_->accountants.size(), 8u);
}

TEST_F(BaselineRun, LedgerAndAudit) {
  EXPECT_TRUE(CheckLedger(*record_).ok());
  EXPECT_EQ(record_->audit.cross_party, 0u);
  EXPECT_GT(record_->audit.total, 0u);
  for (const auto& a : record_->accountants) {
    EXPECT_LE(a.summary.epsilon, 1.0);
    EXPECT_DOUBLE_EQ(a.summary.delta, 1.0 / a.summary.dataset_size);
  }
}

TEST_F(BaselineRun, DeterministicAndThreadIndependent) {
  ScenarioConfig c = Small(ScenarioKind::kBaselineSharing);
  c.threads = 1;
  RunRecord again = RunBaselineSharing(c);
  ASSERT_EQ(again.samples.size(), record_->samples.size());
  for (std::size_t i = 0; i < again.samples.size(); ++i) {
    EXPECT_EQ(again.samples[i].values, record_->samples[i].values);
  }
  fs::path d1 = TempDir("a"), d2 = TempDir("b");
  WriteReport(d1, *record_);
  WriteReport(d2, again);
  for (const char* f : {"samples.csv", "ledger.csv", "box_stats.csv", "pvalues.csv",
                        "pvalue_table.csv"}) {
    EXPECT_EQ(Slurp(d1 / f), Slurp(d2 / f)) << f;
  }
}

TEST_F(BaselineRun, SamplesCsvRoundTrip) {
  fs::path dir = TempDir("csv");
  fs::create_directories(dir);
  WriteSamplesCsv(dir / "s.csv", record_->samples);
  std::vector<SampleGroup> back = ReadSamplesCsv(dir / "s.csv");
  ASSERT_EQ(back.size(), record_->samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(GroupKey::Of(back[i]), GroupKey::Of(record_->samples[i]));
    EXPECT_EQ(back[i].repeat, record_->samples[i].repeat);
    EXPECT_EQ(back[i].values, record_->samples[i].values);
  }
}

TEST_F(BaselineRun, PValueTableCoversEveryParty) {
  auto rows = PValueTable(record_->samples);
  std::set<std::string> parties;
  for (const auto& r : rows) {
    EXPECT_EQ(r.comparison, "combined>local");
    parties.insert(r.a.party);
  }
  EXPECT_EQ(parties.size(), 8u);
}

TEST(ReportTest, PoolRepeatsConcatenates) {
  SampleGroup a{"s", "p", kLocal, kGlobalTest, 0.1, std::nullopt, std::nullopt, 0, {1, 2}};
  SampleGroup b = a;
  b.repeat = 1;
  b.values = {3};
  SampleGroup c = a;
  c.arm = kCombined;
  auto pooled = PoolRepeats({a, b, c});
  ASSERT_EQ(pooled.size(), 2u);
  EXPECT_EQ(pooled[0].second, (std::vector<double>{1, 2, 3}));
}

TEST(ScenarioTest, SequentialPrefixes) {
  ScenarioConfig c = Small(ScenarioKind::kSequentialSharing);
  c.focal_parties = {};
  c.max_sharers = 2;
  RunRecord r = RunSequentialSharing(c);
  std::set<int> sharers;
  for (const auto& g : r.samples) {
    ASSERT_TRUE(g.sharers.has_value());
    sharers.insert(*g.sharers);
  }
  EXPECT_EQ(sharers, (std::set<int>{0, 1, 2}));
  EXPECT_EQ(r.audit.cross_party, 0u);
}

}  // namespace
}  // namespace synthtwin::runner
