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

// Tables and files emitted for a run. All CSV output is a pure function of the
// sample values and the record (no timestamps), so identical runs produce
// identical bytes.

#ifndef SYNTHTWIN_RUNNER_REPORT_H_
#define SYNTHTWIN_RUNNER_REPORT_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "synthtwin/eval/eval.h"
#include "synthtwin/runner/scenarios.h"

namespace synthtwin::runner {

// Sample groups sharing everything but the repeat.
struct GroupKey {
  std::string scenario;
  std::string party;
  std::string arm;
  std::string eval_set;
  std::optional<double> fraction;
  std::optional<double> keep_prob;
  std::optional<int> sharers;

  static GroupKey Of(const SampleGroup& g);
  bool operator==(const GroupKey&) const = default;
};

struct BoxRow {
  GroupKey key;
  eval::BoxStats stats;
};

struct PValueRow {
  GroupKey a;  // the arm expected to be better
  GroupKey b;
  std::string comparison;
  eval::Sided sided = eval::Sided::kOneGreater;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::optional<eval::WelchResult> result;  // empty when the test is undefined
};

// Values of each key pooled over repeats, in first-appearance order.
std::vector<std::pair<GroupKey, std::vector<double>>> PoolRepeats(
    const std::vector<SampleGroup>& samples);

std::vector<BoxRow> BoxTable(const std::vector<SampleGroup>& samples);

// baseline/size sweep: combined > local per party and fraction (one-sided).
// sequential: s sharers > s - 1 sharers per party (one-sided).
// skew: combined vs local per keep_prob and, for the large party, combined
// and local_drop_feature vs local (two-sided).
std::vector<PValueRow> PValueTable(const std::vector<SampleGroup>& samples);

void WriteSamplesCsv(const std::filesystem::path& path,
                     const std::vector<SampleGroup>& samples);
std::vector<SampleGroup> ReadSamplesCsv(const std::filesystem::path& path);

// box_stats.csv, pvalues.csv, pvalue_table.csv and summary.json from samples
// alone (plus `extra` merged into summary.json).
void WriteSummaries(const std::filesystem::path& dir,
                    const std::vector<SampleGroup>& samples,
                    const nlohmann::json& extra = nlohmann::json::object());

// Everything: samples.csv, ledger.csv, the summaries and run_record.json.
void WriteReport(const std::filesystem::path& dir, const RunRecord& record);

// Per training run: epsilon within budget and delta == 1/N.
struct LedgerCheck {
  std::size_t runs = 0;
  std::size_t within_budget = 0;
  std::size_t delta_matches = 0;
  bool ok() const { return runs == within_budget && runs == delta_matches; }
};
LedgerCheck CheckLedger(const RunRecord& record);

}  // namespace synthtwin::runner

#endif  // SYNTHTWIN_RUNNER_REPORT_H_
