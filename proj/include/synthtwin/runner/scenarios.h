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

// The four experiment runners.

#ifndef SYNTHTWIN_RUNNER_SCENARIOS_H_
#define SYNTHTWIN_RUNNER_SCENARIOS_H_

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "synthtwin/privacy/accountant.h"
#include "synthtwin/runner/config.h"
#include "synthtwin/runner/vault.h"

namespace synthtwin::runner {

inline constexpr char kVersion[] = "0.1.0";

// Arms.
inline constexpr char kLocal[] = "local";
inline constexpr char kCombined[] = "combined";
inline constexpr char kPooledReal[] = "pooled_real";
inline constexpr char kLocalDropFeature[] = "local_drop_feature";
// Evaluation sets.
inline constexpr char kGlobalTest[] = "global";
inline constexpr char kSubgroupTest[] = "subgroup";
// Party label of the skew scenario's artificial party and of the pooled-real
// baseline.
inline constexpr char kArtificialParty[] = "Artificial";
inline constexpr char kAllParties[] = "all";

// One labelled set of log-likelihood values (n_draws per repeat, or
// permutations * n_draws in the sequential scenario).
struct SampleGroup {
  std::string scenario;
  std::string party;
  std::string arm;
  std::string eval_set;
  std::optional<double> fraction;
  std::optional<double> keep_prob;
  std::optional<int> sharers;
  int repeat = 0;
  std::vector<double> values;
};

struct AccountantEntry {
  std::string party;
  int repeat = 0;
  double fraction = 1.0;
  privacy::AccountantSummary summary;
};

struct RunRecord {
  ScenarioConfig config;
  std::vector<AccountantEntry> accountants;
  std::vector<SampleGroup> samples;
  AuditReport audit;
  std::vector<std::string> notes;
  std::string version = kVersion;
  double wall_seconds = 0.0;

  // Everything except the sample values.
  nlohmann::json ToJson() const;
};

RunRecord RunBaselineSharing(const ScenarioConfig& config);
RunRecord RunSequentialSharing(const ScenarioConfig& config);
RunRecord RunSizeSweep(const ScenarioConfig& config);
RunRecord RunSkewSweep(const ScenarioConfig& config);
// Dispatches on config.kind.
RunRecord RunScenario(const ScenarioConfig& config);

}  // namespace synthtwin::runner

#endif  // SYNTHTWIN_RUNNER_SCENARIOS_H_
