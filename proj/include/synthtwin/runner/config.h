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

// Scenario configuration and the seed tree.

#ifndef SYNTHTWIN_RUNNER_CONFIG_H_
#define SYNTHTWIN_RUNNER_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "synthtwin/common/random.h"
#include "synthtwin/dpvi/train.h"
#include "synthtwin/tabular/dataset.h"

namespace synthtwin::runner {

enum class ScenarioKind { kBaselineSharing, kSequentialSharing, kSizeSweep, kSkewSweep };

std::string_view ToString(ScenarioKind kind);
// Accepts "baseline_sharing", "sequential_sharing", "size_sweep", "skew_sweep"
// and the hyphenated spellings.
ScenarioKind ParseScenarioKind(std::string_view name);

// Where party data comes from: a named preset, an inline population config,
// or a directory of <party>.csv files plus schema.json.
struct PopulationSource {
  std::string preset = "desk";
  std::optional<nlohmann::json> config;
  std::optional<std::filesystem::path> csv_dir;

  std::vector<std::pair<std::string, tabular::Dataset>> Load(std::uint64_t seed) const;
  nlohmann::json ToJson() const;
  static PopulationSource FromJson(const nlohmann::json& j);
};

struct SkewConfig {
  std::string feature = "ethnicity";
  std::string category = "South Asian";
  int target_value = 1;
  std::vector<double> keep_probs = {0.1, 0.25, 0.5, 0.75, 1.0};
  bool drop_feature_arm = true;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kBaselineSharing;
  PopulationSource population;
  double train_fraction = 0.8;
  // Subsample fractions of the training data. Every scenario but size_sweep
  // uses the first entry.
  std::vector<double> fractions = {0.1};
  double epsilon = 1.0;
  std::size_t K = 100;
  int repeats = 10;
  int permutations = 100;
  int n_draws = 100;
  bool include_local = true;
  dpvi::DpviConfig dpvi;
  SkewConfig skew;
  // Sequential scenario: focal parties (all when empty) and the longest
  // prefix of sharers (all others when negative).
  std::vector<std::string> focal_parties;
  int max_sharers = -1;
  std::uint64_t master_seed = 0;
  int threads = 0;  // 0 keeps the OpenMP default

  // Defaults for `kind` (fractions differ per scenario).
  static ScenarioConfig Defaults(ScenarioKind kind);

  // Throws std::invalid_argument.
  void Validate() const;
  nlohmann::json ToJson() const;
  // Missing keys take the defaults of the given scenario kind.
  static ScenarioConfig FromJson(const nlohmann::json& j);
};

// seed(stage, party, repeat, extra...) = DeriveSeed(master, scenario, stage,
// party, repeat, extra...), so any slice of a run can be recomputed alone.
class SeedTree {
 public:
  SeedTree(std::uint64_t master, std::string_view scenario)
      : root_(DeriveSeed(master, scenario)) {}

  template <typename... Extra>
  std::uint64_t operator()(std::string_view stage, std::string_view party,
                           std::uint64_t repeat, Extra... extra) const {
    return DeriveSeed(root_, HashLabel(stage), HashLabel(party), repeat,
                      static_cast<std::uint64_t>(extra)...);
  }

 private:
  std::uint64_t root_;
};

}  // namespace synthtwin::runner

#endif  // SYNTHTWIN_RUNNER_CONFIG_H_
