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

// Synthetic multi-party cohorts. Each party draws its rows from a ground-truth
// generator: a shared base model whose feature tables are tilted per party
// (p_party(c) proportional to p_base(c) * exp(shift(c))) and whose
// regression intercept is shifted per party.

#ifndef SYNTHTWIN_TABULAR_POPULATION_H_
#define SYNTHTWIN_TABULAR_POPULATION_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "synthtwin/genmodel/params.h"
#include "synthtwin/tabular/dataset.h"

namespace synthtwin::tabular {

struct PartySpec {
  std::string name;
  std::size_t size = 0;
  // Explicit log-tilts: feature name -> one value per category. Added to the
  // random tilts.
  std::map<std::string, std::vector<double>> feature_shift;
  double intercept_shift = 0.0;
};

struct PopulationConfig {
  genmodel::GenerativeParams base;
  std::vector<PartySpec> parties;
  // Std of random per-party, per-category log-tilts of every feature table.
  double feature_heterogeneity = 0.0;
  // Std of random per-party intercept shifts.
  double target_heterogeneity = 0.0;

  const Schema& schema() const { return base.schema(); }

  nlohmann::json ToJson() const;
  // Throws std::invalid_argument for invalid simplices or shapes.
  static PopulationConfig FromJson(const nlohmann::json& j);
};

// Ground-truth generator of party `index` (random tilts derived from seed).
genmodel::GenerativeParams PartyModel(const PopulationConfig& config,
                                      std::size_t index, std::uint64_t seed);

std::vector<std::pair<std::string, Dataset>> SynthesizePopulation(
    const PopulationConfig& config, std::uint64_t seed);

// Five categorical predictors with cardinalities (2, 3, 3, 3, 4), eight
// parties of 300-800 rows, moderate heterogeneity.
PopulationConfig DeskPopulation();

// Sixteen parties sized like the UK Biobank assessment centres (1867-5922
// rows), scaled by `scale`; predictors with cardinalities (2, 3, 4, 8, 5).
// The ethnicity marginal follows the full-cohort shares and the Newcastle
// party is tilted towards White British.
PopulationConfig AssessmentCentrePopulation(double scale = 1.0);

// Named presets: "desk", "centres", "centres-quarter".
PopulationConfig PopulationPreset(const std::string& name);

// Sizes of the sixteen assessment centres, largest first.
const std::vector<std::pair<std::string, std::size_t>>& AssessmentCentreSizes();

}  // namespace synthtwin::tabular

#endif  // SYNTHTWIN_TABULAR_POPULATION_H_
