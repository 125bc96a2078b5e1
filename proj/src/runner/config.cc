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

#include "synthtwin/runner/config.h"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "synthtwin/tabular/csv.h"
#include "synthtwin/tabular/population.h"

namespace synthtwin::runner {

std::string_view ToString(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kBaselineSharing:
      return "baseline_sharing";
    case ScenarioKind::kSequentialSharing:
      return "sequential_sharing";
    case ScenarioKind::kSizeSweep:
      return "size_sweep";
    case ScenarioKind::kSkewSweep:
      return "skew_sweep";
  }
  return "unknown";
}

ScenarioKind ParseScenarioKind(std::string_view name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '-', '_');
  for (ScenarioKind k : {ScenarioKind::kBaselineSharing, ScenarioKind::kSequentialSharing,
                         ScenarioKind::kSizeSweep, ScenarioKind::kSkewSweep}) {
    if (s == ToString(k)) return k;
  }
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

std::vector<std::pair<std::string, tabular::Dataset>> PopulationSource::Load(
    std::uint64_t seed) const {
  if (csv_dir) {
    std::ifstream in(*csv_dir / "schema.json");
    if (!in) {
      throw std::runtime_error("population: missing " + (*csv_dir / "schema.json").string());
    }
    auto schema = tabular::Schema::FromJson(nlohmann::json::parse(in));
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(*csv_dir)) {
      if (entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("population: no CSV files in " + csv_dir->string());
    std::vector<std::pair<std::string, tabular::Dataset>> out;
    for (const auto& f : files) {
      const std::string name = f.stem().string();
      out.emplace_back(name, tabular::LoadCsv(f, schema, name));
    }
    return out;
  }
  if (config) {
    return tabular::SynthesizePopulation(tabular::PopulationConfig::FromJson(*config), seed);
  }
  return tabular::SynthesizePopulation(tabular::PopulationPreset(preset), seed);
}

nlohmann::json PopulationSource::ToJson() const {
  nlohmann::json j = nlohmann::json::object();
  if (csv_dir) {
    j["csv_dir"] = csv_dir->string();
  } else if (config) {
    j["config"] = *config;
  } else {
    j["preset"] = preset;
  }
  return j;
}

PopulationSource PopulationSource::FromJson(const nlohmann::json& j) {
  PopulationSource p;
  if (j.is_string()) {
    p.preset = j.get<std::string>();
    return p;
  }
  const int given = j.contains("csv_dir") + j.contains("config") + j.contains("preset");
  if (given > 1) {
    throw std::invalid_argument("population: give exactly one of preset, config, csv_dir");
  }
  if (j.contains("csv_dir")) p.csv_dir = j.at("csv_dir").get<std::string>();
  if (j.contains("config")) p.config = j.at("config");
  if (j.contains("preset")) p.preset = j.at("preset").get<std::string>();
  return p;
}

ScenarioConfig ScenarioConfig::Defaults(ScenarioKind kind) {
  ScenarioConfig c;
  c.kind = kind;
  if (kind == ScenarioKind::kSizeSweep) c.fractions = {0.2, 0.5, 1.0};
  if (kind == ScenarioKind::kSkewSweep) c.fractions = {1.0};
  return c;
}

void ScenarioConfig::Validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("config: train_fraction must lie in (0, 1)");
  }
  if (fractions.empty()) throw std::invalid_argument("config: no subsample fractions");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("config: fractions must lie in (0, 1]");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("config: epsilon must be positive");
  if (K < 2) throw std::invalid_argument("config: K must be >= 2");
  if (repeats < 1) throw std::invalid_argument("config: repeats must be >= 1");
  if (permutations < 1) throw std::invalid_argument("config: permutations must be >= 1");
  if (n_draws < 1) throw std::invalid_argument("config: n_draws must be >= 1");
  if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
  for (double p : skew.keep_probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("config: keep_probs must lie in [0, 1]");
  }
  if (skew.target_value != 0 && skew.target_value != 1) {
    throw std::invalid_argument("config: skew target_value must be 0 or 1");
  }
  dpvi.Validate();
}

nlohmann::json ScenarioConfig::ToJson() const {
  nlohmann::json dp = dpvi.ToJson();
  // Set per run from the scenario.
  dp.erase("epsilon");
  dp.erase("seed");
  dp.erase("delta");
  return {{"scenario", ToString(kind)},
          {"population", population.ToJson()},
          {"train_fraction", train_fraction},
          {"fractions", fractions},
          {"epsilon", epsilon},
          {"K", K},
          {"repeats", repeats},
          {"permutations", permutations},
          {"n_draws", n_draws},
          {"include_local", include_local},
          {"dpvi", dp},
          {"skew",
           {{"feature", skew.feature},
            {"category", skew.category},
            {"target_value", skew.target_value},
            {"keep_probs", skew.keep_probs},
            {"drop_feature_arm", skew.drop_feature_arm}}},
          {"focal_parties", focal_parties},
          {"max_sharers", max_sharers},
          {"master_seed", master_seed},
          {"threads", threads}};
}

ScenarioConfig ScenarioConfig::FromJson(const nlohmann::json& j) {
  static const char* kKeys[] = {"scenario",  "population",    "train_fraction", "fractions",
                                "epsilon",   "K",             "repeats",        "permutations",
                                "n_draws",   "include_local", "dpvi",           "skew",
                                "focal_parties", "max_sharers", "master_seed",  "threads"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  ScenarioConfig c = Defaults(ParseScenarioKind(j.at("scenario").get<std::string>()));
  if (j.contains("population")) c.population = PopulationSource::FromJson(j.at("population"));
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  if (j.contains("fractions")) c.fractions = j.at("fractions").get<std::vector<double>>();
  c.epsilon = j.value("epsilon", c.epsilon);
  c.K = j.value("K", c.K);
  c.repeats = j.value("repeats", c.repeats);
  c.permutations = j.value("permutations", c.permutations);
  c.n_draws = j.value("n_draws", c.n_draws);
  c.include_local = j.value("include_local", c.include_local);
  if (j.contains("dpvi")) c.dpvi = dpvi::DpviConfig::FromJson(j.at("dpvi"));
  if (j.contains("skew")) {
    const auto& s = j.at("skew");
    c.skew.feature = s.value("feature", c.skew.feature);
    c.skew.category = s.value("category", c.skew.category);
    c.skew.target_value = s.value("target_value", c.skew.target_value);
    if (s.contains("keep_probs")) c.skew.keep_probs = s.at("keep_probs").get<std::vector<double>>();
    c.skew.drop_feature_arm = s.value("drop_feature_arm", c.skew.drop_feature_arm);
  }
  if (j.contains("focal_parties")) {
    c.focal_parties = j.at("focal_parties").get<std::vector<std::string>>();
  }
  c.max_sharers = j.value("max_sharers", c.max_sharers);
  c.master_seed = j.value("master_seed", c.master_seed);
  c.threads = j.value("threads", c.threads);
  c.Validate();
  return c;
}

}  // namespace synthtwin::runner
