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

#include "synthtwin/tabular/population.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include "synthtwin/common/random.h"
#include "synthtwin/genmodel/model.h"

namespace synthtwin::tabular {
namespace {

std::vector<double> Normalized(std::vector<double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  for (double& x : v) x /= s;
  return v;
}

std::vector<double> Tilt(std::span<const double> p, const std::vector<double>& shift) {
  std::vector<double> out(p.begin(), p.end());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] *= std::exp(shift[c]);
  return Normalized(std::move(out));
}

// Base generator: `marginals` per feature, each mixture component tilting
// them by component_tilts[r][j].
genmodel::GenerativeParams MakeBase(
    SchemaPtr schema, const std::vector<std::vector<double>>& marginals,
    const std::vector<double>& mixture,
    const std::vector<std::vector<std::vector<double>>>& component_tilts,
    const std::vector<double>& weights) {
  std::vector<double> tables;
  for (std::size_t r = 0; r < mixture.size(); ++r) {
    for (std::size_t j = 0; j < schema->num_features(); ++j) {
      std::vector<double> t = Tilt(marginals[j], component_tilts[r][j]);
      tables.insert(tables.end(), t.begin(), t.end());
    }
  }
  return genmodel::GenerativeParams(
      schema, Normalized(mixture), std::move(tables),
      Eigen::Map<const Eigen::VectorXd>(weights.data(), weights.size()));
}

}  // namespace

genmodel::GenerativeParams PartyModel(const PopulationConfig& config,
                                      std::size_t index, std::uint64_t seed) {
  const genmodel::GenerativeParams& base = config.base;
  const Schema& schema = base.schema();
  const PartySpec& party = config.parties.at(index);

  Engine rng(DeriveSeed(seed, HashLabel("party-model"), index));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> shift(schema.num_features());
  for (std::size_t j = 0; j < schema.num_features(); ++j) {
    shift[j].resize(schema.cardinality(j));
    for (double& s : shift[j]) s = config.feature_heterogeneity * normal(rng);
    auto it = party.feature_shift.find(schema.feature(j).name);
    if (it != party.feature_shift.end()) {
      if (it->second.size() != shift[j].size()) {
        throw std::invalid_argument("population: shift for '" + it->first +
                                    "' has wrong length");
      }
      for (std::size_t c = 0; c < shift[j].size(); ++c) shift[j][c] += it->second[c];
    }
  }
  const double intercept =
      party.intercept_shift + config.target_heterogeneity * normal(rng);

  std::vector<double> tables;
  tables.reserve(base.tables().size());
  for (int r = 0; r < base.components(); ++r) {
    for (std::size_t j = 0; j < schema.num_features(); ++j) {
      std::vector<double> t = Tilt(base.table(r, j), shift[j]);
      tables.insert(tables.end(), t.begin(), t.end());
    }
  }
  Eigen::VectorXd w = base.regression_weights();
  w(0) += intercept;
  auto mixture = base.mixture_weights();
  return genmodel::GenerativeParams(base.schema_ptr(),
                                    {mixture.begin(), mixture.end()},
                                    std::move(tables), std::move(w));
}

std::vector<std::pair<std::string, Dataset>> SynthesizePopulation(
    const PopulationConfig& config, std::uint64_t seed) {
  std::vector<std::pair<std::string, Dataset>> out;
  for (std::size_t m = 0; m < config.parties.size(); ++m) {
    const PartySpec& party = config.parties[m];
    genmodel::GenerativeParams truth = PartyModel(config, m, seed);
    Dataset ds = genmodel::Sample(truth, party.size,
                                  DeriveSeed(seed, HashLabel("party-rows"), m));
    out.emplace_back(party.name, ds.WithPartyLabel(party.name));
  }
  return out;
}

nlohmann::json PopulationConfig::ToJson() const {
  nlohmann::json parties_json = nlohmann::json::array();
  for (const PartySpec& p : parties) {
    nlohmann::json pj = {{"name", p.name},
                         {"size", p.size},
                         {"intercept_shift", p.intercept_shift}};
    if (!p.feature_shift.empty()) pj["feature_shift"] = p.feature_shift;
    parties_json.push_back(pj);
  }
  return {{"base_model", base.ToJson()},
          {"parties", parties_json},
          {"feature_heterogeneity", feature_heterogeneity},
          {"target_heterogeneity", target_heterogeneity}};
}

PopulationConfig PopulationConfig::FromJson(const nlohmann::json& j) {
  PopulationConfig config{genmodel::GenerativeParams::FromJson(j.at("base_model")),
                          {},
                          j.value("feature_heterogeneity", 0.0),
                          j.value("target_heterogeneity", 0.0)};
  for (const auto& pj : j.at("parties")) {
    PartySpec p;
    p.name = pj.at("name").get<std::string>();
    p.size = pj.at("size").get<std::size_t>();
    p.intercept_shift = pj.value("intercept_shift", 0.0);
    if (pj.contains("feature_shift")) {
      p.feature_shift =
          pj.at("feature_shift").get<std::map<std::string, std::vector<double>>>();
    }
    config.parties.push_back(std::move(p));
  }
  if (config.parties.empty()) throw std::invalid_argument("population: no parties");
  // Validates shift lengths.
  for (std::size_t m = 0; m < config.parties.size(); ++m) PartyModel(config, m, 0);
  return config;
}

PopulationConfig DeskPopulation() {
  SchemaPtr schema = Schema::Create(
      {{"sex", {"Female", "Male"}},
       {"age_group", {"40-54", "55-64", "65+"}},
       {"deprivation", {"low", "middle", "high"}},
       {"education", {"degree", "secondary", "none"}},
       {"ethnicity", {"White British", "South Asian", "Black", "Other"}}},
      "test_result");
  const std::vector<std::vector<double>> marginals = {
      {0.55, 0.45}, {0.35, 0.40, 0.25}, {0.40, 0.35, 0.25},
      {0.35, 0.40, 0.25}, {0.64, 0.15, 0.12, 0.09}};
  // Three components: affluent/educated, deprived, older.
  const std::vector<std::vector<std::vector<double>>> tilts = {
      {{0, 0}, {0.2, 0, -0.2}, {0.6, 0, -0.6}, {0.6, 0, -0.6}, {0.2, -0.2, -0.3, 0}},
      {{0, 0.1}, {0.1, 0, 0}, {-0.6, 0, 0.6}, {-0.4, 0, 0.4}, {-0.3, 0.4, 0.4, 0.1}},
      {{0, 0}, {-0.6, 0, 0.6}, {0, 0, 0}, {-0.2, 0, 0.3}, {0.2, -0.1, -0.2, 0}}};
  // Log-rate effects; about a third of the cohort is positive.
  const std::vector<double> weights = {-1.25, 0.15, 0.10, -0.15, 0.25, 0.50,
                                       0.15,  0.35, 0.70, 0.60,  0.30};
  PopulationConfig config{
      MakeBase(schema, marginals, {0.4, 0.35, 0.25}, tilts, weights), {}, 0.35,
      0.15};
  const std::vector<std::pair<std::string, std::size_t>> parties = {
      {"North", 800}, {"Harbour", 730}, {"Valley", 660}, {"Market", 590},
      {"Bridge", 520}, {"Castle", 450}, {"Moor", 380},  {"Fen", 300}};
  for (const auto& [name, size] : parties) config.parties.push_back({name, size, {}, 0.0});
  // The largest party under-represents minorities.
  config.parties[0].feature_shift["ethnicity"] = {0.0, -1.2, -1.2, -0.8};
  return config;
}

const std::vector<std::pair<std::string, std::size_t>>& AssessmentCentreSizes() {
  static const std::vector<std::pair<std::string, std::size_t>> kSizes = {
      {"Newcastle", 5922},  {"Bristol", 5860},        {"Reading", 4479},
      {"Leeds", 4424},      {"Bury", 4345},           {"Nottingham", 4236},
      {"Hounslow", 3984},   {"Liverpool", 3946},      {"Croydon", 3513},
      {"Birmingham", 3271}, {"Sheffield", 3042},      {"Middlesborough", 2857},
      {"Stoke", 2715},      {"Barts", 1918},          {"Manchester", 1874},
      {"Oxford", 1867}};
  return kSizes;
}

PopulationConfig AssessmentCentrePopulation(double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("population: scale must be > 0");
  const std::vector<std::string> ethnicities = {
      "White British", "White Other", "White Irish", "South Asian",
      "Black",         "Other",       "Mixed",       "Chinese"};
  SchemaPtr schema = Schema::Create(
      {{"sex", {"Female", "Male"}},
       {"age_group", {"40-54", "55-64", "65+"}},
       {"education", {"degree", "a-levels", "gcse", "none"}},
       {"ethnicity", ethnicities},
       {"deprivation", {"q1", "q2", "q3", "q4", "q5"}}},
      "test_result");
  // Full-cohort ethnicity shares (negative + positive cells, per cent).
  const std::vector<double> cohort = {88.27, 3.11, 2.65, 2.27, 2.14, 0.96, 0.60, 0.19};
  const std::vector<double> newcastle = {96.53, 1.06, 1.07, 0.53, 0.14, 0.27, 0.31, 0.04};
  const std::vector<std::vector<double>> marginals = {
      {0.54, 0.46}, {0.30, 0.40, 0.30}, {0.33, 0.22, 0.25, 0.20},
      Normalized(cohort), {0.2, 0.2, 0.2, 0.2, 0.2}};
  const std::vector<std::vector<std::vector<double>>> tilts = {
      {{0, 0}, {0.2, 0, -0.2}, {0.5, 0.2, 0, -0.5}, {0, 0, 0, 0, 0, 0, 0, 0},
       {0.5, 0.3, 0, -0.3, -0.5}},
      {{0, 0.1}, {0.1, 0, 0}, {-0.4, 0, 0.1, 0.4}, {-0.3, 0.2, 0.1, 0.6, 0.7, 0.4, 0.3, 0.3},
       {-0.5, -0.3, 0, 0.3, 0.5}},
      {{0, 0}, {-0.6, 0, 0.6}, {-0.2, 0, 0, 0.3}, {0, 0, 0, 0, 0, 0, 0, 0},
       {0, 0, 0, 0, 0}}};
  const std::vector<double> weights = {-1.3, 0.15, 0.10, -0.15, 0.10, 0.20, 0.35,
                                       0.20, 0.15, 0.70, 0.60, 0.30, 0.40, 0.20,
                                       0.10, 0.20, 0.30, 0.45};
  PopulationConfig config{
      MakeBase(schema, marginals, {0.4, 0.35, 0.25}, tilts, weights), {}, 0.25,
      0.1};
  for (const auto& [name, size] : AssessmentCentreSizes()) {
    config.parties.push_back(
        {name, static_cast<std::size_t>(std::llround(size * scale)), {}, 0.0});
  }
  std::vector<double> shift(cohort.size());
  for (std::size_t c = 0; c < cohort.size(); ++c) {
    shift[c] = std::log(newcastle[c] / cohort[c]);
  }
  config.parties[0].feature_shift["ethnicity"] = shift;
  return config;
}

PopulationConfig PopulationPreset(const std::string& name) {
  if (name == "desk") return DeskPopulation();
  if (name == "centres") return AssessmentCentrePopulation(1.0);
  if (name == "centres-quarter") return AssessmentCentrePopulation(0.25);
  throw std::invalid_argument("unknown population preset '" + name + "'");
}

}  // namespace synthtwin::tabular
