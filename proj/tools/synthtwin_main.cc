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

// synthtwin: command-line front end.
//
//   synthtwin synth-pop   --preset desk --seed 1
//   synthtwin prepare     --data north.csv --schema schema.json --fraction 0.1
//   synthtwin train-gen   --data train.csv --schema schema.json --epsilon 1
//   synthtwin sample-syn  --model model.json --K 100
//   synthtwin run baseline_sharing --config configs/baseline.json
//   synthtwin report      --run <run directory>
//
// Outputs go to a fresh run-stamped directory below $SYNTHTWIN_OUTPUT_DIR
// (default ./synthtwin-runs). Each command prints a JSON result on stdout;
// failures print a JSON error record on stderr and exit nonzero.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "synthtwin/dpvi/train.h"
#include "synthtwin/genmodel/model.h"
#include "synthtwin/pooling/pooling.h"
#include "synthtwin/runner/config.h"
#include "synthtwin/runner/report.h"
#include "synthtwin/runner/scenarios.h"
#include "synthtwin/tabular/csv.h"
#include "synthtwin/tabular/ops.h"
#include "synthtwin/tabular/population.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace synthtwin;

namespace {

fs::path OutputRoot() {
  const char* env = std::getenv("SYNTHTWIN_OUTPUT_DIR");
  return env && *env ? fs::path(env) : fs::path("synthtwin-runs");
}

// <root>/<UTC time>-<label>, made unique with a numeric suffix.
fs::path RunDirectory(const std::string& label) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%dT%H%M%SZ", std::gmtime(&now));
  const fs::path base = OutputRoot() / (std::string(stamp) + "-" + label);
  fs::path dir = base;
  for (int i = 2; fs::exists(dir); ++i) dir = base.string() + "-" + std::to_string(i);
  fs::create_directories(dir);
  return dir;
}

json ReadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

void WriteJson(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

tabular::SchemaPtr ReadSchema(const fs::path& path) {
  return tabular::Schema::FromJson(ReadJson(path));
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  CLI::App app{"Collaborative learning from differentially private synthetic twin data"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;

  // synth-pop
  auto* pop = app.add_subcommand("synth-pop", "Generate a synthetic multi-party population");
  std::string pop_preset = "desk";
  std::string pop_config;
  pop->add_option("--preset", pop_preset, "desk, centres or centres-quarter");
  pop->add_option("--config", pop_config, "Population config (JSON)");
  pop->add_option("--seed", seed, "Seed");

  // prepare
  auto* prep = app.add_subcommand("prepare", "Split one party's data and subsample its training part");
  std::string prep_data, prep_schema;
  double prep_train = 0.8, prep_fraction = 1.0;
  prep->add_option("--data", prep_data, "Party CSV")->required();
  prep->add_option("--schema", prep_schema, "Schema JSON")->required();
  prep->add_option("--train-fraction", prep_train, "Training share of the split");
  prep->add_option("--fraction", prep_fraction, "Subsample fraction of the training part");
  prep->add_option("--seed", seed, "Seed");

  // train-gen
  auto* train = app.add_subcommand("train-gen", "Train a DP generative model on one party's data");
  std::string train_data, train_schema, train_config;
  double train_eps = 1.0;
  std::optional<double> train_delta;
  std::optional<int> train_components;
  std::optional<std::int64_t> train_iterations;
  bool train_non_private = false;
  train->add_option("--data", train_data, "Training CSV")->required();
  train->add_option("--schema", train_schema, "Schema JSON")->required();
  train->add_option("--config", train_config, "DPVI settings (JSON)");
  train->add_option("--epsilon", train_eps, "Privacy budget epsilon");
  train->add_option("--delta", train_delta, "Privacy budget delta (default 1/N)");
  train->add_option("--components", train_components, "Mixture components");
  train->add_option("--iterations", train_iterations, "DP-SGD steps");
  train->add_flag("--non-private", train_non_private, "Diagnostic mode without clipping or noise");
  train->add_option("--seed", seed, "Seed");

  // sample-syn
  auto* sample = app.add_subcommand("sample-syn", "Release K synthetic data sets from a trained model");
  std::string sample_model, sample_party;
  std::size_t sample_k = 100;
  std::optional<std::size_t> sample_n;
  sample->add_option("--model", sample_model, "Trained model JSON")->required();
  sample->add_option("--K", sample_k, "Number of synthetic sets");
  sample->add_option("--n", sample_n, "Rows per set (default: training size)");
  sample->add_option("--party", sample_party, "Releasing party name")->required();
  sample->add_option("--seed", seed, "Seed");

  // run
  auto* run = app.add_subcommand("run", "Run an experiment scenario");
  std::string run_kind, run_config;
  std::optional<std::uint64_t> run_seed;
  std::optional<int> run_repeats, run_permutations, run_draws, run_threads, run_components;
  std::optional<std::size_t> run_k;
  std::optional<double> run_eps;
  std::optional<std::int64_t> run_iterations;
  std::vector<double> run_fractions;
  std::string run_population;
  run->add_option("scenario", run_kind,
                  "baseline_sharing, sequential_sharing, size_sweep or skew_sweep")
      ->required();
  run->add_option("--config", run_config, "Scenario config (JSON)");
  run->add_option("--seed", run_seed, "Master seed");
  run->add_option("--repeats", run_repeats, "Experiment repeats");
  run->add_option("--K", run_k, "Synthetic sets per release");
  run->add_option("--epsilon", run_eps, "Privacy budget epsilon");
  run->add_option("--fractions", run_fractions, "Subsample fractions");
  run->add_option("--permutations", run_permutations, "Sharing orders (sequential)");
  run->add_option("--n-draws", run_draws, "Monte-Carlo draws per fit");
  run->add_option("--iterations", run_iterations, "DP-SGD steps");
  run->add_option("--components", run_components, "Mixture components");
  run->add_option("--population", run_population, "Population preset");
  run->add_option("--threads", run_threads, "OpenMP threads (0 = default)");

  // report
  auto* rep = app.add_subcommand("report", "Recompute summaries from a run's samples.csv");
  std::string rep_run;
  rep->add_option("--run", rep_run, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", {{"type", "usage"}, {"message", e.what()}}}}.dump() << "\n";
    return 2;
  }

  try {
    json result;
    if (*pop) {
      const auto config = pop_config.empty()
                              ? tabular::PopulationPreset(pop_preset)
                              : tabular::PopulationConfig::FromJson(ReadJson(pop_config));
      const auto parties = tabular::SynthesizePopulation(config, seed);
      const fs::path dir = RunDirectory("synth-pop");
      WriteJson(dir / "schema.json", config.schema().ToJson());
      WriteJson(dir / "population.json", config.ToJson());
      json sizes = json::object();
      for (const auto& [name, data] : parties) {
        tabular::WriteCsv(dir / (name + ".csv"), data);
        sizes[name] = data.rows();
      }
      result = {{"output_dir", dir.string()}, {"parties", sizes}, {"seed", seed}};
    } else if (*prep) {
      auto schema = ReadSchema(prep_schema);
      const auto data = tabular::LoadCsv(prep_data, schema);
      auto [tr, te] = tabular::TrainTestSplit(data, prep_train, DeriveSeed(seed, "split"));
      const auto sub = tabular::Subsample(tr, prep_fraction, DeriveSeed(seed, "subsample"));
      const fs::path dir = RunDirectory("prepare");
      tabular::WriteCsv(dir / "train.csv", sub);
      tabular::WriteCsv(dir / "test.csv", te);
      result = {{"output_dir", dir.string()},
                {"train_rows", sub.rows()},
                {"test_rows", te.rows()},
                {"seed", seed}};
      WriteJson(dir / "prepare.json", result);
    } else if (*train) {
      auto schema = ReadSchema(train_schema);
      const auto data = tabular::LoadCsv(train_data, schema);
      dpvi::DpviConfig dc = train_config.empty() ? dpvi::DpviConfig{}
                                                 : dpvi::DpviConfig::FromJson(ReadJson(train_config));
      dc.epsilon = train_eps;
      if (train_delta) dc.delta = *train_delta;
      if (train_components) dc.components = *train_components;
      if (train_iterations) dc.iterations = *train_iterations;
      if (train_non_private) dc.non_private = true;
      dc.seed = seed;
      const auto trained = dpvi::Train(data, dc);
      dpvi::TrainedGenerator gen{schema, dc.components, trained.posterior, trained.accountant,
                                 dc.ToJson()};
      const fs::path dir = RunDirectory("train-gen");
      WriteJson(dir / "model.json", gen.ToJson());
      result = {{"output_dir", dir.string()},
                {"model", (dir / "model.json").string()},
                {"accountant", trained.accountant.ToJson()}};
    } else if (*sample) {
      const auto gen = dpvi::TrainedGenerator::FromJson(ReadJson(sample_model));
      const std::size_t n = sample_n.value_or(static_cast<std::size_t>(gen.accountant.dataset_size));
      const auto layout = gen.layout();
      std::vector<tabular::Dataset> sets;
      for (std::size_t k = 0; k < sample_k; ++k) {
        const auto params = dpvi::DrawGenerator(layout, gen.posterior, DeriveSeed(seed, HashLabel("draw"), k));
        sets.push_back(genmodel::Sample(params, n, DeriveSeed(seed, HashLabel("sample"), k)));
      }
      pooling::SyntheticRelease release(
          sample_party, std::move(sets), gen.accountant,
          {{"seed", seed}, {"synthetic_y", "min(Poisson(lambda), 1)"},
           {"generator_per_set", "fresh posterior draw"}});
      const fs::path dir = RunDirectory("sample-syn");
      release.Save(dir);
      result = {{"output_dir", dir.string()}, {"K", sample_k}, {"rows_per_set", n}};
    } else if (*run) {
      const auto kind = runner::ParseScenarioKind(run_kind);
      json cj = run_config.empty() ? json::object() : ReadJson(run_config);
      if (cj.contains("scenario") &&
          runner::ParseScenarioKind(cj["scenario"].get<std::string>()) != kind) {
        throw std::invalid_argument("config scenario does not match '" + run_kind + "'");
      }
      cj["scenario"] = std::string(runner::ToString(kind));
      auto config = runner::ScenarioConfig::FromJson(cj);
      if (run_seed) config.master_seed = *run_seed;
      if (run_repeats) config.repeats = *run_repeats;
      if (run_k) config.K = *run_k;
      if (run_eps) config.epsilon = *run_eps;
      if (!run_fractions.empty()) config.fractions = run_fractions;
      if (run_permutations) config.permutations = *run_permutations;
      if (run_draws) config.n_draws = *run_draws;
      if (run_iterations) config.dpvi.iterations = *run_iterations;
      if (run_components) config.dpvi.components = *run_components;
      if (!run_population.empty()) config.population = runner::PopulationSource{run_population};
      if (run_threads) config.threads = *run_threads;
      config.Validate();
      spdlog::set_level(spdlog::level::err);
      const auto record = runner::RunScenario(config);
      const fs::path dir = RunDirectory(std::string(runner::ToString(kind)));
      runner::WriteReport(dir, record);
      const auto ledger = runner::CheckLedger(record);
      result = {{"output_dir", dir.string()},
                {"sample_groups", record.samples.size()},
                {"training_runs", ledger.runs},
                {"ledger_ok", ledger.ok()},
                {"cross_party_accesses", record.audit.cross_party},
                {"wall_seconds", record.wall_seconds}};
    } else if (*rep) {
      const fs::path run_dir = rep_run;
      const auto samples = runner::ReadSamplesCsv(run_dir / "samples.csv");
      json extra = json::object();
      if (fs::exists(run_dir / "run_record.json")) {
        const json rec = ReadJson(run_dir / "run_record.json");
        extra["scenario"] = rec.at("config").at("scenario");
        extra["version"] = rec.value("version", "");
      }
      const fs::path dir = RunDirectory("report");
      runner::WriteSummaries(dir, samples, extra);
      result = {{"output_dir", dir.string()}, {"sample_groups", samples.size()}};
    }
    std::cout << result.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"type", "runtime"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
}
